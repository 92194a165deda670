#include "agtcnsd/timeseries.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace agtcnsd {

std::size_t TimeSeriesFrame::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw std::invalid_argument("frame: no column named '" + name + "'");
}

bool TimeSeriesFrame::has_column(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::string NormalizationStats::to_json() const {
  nlohmann::ordered_json j;
  for (const auto& [name, range] : ranges) {
    j[name] = {{"min", range.min}, {"max", range.max}};
  }
  return j.dump(2);
}

NormalizationStats NormalizationStats::from_json(const std::string& text) {
  NormalizationStats stats;
  nlohmann::json j = nlohmann::json::parse(text);
  for (auto it = j.begin(); it != j.end(); ++it) {
    stats.ranges[it.key()] = {it.value().at("min").get<double>(), it.value().at("max").get<double>()};
  }
  return stats;
}

void NormalizationStats::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("stats: cannot write " + path);
  out << to_json() << '\n';
}

NormalizationStats NormalizationStats::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("stats: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = static_cast<unsigned>((153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1);
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

}  // namespace

std::int64_t parse_iso8601(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = 0;
  int n = std::sscanf(text.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &s);
  if (n == 3) {
    sep = 'T';  // date-only
  } else if (n >= 6) {
    if (sep != 'T' && sep != ' ') throw std::invalid_argument("timestamp: bad separator in '" + text + "'");
  } else {
    throw std::invalid_argument("timestamp: cannot parse '" + text + "' as ISO-8601");
  }
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 || mi > 59 || s > 60) {
    throw std::invalid_argument("timestamp: out-of-range field in '" + text + "'");
  }
  return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
}

std::string format_iso8601(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  // civil_from_days, inverse of the above
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02lld:%02lld:%02lld", static_cast<long long>(y + (m <= 2)), m,
                d, static_cast<long long>(rem / 3600), static_cast<long long>((rem % 3600) / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

TimeSeriesFrame load_csv(const std::string& path, const std::vector<std::string>& schema) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path + "' is empty");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& cell : header) cell = trim(cell);
  if (header.size() < 2) throw std::runtime_error("load_csv: malformed header, need a timestamp column plus data");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].empty()) throw std::runtime_error("load_csv: malformed header, empty name in column " + std::to_string(i + 1));
    for (std::size_t j = i + 1; j < header.size(); ++j) {
      if (header[i] == header[j]) throw std::runtime_error("load_csv: malformed header, duplicate column '" + header[i] + "'");
    }
  }
  if (!schema.empty()) {
    std::vector<std::string> want(schema);
    if (std::vector<std::string>(header.begin() + 1, header.end()) != want) {
      throw std::runtime_error("load_csv: header of '" + path + "' does not match the expected schema");
    }
  }

  TimeSeriesFrame frame;
  frame.names.assign(header.begin() + 1, header.end());
  frame.columns.resize(frame.names.size());
  frame.flags.resize(frame.names.size());

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                               " cells, expected " + std::to_string(header.size()));
    }
    const std::string ts = trim(cells[0]);
    const std::int64_t tp = parse_iso8601(ts);
    if (!frame.time_points.empty()) {
      if (tp == frame.time_points.back()) {
        throw std::runtime_error("load_csv: duplicated timestamp '" + ts + "' at row " + std::to_string(row));
      }
      if (tp < frame.time_points.back()) {
        throw std::runtime_error("load_csv: non-monotone timestamp '" + ts + "' at row " + std::to_string(row));
      }
    }
    frame.timestamps.push_back(ts);
    frame.time_points.push_back(tp);
    for (std::size_t c = 0; c < frame.names.size(); ++c) {
      const std::string cell = trim(cells[c + 1]);
      double value = 0.0;
      if (!cell.empty() && parse_double(cell, value)) {
        frame.columns[c].push_back(value);
        frame.flags[c].push_back(CellFlag::valid);
      } else {
        frame.columns[c].push_back(0.0);
        frame.flags[c].push_back(CellFlag::missing);
      }
    }
  }
  return frame;
}

void write_csv(const TimeSeriesFrame& frame, const std::string& path, bool with_flags) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot write '" + path + "'");
  out << "timestamp";
  for (const auto& name : frame.names) {
    out << ',' << name;
    if (with_flags) out << ',' << name << "_flag";
  }
  out << '\n';
  out.precision(17);
  for (std::size_t t = 0; t < frame.length(); ++t) {
    out << frame.timestamps[t];
    for (std::size_t c = 0; c < frame.width(); ++c) {
      if (frame.flags[c][t] == CellFlag::missing) {
        out << ',';
      } else {
        out << ',' << frame.columns[c][t];
      }
      if (with_flags) out << ',' << static_cast<int>(frame.flags[c][t]);
    }
    out << '\n';
  }
}

}  // namespace agtcnsd
