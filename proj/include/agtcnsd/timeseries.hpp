#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace agtcnsd {

enum class CellFlag : std::uint8_t { valid, missing, outlier };

/// Timestamped multivariate series. Column-major: columns[c][t] pairs with
/// flags[c][t] and timestamps[t]. Timestamps are strictly increasing.
struct TimeSeriesFrame {
  std::vector<std::string> timestamps;     // original ISO-8601 strings
  std::vector<std::int64_t> time_points;   // parsed, seconds since epoch
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  std::vector<std::vector<CellFlag>> flags;

  std::size_t length() const { return timestamps.size(); }
  std::size_t width() const { return names.size(); }
  std::size_t column_index(const std::string& name) const;  // throws if absent
  bool has_column(const std::string& name) const;
};

/// Per-column min/max captured from a training region and reused verbatim
/// for validation/test data.
struct NormalizationStats {
  struct Range {
    double min = 0.0;
    double max = 0.0;
  };
  std::map<std::string, Range> ranges;

  std::string to_json() const;
  static NormalizationStats from_json(const std::string& text);
  void save(const std::string& path) const;
  static NormalizationStats load(const std::string& path);
};

/// Seconds since the Unix epoch for an ISO-8601 local timestamp
/// (YYYY-MM-DD[T ]HH:MM[:SS], date-only accepted). Throws on anything else.
std::int64_t parse_iso8601(const std::string& text);
std::string format_iso8601(std::int64_t seconds);

/// Reads a CSV with a header row whose first column is the timestamp.
/// Empty or unparseable value cells are flagged missing. When schema is
/// non-empty the header must match it exactly.
TimeSeriesFrame load_csv(const std::string& path, const std::vector<std::string>& schema = {});

/// Writes the frame back out; with_flags adds a <name>_flag column per
/// parameter (0 valid, 1 missing, 2 outlier).
void write_csv(const TimeSeriesFrame& frame, const std::string& path, bool with_flags = false);

}  // namespace agtcnsd
