#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "agtcnsd/pipeline.hpp"
#include "agtcnsd/timeseries.hpp"
#include "doctest.h"

using namespace agtcnsd;

namespace {

TimeSeriesFrame make_frame(std::vector<std::string> names, std::vector<std::vector<double>> columns) {
  TimeSeriesFrame f;
  f.names = std::move(names);
  f.columns = std::move(columns);
  const std::size_t n = f.columns[0].size();
  for (std::size_t c = 0; c < f.columns.size(); ++c) f.flags.emplace_back(n, CellFlag::valid);
  const std::int64_t start = parse_iso8601("2021-06-01T00:00:00");
  for (std::size_t t = 0; t < n; ++t) {
    f.time_points.push_back(start + static_cast<std::int64_t>(t) * 3600);
    f.timestamps.push_back(format_iso8601(f.time_points.back()));
  }
  return f;
}

std::string temp_csv(const std::string& name, const std::string& body) {
  const std::string path = std::string("/tmp/agtcnsd_test_") + name;
  std::ofstream out(path);
  out << body;
  return path;
}

// Straight transcription of the correlation formula, kept independent of
// the library implementation.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i] / n;
    my += y[i] / n;
  }
  double num = 0.0, dx = 0.0, dy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    num += (x[i] - mx) * (y[i] - my);
    dx += (x[i] - mx) * (x[i] - mx);
    dy += (y[i] - my) * (y[i] - my);
  }
  return num / (std::sqrt(dx) * std::sqrt(dy));
}

}  // namespace

TEST_CASE("load_csv: happy path, missing cells, schema") {
  const std::string path = temp_csv("ok.csv",
                                    "timestamp,A,B\n"
                                    "2020-01-01T00:00:00,1.5,2\n"
                                    "2020-01-01T00:30:00,,3\n"
                                    "2020-01-01T01:00:00,2.5,4\n");
  TimeSeriesFrame f = load_csv(path);
  CHECK(f.length() == 3);
  CHECK(f.width() == 2);
  CHECK(f.flags[0][1] == CellFlag::missing);
  CHECK(f.flags[0][0] == CellFlag::valid);
  CHECK(f.columns[1][2] == 4.0);

  CHECK_NOTHROW(load_csv(path, {"A", "B"}));
  CHECK_THROWS_WITH_AS(load_csv(path, {"A", "C"}), doctest::Contains("schema"), std::runtime_error);
  CHECK_THROWS_AS(load_csv("/tmp/agtcnsd_no_such_file.csv"), std::runtime_error);
}

TEST_CASE("load_csv: duplicate and non-monotone timestamps name the row") {
  const std::string dup = temp_csv("dup.csv",
                                   "timestamp,A\n"
                                   "2020-01-01T00:00:00,1\n"
                                   "2020-01-01T00:00:00,2\n");
  CHECK_THROWS_WITH_AS(load_csv(dup), doctest::Contains("row 3"), std::runtime_error);

  const std::string back = temp_csv("back.csv",
                                    "timestamp,A\n"
                                    "2020-01-01T01:00:00,1\n"
                                    "2020-01-01T00:00:00,2\n");
  CHECK_THROWS_WITH_AS(load_csv(back), doctest::Contains("non-monotone"), std::runtime_error);

  const std::string dup_header = temp_csv("duphdr.csv", "timestamp,A,A\n2020-01-01,1,2\n");
  CHECK_THROWS_WITH_AS(load_csv(dup_header), doctest::Contains("header"), std::runtime_error);
}

TEST_CASE("csv round trip preserves values and missing cells") {
  TimeSeriesFrame f = make_frame({"A", "B"}, {{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  f.flags[1][1] = CellFlag::missing;
  const std::string path = "/tmp/agtcnsd_test_roundtrip.csv";
  write_csv(f, path);
  TimeSeriesFrame g = load_csv(path);
  CHECK(g.columns[0] == f.columns[0]);
  CHECK(g.flags[1][1] == CellFlag::missing);
  CHECK(g.timestamps == f.timestamps);
}

TEST_CASE("pauta: constant column flags nothing") {
  TimeSeriesFrame f = make_frame({"A"}, {{5.0, 5.0, 5.0, 5.0}});
  TimeSeriesFrame out = flag_outliers_pauta(f);
  for (CellFlag flag : out.flags[0]) CHECK(flag == CellFlag::valid);
}

TEST_CASE("pauta: gross error beyond 3 sigma is flagged, verified by brute force") {
  // A single deviant among n cells sits at sqrt(n-1) sigma, so n must be
  // at least 11 for the strict criterion to fire (n=10 lands exactly on
  // the boundary). Eleven ones plus the gross error gives sqrt(11) sigma.
  std::vector<double> column{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 100};
  const double n = static_cast<double>(column.size());
  double mean = 0.0;
  for (double v : column) mean += v / n;
  double var = 0.0;
  for (double v : column) var += (v - mean) * (v - mean) / n;
  const double sigma = std::sqrt(var);
  REQUIRE(std::abs(100.0 - mean) > 3.0 * sigma);
  REQUIRE(std::abs(1.0 - mean) <= 3.0 * sigma);

  TimeSeriesFrame out = flag_outliers_pauta(make_frame({"A"}, {column}));
  for (std::size_t t = 0; t + 1 < column.size(); ++t) CHECK(out.flags[0][t] == CellFlag::valid);
  CHECK(out.flags[0][column.size() - 1] == CellFlag::outlier);
}

TEST_CASE("pauta: a cell at exactly 3 sigma stays valid (strict inequality)") {
  // Nine zeros and one d: the deviant sits at sqrt(n-1) sigma, so n=10
  // puts it exactly on the boundary. Verified by brute force first.
  std::vector<double> column{0, 0, 0, 0, 0, 0, 0, 0, 0, 10};
  double mean = 0.0;
  for (double v : column) mean += v / 10.0;
  double var = 0.0;
  for (double v : column) var += (v - mean) * (v - mean) / 10.0;
  REQUIRE(std::abs(10.0 - mean) == doctest::Approx(3.0 * std::sqrt(var)).epsilon(1e-15));

  TimeSeriesFrame out = flag_outliers_pauta(make_frame({"A"}, {column}));
  for (CellFlag flag : out.flags[0]) CHECK(flag == CellFlag::valid);
}

TEST_CASE("pauta: mean and sigma come from valid cells only") {
  // Eleven valid cells, one deviant: it sits at sqrt(10) sigma > 3 sigma.
  // The masked 100 must not contribute to the moments.
  TimeSeriesFrame f = make_frame({"A"}, {{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 100}});
  f.flags[0][11] = CellFlag::missing;
  TimeSeriesFrame out = flag_outliers_pauta(f);
  for (std::size_t t = 0; t < 10; ++t) CHECK(out.flags[0][t] == CellFlag::valid);
  CHECK(out.flags[0][10] == CellFlag::outlier);
  CHECK(out.flags[0][11] == CellFlag::missing);
}

TEST_CASE("pauta: a column without two valid cells is rejected") {
  TimeSeriesFrame f = make_frame({"A"}, {{1.0, 2.0, 3.0}});
  f.flags[0][0] = f.flags[0][1] = f.flags[0][2] = CellFlag::missing;
  CHECK_THROWS_AS(flag_outliers_pauta(f), std::runtime_error);
}

TEST_CASE("pauta then interpolation is idempotent on Gaussian data") {
  // Truncated Gaussian noise keeps the clean portion inside 3 sigma, so the
  // premise of the idempotence claim holds by construction.
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> column(500);
  for (std::size_t i = 0; i < column.size(); ++i) {
    double z = gauss(rng);
    while (std::abs(z) > 2.5) z = gauss(rng);
    column[i] = 10.0 + 2.0 * z;
  }
  column[100] = 60.0;  // a gross error

  TimeSeriesFrame cleaned = interpolate_linear(flag_outliers_pauta(make_frame({"A"}, {column})));
  TimeSeriesFrame second = flag_outliers_pauta(cleaned);
  for (CellFlag flag : second.flags[0]) CHECK(flag == CellFlag::valid);
}

TEST_CASE("interpolation: midpoint, edges, equal spacing") {
  TimeSeriesFrame f = make_frame({"A"}, {{1.0, 0.0, 3.0}});
  f.flags[0][1] = CellFlag::missing;
  CHECK(interpolate_linear(f).columns[0][1] == doctest::Approx(2.0).epsilon(1e-15));

  TimeSeriesFrame lead = make_frame({"A"}, {{0.0, 0.0, 5.0, 6.0}});
  lead.flags[0][0] = lead.flags[0][1] = CellFlag::missing;
  TimeSeriesFrame lead_out = interpolate_linear(lead);
  CHECK(lead_out.columns[0][0] == 5.0);
  CHECK(lead_out.columns[0][1] == 5.0);

  TimeSeriesFrame gap = make_frame({"A"}, {{0.0, -1.0, -1.0, -1.0, 4.0}});
  gap.flags[0][1] = gap.flags[0][2] = CellFlag::outlier;
  gap.flags[0][3] = CellFlag::missing;
  TimeSeriesFrame gap_out = interpolate_linear(gap);
  CHECK(gap_out.columns[0][1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(gap_out.columns[0][2] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(gap_out.columns[0][3] == doctest::Approx(3.0).epsilon(1e-15));
  for (CellFlag flag : gap_out.flags[0]) CHECK(flag == CellFlag::valid);
}

TEST_CASE("interpolation: valid cells pass through bitwise, empty column rejected") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  std::vector<double> column(64);
  for (double& v : column) v = dist(rng);
  TimeSeriesFrame f = make_frame({"A"}, {column});
  for (std::size_t t = 5; t < 60; t += 7) f.flags[0][t] = CellFlag::missing;
  TimeSeriesFrame out = interpolate_linear(f);
  for (std::size_t t = 0; t < column.size(); ++t) {
    if (f.flags[0][t] == CellFlag::valid) CHECK(out.columns[0][t] == column[t]);
  }

  TimeSeriesFrame dead = make_frame({"A"}, {{1.0, 2.0}});
  dead.flags[0][0] = dead.flags[0][1] = CellFlag::outlier;
  CHECK_THROWS_AS(interpolate_linear(dead), std::runtime_error);
}

TEST_CASE("downsample keeps every factor-th row from index 0") {
  TimeSeriesFrame f = make_frame({"A"}, {{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}});
  CHECK(downsample(f, 1).columns[0] == f.columns[0]);
  CHECK(downsample(f, 2).columns[0] == std::vector<double>{0, 2, 4, 6, 8});

  TimeSeriesFrame g = make_frame({"A"}, {{0, 1, 2, 3, 4, 5, 6}});
  TimeSeriesFrame h = downsample(g, 3);
  CHECK(h.columns[0] == std::vector<double>{0, 3, 6});
  CHECK(h.length() == 3);
  CHECK(h.timestamps[1] == g.timestamps[3]);
  CHECK_THROWS_AS(downsample(f, 0), std::invalid_argument);
}

TEST_CASE("pearson: exact cases and the worked example") {
  std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  std::vector<double> neg{-1.0, -2.0, -3.0, -4.0};
  CHECK(pearson(x, x) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));

  std::vector<double> a{1.0, 2.0, 3.0};
  std::vector<double> b{1.0, 2.0, 4.0};
  CHECK(pearson(a, b) == doctest::Approx(pearson_oracle(a, b)).epsilon(1e-14));

  CHECK_THROWS_AS(pearson({1.0, 1.0, 1.0}, a), std::invalid_argument);
  CHECK_THROWS_AS(pearson({1.0}, {2.0}), std::invalid_argument);
}

TEST_CASE("pearson properties: symmetry and positive-affine invariance") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(32), y(32);
    for (std::size_t i = 0; i < 32; ++i) {
      x[i] = dist(rng);
      y[i] = dist(rng);
    }
    const double r = pearson(x, y);
    CHECK(std::abs(r) <= 1.0 + 1e-12);
    CHECK(std::abs(r - pearson(y, x)) < 1e-12);

    const double a = 0.5 + std::abs(dist(rng));
    const double b = dist(rng);
    std::vector<double> scaled(32);
    for (std::size_t i = 0; i < 32; ++i) scaled[i] = a * x[i] + b;
    CHECK(std::abs(pearson(scaled, y) - r) < 1e-9);
  }
}

TEST_CASE("select_features: target first, noise excluded, duplicates collapsed") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = 400;
  std::vector<double> target(n), correlated(n), noise(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = std::sin(0.1 * static_cast<double>(i)) + 0.1 * gauss(rng);
    correlated[i] = 0.8 * target[i] + 0.1 * gauss(rng);
    noise[i] = gauss(rng);
  }
  REQUIRE(std::abs(pearson_oracle(noise, target)) < 0.2);  // the seed keeps it below threshold
  std::vector<double> duplicate = correlated;

  TimeSeriesFrame f = make_frame({"noise", "dup", "Chl", "corr"}, {noise, duplicate, target, correlated});
  const std::vector<std::string> picked = select_features(f, "Chl", 0.2);
  REQUIRE(!picked.empty());
  CHECK(picked[0] == "Chl");
  // exactly one of the identical pair survives, noise is out
  int pair_count = 0;
  for (const auto& name : picked) {
    CHECK(name != "noise");
    if (name == "dup" || name == "corr") ++pair_count;
  }
  CHECK(pair_count == 1);
  CHECK_THROWS_AS(select_features(f, "absent", 0.2), std::invalid_argument);
}

TEST_CASE("select_features: constant columns are skipped, not fatal") {
  TimeSeriesFrame f = make_frame({"Chl", "const", "copy"},
                                 {{1, 2, 3, 4, 5, 6}, {7, 7, 7, 7, 7, 7}, {1, 2, 3, 4, 5, 6}});
  const std::vector<std::string> picked = select_features(f, "Chl", 0.2);
  CHECK(picked == std::vector<std::string>{"Chl", "copy"});
}

TEST_CASE("minmax: endpoints, degenerate column, no clamping") {
  TimeSeriesFrame f = make_frame({"A", "B"}, {{0.0, 5.0, 10.0}, {3.0, 3.0, 3.0}});
  auto [scaled, stats] = minmax_fit_transform(f);
  CHECK(scaled.columns[0] == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(scaled.columns[1] == std::vector<double>{0.0, 0.0, 0.0});
  CHECK(stats.ranges.at("A").min == 0.0);
  CHECK(stats.ranges.at("A").max == 10.0);

  TimeSeriesFrame test = make_frame({"A", "B"}, {{-5.0, 20.0}, {3.0, 3.0}});
  auto [applied, reused] = minmax_fit_transform(test, &stats);
  CHECK(applied.columns[0][0] == doctest::Approx(-0.5).epsilon(1e-15));  // below the fitted min
  CHECK(applied.columns[0][1] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(reused.ranges.at("A").max == 10.0);
}

TEST_CASE("minmax with self-derived stats maps every column onto [0,1] exactly") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-100.0, 100.0);
  std::vector<std::vector<double>> columns(3, std::vector<double>(50));
  for (auto& column : columns) {
    for (double& v : column) v = dist(rng);
  }
  TimeSeriesFrame f = make_frame({"A", "B", "C"}, columns);
  auto [scaled, stats] = minmax_fit_transform(f);
  for (std::size_t c = 0; c < 3; ++c) {
    double lo = 1e30, hi = -1e30;
    for (double v : scaled.columns[c]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    CHECK(lo == 0.0);
    CHECK(hi == 1.0);
  }
}

TEST_CASE("normalization stats JSON round trip") {
  NormalizationStats stats;
  stats.ranges["Chl"] = {0.25, 7.5};
  stats.ranges["Temp"] = {-3.0, 3.0};
  NormalizationStats back = NormalizationStats::from_json(stats.to_json());
  CHECK(back.ranges.at("Chl").min == 0.25);
  CHECK(back.ranges.at("Chl").max == 7.5);
  CHECK(back.ranges.at("Temp").min == -3.0);
}

TEST_CASE("make_windows: counts, boundary, and the too-short error") {
  std::vector<double> t0(100), t1(100);
  for (std::size_t i = 0; i < 100; ++i) {
    t0[i] = static_cast<double>(i);
    t1[i] = 2.0 * static_cast<double>(i);
  }
  TimeSeriesFrame f = make_frame({"Chl", "B"}, {t0, t1});
  WindowedDataset ds = make_windows(f, "Chl", 12, 12);
  CHECK(ds.count() == 77);  // 100 - 12 - 12 + 1
  CHECK(ds.inputs[0].size() == 12 * 2);
  CHECK(ds.targets[0].size() == 12);
  // window 0 inputs rows 0..11, targets rows 12..23 of the target column
  CHECK(ds.inputs[0][0] == 0.0);
  CHECK(ds.inputs[0][1] == 0.0);
  CHECK(ds.targets[0][0] == 12.0);
  CHECK(ds.targets[0][11] == 23.0);
  // target window follows the input window with no gap, for every i
  for (std::size_t i = 0; i < ds.count(); ++i) {
    CHECK(ds.inputs[i][(12 - 1) * 2] == static_cast<double>(i + 11));
    CHECK(ds.targets[i][0] == static_cast<double>(i + 12));
  }

  TimeSeriesFrame small = make_frame({"Chl"}, {{1, 2, 3, 4, 5}});
  CHECK(make_windows(small, "Chl", 3, 2).count() == 1);
  CHECK_THROWS_WITH_AS(make_windows(small, "Chl", 3, 3), doctest::Contains("needs at least 6"),
                       std::invalid_argument);
}

TEST_CASE("chronological split: floor allocation with the tail to test") {
  std::vector<double> v(40);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  WindowedDataset ds = make_windows(make_frame({"Chl"}, {v}), "Chl", 20, 11);
  REQUIRE(ds.count() == 10);

  auto parts = chronological_split(ds, {0.7, 0.15, 0.15});
  CHECK(parts[0].count() == 7);
  CHECK(parts[1].count() == 1);
  CHECK(parts[2].count() == 2);
  // chronological: last train target < first val target < first test target
  CHECK(parts[0].targets.back()[0] < parts[1].targets.front()[0]);
  CHECK(parts[1].targets.back()[0] < parts[2].targets.front()[0]);

  CHECK_THROWS_AS(chronological_split(ds, {1.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(chronological_split(ds, {0.5, 0.3, 0.3}), std::invalid_argument);
}
