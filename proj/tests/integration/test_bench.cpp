#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "apollo/bench/bench.hpp"
#include "apollo/io/csv.hpp"
#include "synth.hpp"

using namespace apollo;

namespace {

io::RunConfig small_config() {
  io::RunConfig c;
  c.data.context_length = 256;
  c.data.horizon = 32;
  c.data.num_samples = 8;
  c.data.seed = 11;
  c.predictors.main.per_frame_delay = 0.01;
  c.predictors.draft.per_frame_delay = 0.001;
  return c;
}

void write_dataset(const std::filesystem::path& p, std::uint64_t seed, std::size_t n) {
  TimeSeries ts;
  ts.values = testsupport::lowband_plus_highband(seed, n, 100.0, 5.0, 20.0, 0.4).x();
  for (double& v : ts.values) v += 3.0;
  io::write_csv(p, ts, "value");
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Drops the trailing latency column from every row of a metrics CSV.
std::string without_latency(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("two datasets produce one populated row per method") {
  testsupport::TempDir dir("bench");
  std::filesystem::create_directories(dir / "ds");
  write_dataset(dir / "ds" / "a.csv", 1, 400);
  write_dataset(dir / "ds" / "b.csv", 2, 400);
  bench::BenchOptions opts;
  opts.config = small_config();
  opts.datasets_dir = dir / "ds";
  opts.output_dir = dir / "out";
  const auto result = bench::run_bench(opts);

  CHECK(result.failures.empty());
  REQUIRE(result.rows.size() == 8);
  std::set<std::string> methods;
  for (const auto& r : result.rows) {
    methods.insert(r.method);
    CHECK(r.horizon == 32);
    for (double v : {r.wql, r.mase, r.mae, r.mse, r.latency_seconds}) CHECK(std::isfinite(v));
  }
  CHECK(methods == std::set<std::string>{"apollo", "w/o-RD", "w/o-AAQM", "w/o-AAQM-RD"});
  for (const char* f : {"metrics.csv", "metrics.json", "aggregate.csv", "curves.csv"}) {
    CHECK_MESSAGE(std::filesystem::exists(dir / "out" / f), f);
  }

  REQUIRE(result.aggregates.size() == 4);
  for (const auto& a : result.aggregates) {
    if (a.method == "w/o-AAQM-RD") {
      CHECK(a.agg_relative_wql == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(a.agg_relative_mase == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(a.agg_relative_wql > 0.0);
  }
  CHECK(result.curves.size() == 16);
}

TEST_CASE("the baseline scores one against itself") {
  testsupport::TempDir dir("bench");
  std::filesystem::create_directories(dir / "ds");
  write_dataset(dir / "ds" / "a.csv", 5, 400);
  bench::BenchOptions opts;
  opts.config = small_config();
  opts.datasets_dir = dir / "ds";
  opts.baseline = "apollo";
  const auto result = bench::run_bench(opts);
  for (const auto& a : result.aggregates) {
    if (a.method == "apollo") CHECK(a.agg_relative_wql == 1.0);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "out"));
}

TEST_CASE("a failing dataset is reported and the rest are still written") {
  testsupport::TempDir dir("bench");
  std::filesystem::create_directories(dir / "ds");
  write_dataset(dir / "ds" / "good.csv", 3, 400);
  write_dataset(dir / "ds" / "short.csv", 4, 100);
  std::ofstream(dir / "ds" / "broken.csv") << "value\n1\nfoo\n";
  bench::BenchOptions opts;
  opts.config = small_config();
  opts.datasets_dir = dir / "ds";
  opts.output_dir = dir / "out";
  opts.workers = 2;
  const auto result = bench::run_bench(opts);
  CHECK(result.failures.size() == 2);
  CHECK(result.rows.size() == 4);
  const auto csv = read_file(dir / "out" / "metrics.csv");
  CHECK(csv.find("good,") != std::string::npos);
  CHECK(csv.find("short,") == std::string::npos);
}

TEST_CASE("bench results are reproducible apart from latency") {
  testsupport::TempDir dir("bench");
  std::filesystem::create_directories(dir / "ds");
  write_dataset(dir / "ds" / "a.csv", 6, 400);
  write_dataset(dir / "ds" / "b.csv", 7, 400);
  bench::BenchOptions opts;
  opts.config = small_config();
  opts.datasets_dir = dir / "ds";
  opts.output_dir = dir / "run1";
  bench::run_bench(opts);
  opts.output_dir = dir / "run2";
  opts.workers = 2;
  bench::run_bench(opts);
  const auto a = read_file(dir / "run1" / "metrics.csv");
  REQUIRE_FALSE(a.empty());
  CHECK(without_latency(a) == without_latency(read_file(dir / "run2" / "metrics.csv")));
  CHECK(read_file(dir / "run1" / "curves.csv") == read_file(dir / "run2" / "curves.csv"));
}
