#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "apollo/io/config.hpp"
#include "apollo/metrics/metrics.hpp"
#include "apollo/time_series.hpp"

namespace apollo::bench {

/// One cell of the ablation grid.
struct Method {
  std::string name;
  bool aaqm = true;
  bool race = true;
};

/// {AAQM on/off} x {race decoding on/off}: "apollo", "w/o-RD", "w/o-AAQM",
/// "w/o-AAQM-RD".
const std::vector<Method>& ablation_grid();

/// Metrics of one method on one dataset, plus the values at the curve
/// checkpoints H/4, H/2, 3H/4, H.
struct MethodResult {
  metrics::MetricReport report;
  std::vector<metrics::MetricReport> curve;
  std::string branch;
  std::size_t k = 0;
};

/// Runs every grid method on the last context_length + horizon samples of
/// `series`: the context is encoded (with or without the filter), forecast
/// solo or by racing, decoded with the context's normalization record and
/// scored against the held-out tail.
std::vector<MethodResult> evaluate_dataset(const std::string& name, const TimeSeries& series,
                                           const io::RunConfig& cfg);

struct AggregateRow {
  std::string method;
  std::size_t horizon = 0;
  double agg_relative_wql = 0.0;
  double agg_relative_mase = 0.0;
  double mean_latency_s = 0.0;
};

struct BenchOptions {
  io::RunConfig config;
  std::filesystem::path datasets_dir;
  /// Overrides config.eval.baseline when set.
  std::optional<std::string> baseline;
  /// Files are written here when set.
  std::optional<std::filesystem::path> output_dir;
  std::size_t workers = 1;
};

struct BenchResult {
  std::vector<metrics::MetricReport> rows;
  std::vector<AggregateRow> aggregates;
  /// Aggregate relative scores at each curve checkpoint.
  std::vector<AggregateRow> curves;
  std::vector<std::pair<std::string, std::string>> failures;
};

/// Benchmarks every *.csv in datasets_dir (sorted by file name), datasets in
/// parallel up to `workers`. A failing dataset is recorded in `failures` and
/// the run continues.
///
/// Files written to output_dir: metrics.csv, metrics.json, aggregate.csv,
/// curves.csv. With the simulated race clock every column except latency is
/// reproducible for a fixed config and seed.
BenchResult run_bench(const BenchOptions& options);

}  // namespace apollo::bench
