#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace apollo::metrics {

/// Ground truth, sampled forecasts and the in-sample history used to scale
/// MASE. forecast_samples is sample-major: forecast_samples[s][t].
struct EvalInput {
  std::vector<double> ground_truth;
  std::vector<std::vector<double>> forecast_samples;
  std::vector<double> in_sample_context;
  std::size_t season_length = 1;
};

/// Throws InputError on shape violations: empty horizon, no samples, ragged
/// sample rows, or a context no longer than season_length.
void validate(const EvalInput& input);

/// The nine deciles used by default.
std::vector<double> default_quantile_levels();

/// Empirical q-quantile with linear interpolation between order statistics
/// (position q * (n - 1) in the sorted values).
double empirical_quantile(std::span<const double> values, double q);

/// Per-step empirical q-quantile across sample paths.
std::vector<double> quantile_path(const EvalInput& input, double q);

/// Per-step median across sample paths; the point forecast for MASE/MAE/MSE.
std::vector<double> median_path(const EvalInput& input);

/// Pinball loss scaled by two so that the q = 0.5 loss equals |y - yhat|.
double quantile_loss(double y, double yhat, double q);

/// Weighted quantile loss averaged over levels:
///   mean_q [ sum_t QL_q(y_t, yhat^q_t) / sum_t |y_t| ].
/// Throws UndefinedMetric when the ground truth is all zero.
double wql(const EvalInput& input, std::span<const double> quantile_levels);
inline double wql(const EvalInput& input) { return wql(input, default_quantile_levels()); }

/// Mean absolute error of the median path over the mean seasonal-naive
/// error of the context, mean_i |x_i - x_{i-m}|. Throws UndefinedMetric
/// when that scale is zero.
double mase(const EvalInput& input);

double mae(const EvalInput& input);
double mse(const EvalInput& input);

/// Geometric mean of method / baseline over datasets. Scores must be > 0.
double aggregate_relative(std::span<const std::pair<double, double>> per_dataset);

struct MetricReport {
  std::string dataset;
  std::string method;
  std::size_t horizon = 0;
  double wql = 0.0;
  double mase = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  double latency_seconds = 0.0;
};

/// All four accuracy metrics for one input; latency left at zero.
MetricReport evaluate(const EvalInput& input, std::span<const double> quantile_levels);

inline constexpr const char* kCsvHeader = "dataset,method,horizon,wql,mase,mae,mse,latency_s";

/// One CSV row matching kCsvHeader. Values use 17 significant digits.
std::string to_csv_row(const MetricReport& r);
nlohmann::json to_json(const MetricReport& r);

}  // namespace apollo::metrics
