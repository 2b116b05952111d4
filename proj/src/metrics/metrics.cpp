#include "apollo/metrics/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "apollo/error.hpp"

namespace apollo::metrics {

void validate(const EvalInput& input) {
  const std::size_t h = input.ground_truth.size();
  if (h == 0) throw InputError("evaluation horizon is empty");
  if (input.forecast_samples.empty()) throw InputError("no forecast sample paths");
  for (const auto& row : input.forecast_samples) {
    if (row.size() != h) throw InputError("forecast sample path length differs from the horizon");
  }
  if (input.season_length < 1) throw InputError("season_length must be >= 1");
}

std::vector<double> default_quantile_levels() {
  return {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
}

double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InputError("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]", "eval.quantile_levels");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

std::vector<double> quantile_path(const EvalInput& input, double q) {
  validate(input);
  const std::size_t h = input.ground_truth.size();
  std::vector<double> out(h);
  std::vector<double> column(input.forecast_samples.size());
  for (std::size_t t = 0; t < h; ++t) {
    for (std::size_t s = 0; s < column.size(); ++s) column[s] = input.forecast_samples[s][t];
    out[t] = empirical_quantile(column, q);
  }
  return out;
}

std::vector<double> median_path(const EvalInput& input) { return quantile_path(input, 0.5); }

double quantile_loss(double y, double yhat, double q) {
  return 2.0 * (q * std::max(y - yhat, 0.0) + (1.0 - q) * std::max(yhat - y, 0.0));
}

double wql(const EvalInput& input, std::span<const double> quantile_levels) {
  validate(input);
  if (quantile_levels.empty()) throw InputError("no quantile levels");
  for (std::size_t i = 0; i < quantile_levels.size(); ++i) {
    const double q = quantile_levels[i];
    if (!(q > 0.0 && q < 1.0)) throw InputError("quantile levels must lie in (0, 1)");
    if (i > 0 && !(q > quantile_levels[i - 1])) {
      throw InputError("quantile levels must be sorted and distinct");
    }
  }
  double scale = 0.0;
  for (double y : input.ground_truth) scale += std::abs(y);
  if (scale == 0.0) throw UndefinedMetric("WQL is undefined for an all-zero ground truth");

  double total = 0.0;
  for (double q : quantile_levels) {
    const auto yq = quantile_path(input, q);
    double loss = 0.0;
    for (std::size_t t = 0; t < yq.size(); ++t) loss += quantile_loss(input.ground_truth[t], yq[t], q);
    total += loss / scale;
  }
  return total / static_cast<double>(quantile_levels.size());
}

double mase(const EvalInput& input) {
  validate(input);
  const auto& ctx = input.in_sample_context;
  const std::size_t m = input.season_length;
  if (ctx.size() <= m) throw InputError("in-sample context must be longer than season_length");
  double scale = 0.0;
  for (std::size_t i = m; i < ctx.size(); ++i) scale += std::abs(ctx[i] - ctx[i - m]);
  scale /= static_cast<double>(ctx.size() - m);
  if (scale == 0.0) throw UndefinedMetric("MASE is undefined: the seasonal-naive in-sample error is zero");
  return mae(input) / scale;
}

double mae(const EvalInput& input) {
  const auto yhat = median_path(input);
  double acc = 0.0;
  for (std::size_t t = 0; t < yhat.size(); ++t) acc += std::abs(input.ground_truth[t] - yhat[t]);
  return acc / static_cast<double>(yhat.size());
}

double mse(const EvalInput& input) {
  const auto yhat = median_path(input);
  double acc = 0.0;
  for (std::size_t t = 0; t < yhat.size(); ++t) {
    const double e = input.ground_truth[t] - yhat[t];
    acc += e * e;
  }
  return acc / static_cast<double>(yhat.size());
}

double aggregate_relative(std::span<const std::pair<double, double>> per_dataset) {
  if (per_dataset.empty()) throw InputError("aggregate over zero datasets");
  double log_sum = 0.0;
  for (const auto& [method, baseline] : per_dataset) {
    if (!(method > 0.0) || !(baseline > 0.0) || !std::isfinite(method) || !std::isfinite(baseline)) {
      throw InputError("aggregate relative scores must be positive and finite");
    }
    log_sum += std::log(method / baseline);
  }
  return std::exp(log_sum / static_cast<double>(per_dataset.size()));
}

MetricReport evaluate(const EvalInput& input, std::span<const double> quantile_levels) {
  MetricReport r;
  r.horizon = input.ground_truth.size();
  r.wql = wql(input, quantile_levels);
  r.mase = mase(input);
  r.mae = mae(input);
  r.mse = mse(input);
  return r;
}

std::string to_csv_row(const MetricReport& r) {
  return fmt::format("{},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}", r.dataset, r.method, r.horizon,
                     r.wql, r.mase, r.mae, r.mse, r.latency_seconds);
}

nlohmann::json to_json(const MetricReport& r) {
  return {{"dataset", r.dataset}, {"method", r.method}, {"horizon", r.horizon},
          {"wql", r.wql},         {"mase", r.mase},     {"mae", r.mae},
          {"mse", r.mse},         {"latency_s", r.latency_seconds}};
}

}  // namespace apollo::metrics
