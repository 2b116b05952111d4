#include "apollo/bench/bench.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <limits>
#include <thread>

#include "apollo/codec/codec.hpp"
#include "apollo/error.hpp"
#include "apollo/io/csv.hpp"
#include "apollo/race/race.hpp"

namespace apollo::bench {
namespace {

std::vector<std::size_t> curve_checkpoints(std::size_t horizon) {
  std::vector<std::size_t> out;
  for (std::size_t quarter = 1; quarter <= 4; ++quarter) {
    const std::size_t h = std::max<std::size_t>(1, horizon * quarter / 4);
    if (out.empty() || out.back() != h) out.push_back(h);
  }
  return out;
}

metrics::EvalInput truncated(const metrics::EvalInput& in, std::size_t h) {
  metrics::EvalInput out;
  out.ground_truth.assign(in.ground_truth.begin(), in.ground_truth.begin() + static_cast<std::ptrdiff_t>(h));
  out.in_sample_context = in.in_sample_context;
  out.season_length = in.season_length;
  for (const auto& row : in.forecast_samples) {
    out.forecast_samples.emplace_back(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(h));
  }
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void write_aggregates(const std::vector<AggregateRow>& rows, const std::filesystem::path& path,
                      bool with_latency) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  out << "method,horizon,agg_relative_wql,agg_relative_mase" << (with_latency ? ",mean_latency_s" : "") << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{},{:.17g},{:.17g}", r.method, r.horizon, r.agg_relative_wql, r.agg_relative_mase);
    if (with_latency) out << fmt::format(",{:.17g}", r.mean_latency_s);
    out << '\n';
  }
}

}  // namespace

const std::vector<Method>& ablation_grid() {
  static const std::vector<Method> grid{
      {"apollo", true, true},
      {"w/o-RD", true, false},
      {"w/o-AAQM", false, true},
      {"w/o-AAQM-RD", false, false},
  };
  return grid;
}

std::vector<MethodResult> evaluate_dataset(const std::string& name, const TimeSeries& series,
                                           const io::RunConfig& cfg) {
  const auto& d = cfg.data;
  const std::size_t n = series.size();
  if (n < d.context_length + d.horizon) {
    throw InputError(fmt::format("{}: {} samples, need context_length + horizon = {}", name, n,
                                 d.context_length + d.horizon));
  }
  const auto first = series.values.begin() + static_cast<std::ptrdiff_t>(n - d.horizon - d.context_length);
  const std::vector<double> context(first, first + static_cast<std::ptrdiff_t>(d.context_length));
  const std::vector<double> truth(first + static_cast<std::ptrdiff_t>(d.context_length), series.values.end());

  const auto main = io::build_predictor(cfg.predictors.main, forecast::Role::main);
  const auto draft = io::build_predictor(cfg.predictors.draft, forecast::Role::draft);

  std::vector<MethodResult> results;
  for (const Method& method : ablation_grid()) {
    const auto filter = method.aaqm ? std::optional<dsp::FilterSpec>(cfg.filter) : std::nullopt;
    forecast::ForecastRequest req;
    req.context = codec::encode(context, filter, cfg.quant);
    req.horizon = d.horizon;
    req.num_samples = d.num_samples;
    req.seed = d.seed;

    MethodResult res;
    forecast::ForecastResult fc;
    double latency = 0.0;
    if (method.race) {
      const race::RaceOutcome outcome = race::race(main, draft, req, cfg.race);
      fc = outcome.forecast;
      latency = outcome.t_total;
      res.branch = std::string(race::to_string(outcome.branch));
      res.k = outcome.k;
    } else {
      const auto t0 = std::chrono::steady_clock::now();
      forecast::StreamOptions opts;
      opts.clock = cfg.race.clock;
      opts.epoch = t0;
      fc = forecast::predict(main, req, opts);
      latency = cfg.race.clock == forecast::ClockMode::simulated
                    ? fc.frame_done_at.back()
                    : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      res.branch = "solo";
      res.k = d.horizon;
    }

    metrics::EvalInput input;
    input.ground_truth = truth;
    input.in_sample_context = context;
    input.season_length = d.season_length;
    for (std::size_t s = 0; s < fc.num_samples; ++s) {
      input.forecast_samples.push_back(codec::decode(fc.path(s), req.context));
    }

    res.report = metrics::evaluate(input, cfg.eval.quantile_levels);
    res.report.dataset = name;
    res.report.method = method.name;
    res.report.latency_seconds = latency;
    for (std::size_t h : curve_checkpoints(d.horizon)) {
      auto r = metrics::evaluate(truncated(input, h), cfg.eval.quantile_levels);
      r.dataset = name;
      r.method = method.name;
      res.curve.push_back(r);
    }
    results.push_back(std::move(res));
  }
  return results;
}

BenchResult run_bench(const BenchOptions& options) {
  io::RunConfig cfg = options.config;
  if (options.baseline) cfg.eval.baseline = *options.baseline;
  io::validate(cfg);
  const auto& grid = ablation_grid();
  if (std::none_of(grid.begin(), grid.end(), [&](const Method& m) { return m.name == cfg.eval.baseline; })) {
    throw ConfigError("baseline '" + cfg.eval.baseline + "' is not a bench method", "eval.baseline");
  }

  std::vector<std::filesystem::path> files;
  if (!std::filesystem::is_directory(options.datasets_dir)) {
    throw InputError("datasets directory " + options.datasets_dir.string() + " does not exist");
  }
  for (const auto& entry : std::filesystem::directory_iterator(options.datasets_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .csv datasets in " + options.datasets_dir.string());

  struct Slot {
    std::vector<MethodResult> results;
    std::optional<std::string> error;
  };
  std::vector<Slot> slots(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const std::string name = files[i].stem().string();
      try {
        io::DatasetSpec spec;
        spec.path = files[i];
        spec.value_column = cfg.data.value_column;
        spec.timestamp_column = cfg.data.timestamp_column;
        spec.sample_rate_hz = cfg.filter.sample_rate_hz;
        spec.context_length = cfg.data.context_length;
        spec.horizon = cfg.data.horizon;
        spec.season_length = cfg.data.season_length;
        slots[i].results = evaluate_dataset(name, io::load_csv(spec), cfg);
      } catch (const std::exception& e) {
        slots[i].error = e.what();
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, files.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  BenchResult out;
  std::vector<const std::vector<MethodResult>*> ok;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (slots[i].error) {
      out.failures.emplace_back(files[i].stem().string(), *slots[i].error);
      continue;
    }
    ok.push_back(&slots[i].results);
    for (const auto& r : slots[i].results) out.rows.push_back(r.report);
  }

  const std::size_t baseline_idx = static_cast<std::size_t>(
      std::find_if(grid.begin(), grid.end(), [&](const Method& m) { return m.name == cfg.eval.baseline; }) -
      grid.begin());
  const auto checkpoints = curve_checkpoints(cfg.data.horizon);
  auto aggregate = [&](std::size_t method_idx, auto score) {
    std::vector<std::pair<double, double>> pairs;
    for (const auto* ds : ok) pairs.emplace_back(score((*ds)[method_idx]), score((*ds)[baseline_idx]));
    try {
      return metrics::aggregate_relative(pairs);
    } catch (const Error&) {
      return std::numeric_limits<double>::quiet_NaN();
    }
  };

  if (!ok.empty()) {
    for (std::size_t m = 0; m < grid.size(); ++m) {
      AggregateRow row;
      row.method = grid[m].name;
      row.horizon = cfg.data.horizon;
      row.agg_relative_wql = aggregate(m, [](const MethodResult& r) { return r.report.wql; });
      row.agg_relative_mase = aggregate(m, [](const MethodResult& r) { return r.report.mase; });
      std::vector<double> lat;
      for (const auto* ds : ok) lat.push_back((*ds)[m].report.latency_seconds);
      row.mean_latency_s = mean(lat);
      out.aggregates.push_back(row);

      for (std::size_t c = 0; c < checkpoints.size(); ++c) {
        AggregateRow pt;
        pt.method = grid[m].name;
        pt.horizon = checkpoints[c];
        pt.agg_relative_wql = aggregate(m, [c](const MethodResult& r) { return r.curve[c].wql; });
        pt.agg_relative_mase = aggregate(m, [c](const MethodResult& r) { return r.curve[c].mase; });
        out.curves.push_back(pt);
      }
    }
  }

  if (options.output_dir) {
    std::filesystem::create_directories(*options.output_dir);
    io::save_reports_csv(out.rows, *options.output_dir / "metrics.csv");
    io::save_reports_json(out.rows, *options.output_dir / "metrics.json");
    write_aggregates(out.aggregates, *options.output_dir / "aggregate.csv", true);
    write_aggregates(out.curves, *options.output_dir / "curves.csv", false);
  }
  return out;
}

}  // namespace apollo::bench
