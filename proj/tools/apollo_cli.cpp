// apollo: command-line front end for the anti-aliasing codec, race decoding
// and the ablation benchmark.
//
// Exit codes: 0 success, 2 bad input data, 3 bad configuration or flags,
// 4 runtime failure (including partially failed bench runs).

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "apollo/bench/bench.hpp"
#include "apollo/codec/codec.hpp"
#include "apollo/codec/token_file.hpp"
#include "apollo/error.hpp"
#include "apollo/forecast/reference.hpp"
#include "apollo/forecast/subprocess.hpp"
#include "apollo/io/config.hpp"
#include "apollo/io/csv.hpp"
#include "apollo/race/race.hpp"

namespace {

using namespace apollo;

constexpr int kExitInput = 2;
constexpr int kExitConfig = 3;
constexpr int kExitRuntime = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return kExitInput;
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::runtime: return kExitRuntime;
  }
  return kExitRuntime;
}

struct FilterFlags {
  double cutoff = 10.0;
  int order = 5;
  double fs = 100.0;
  bool no_filter = false;
  std::uint32_t quant_factor = 10000;
  std::string rounding = "floor";

  void add(CLI::App* app) {
    app->add_option("--cutoff", cutoff, "Low-pass cutoff frequency in Hz")->capture_default_str();
    app->add_option("--order", order, "Butterworth filter order (1-12)")->capture_default_str();
    app->add_option("--fs", fs, "Sampling rate of the input in Hz")->capture_default_str();
    app->add_flag("--no-filter", no_filter, "Skip the anti-aliasing filter (plain quantization)");
    app->add_option("--quant-factor", quant_factor, "Quantization factor Q; tokens lie in [0, Q]")
        ->capture_default_str();
    app->add_option("--rounding", rounding, "Grid rounding: floor or nearest")
        ->check(CLI::IsMember({"floor", "nearest"}))
        ->capture_default_str();
  }

  std::optional<dsp::FilterSpec> filter() const {
    if (no_filter) return std::nullopt;
    dsp::FilterSpec spec{order, cutoff, fs};
    dsp::validate(spec);
    return spec;
  }

  codec::QuantizationConfig quant() const {
    codec::QuantizationConfig q{quant_factor, codec::parse_rounding_mode(rounding)};
    codec::validate(q);
    return q;
  }
};

struct SeriesFlags {
  std::string input;
  std::string column = "value";
  std::size_t context = 0;

  void add(CLI::App* app, bool with_context) {
    app->add_option("--input", input, "Input CSV file with a header row")->required();
    app->add_option("--column", column, "Name of the value column")->capture_default_str();
    if (with_context) {
      app->add_option("--context", context, "Context length; 0 uses the whole series")
          ->capture_default_str();
    }
  }
};

// "ar:order=8", "seasonal_naive:period=24", "persistence", "external:<cmd>".
forecast::PredictorHandle parse_predictor(const std::string& spec, forecast::Role role) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "external") {
    if (rest.empty()) throw ConfigError("external predictor needs a command", "predictor");
    return forecast::make_subprocess_predictor(rest, role);
  }
  forecast::ReferenceParams params;
  std::size_t pos = 0;
  while (pos < rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string kv = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    pos = comma == std::string::npos ? rest.size() : comma + 1;
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in '" + kv + "'", "predictor");
    const std::string key = kv.substr(0, eq);
    std::size_t value = 0;
    try {
      value = std::stoul(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("expected an integer in '" + kv + "'", "predictor");
    }
    if (key == "order") {
      params.ar_order = value;
    } else if (key == "period") {
      params.season_length = value;
    } else {
      throw ConfigError("unknown predictor parameter '" + key + "'", "predictor");
    }
  }
  return forecast::make_reference_predictor(forecast::parse_reference_kind(kind), params, role);
}

std::vector<double> context_of(const TimeSeries& ts, std::size_t context) {
  if (context == 0 || context >= ts.size()) return ts.values;
  return {ts.values.end() - static_cast<std::ptrdiff_t>(context), ts.values.end()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anti-aliased time-series tokenization and race decoding"};
  app.require_subcommand(1);

  // quantize
  auto* quantize = app.add_subcommand("quantize", "Encode a CSV series into a token file");
  SeriesFlags q_series;
  FilterFlags q_filter;
  std::string q_output;
  q_series.add(quantize, false);
  q_filter.add(quantize);
  quantize->add_option("--output", q_output, "Output token file")->required();

  // dequantize
  auto* dequantize = app.add_subcommand("dequantize", "Decode a token file back to a CSV series");
  std::string dq_input, dq_output, dq_column = "value";
  dequantize->add_option("--input", dq_input, "Token file")->required();
  dequantize->add_option("--output", dq_output, "Output CSV file")->required();
  dequantize->add_option("--column", dq_column, "Value column name")->capture_default_str();

  // forecast
  auto* fcast = app.add_subcommand(
      "forecast", "Stream a forecast as line-delimited frames (the external predictor protocol)");
  SeriesFlags f_series;
  FilterFlags f_filter;
  std::string f_model = "ar:order=3";
  std::size_t f_horizon = 24, f_samples = 1;
  std::uint64_t f_seed = 0;
  bool f_serve = false;
  fcast->add_option("--input", f_series.input, "Input CSV file (not used with --serve)");
  fcast->add_option("--column", f_series.column, "Value column name")->capture_default_str();
  fcast->add_option("--context", f_series.context, "Context length; 0 uses the whole series")
      ->capture_default_str();
  f_filter.add(fcast);
  fcast->add_option("--model", f_model, "persistence | seasonal_naive:period=P | ar:order=P")
      ->capture_default_str();
  fcast->add_option("--horizon", f_horizon, "Frames to forecast")->capture_default_str();
  fcast->add_option("--samples", f_samples, "Sample paths per frame")->capture_default_str();
  fcast->add_option("--seed", f_seed, "Random seed")->capture_default_str();
  fcast->add_flag("--serve", f_serve, "Read a protocol request from stdin instead of --input");

  // race
  auto* race_cmd = app.add_subcommand("race", "Race a draft forecaster against a main forecaster");
  SeriesFlags r_series;
  r_series.context = 512;
  FilterFlags r_filter;
  std::string r_main = "ar:order=8", r_draft = "ar:order=2", r_report, r_norm = "rmse",
              r_compare = "median_path", r_clock = "wall";
  double r_gamma = 0.1, r_main_delay = 0.02, r_draft_delay = 0.002, r_jitter = 0.0;
  std::size_t r_horizon = 100, r_samples = 20, r_min_overlap = 0;
  std::uint64_t r_seed = 0;
  r_series.add(race_cmd, true);
  r_filter.add(race_cmd);
  race_cmd->add_option("--horizon", r_horizon, "Frames to forecast")->capture_default_str();
  race_cmd->add_option("--main", r_main, "Main predictor spec")->capture_default_str();
  race_cmd->add_option("--draft", r_draft, "Draft predictor spec")->capture_default_str();
  race_cmd->add_option("--main-delay", r_main_delay, "Simulated main latency per frame, seconds")
      ->capture_default_str();
  race_cmd->add_option("--draft-delay", r_draft_delay, "Simulated draft latency per frame, seconds")
      ->capture_default_str();
  race_cmd->add_option("--jitter", r_jitter, "Uniform per-frame latency jitter, seconds")
      ->capture_default_str();
  race_cmd->add_option("--gamma", r_gamma, "Tolerance on the prefix distance (fraction of range)")
      ->capture_default_str();
  race_cmd->add_option("--min-overlap", r_min_overlap, "Minimum main frames before checking; 0 = 5% of H")
      ->capture_default_str();
  race_cmd->add_option("--norm", r_norm, "Prefix distance: rmse or mean_abs")->capture_default_str();
  race_cmd->add_option("--compare-on", r_compare, "Summary path: median_path or mean_path")
      ->capture_default_str();
  race_cmd->add_option("--clock", r_clock, "wall or simulated")
      ->check(CLI::IsMember({"wall", "simulated"}))
      ->capture_default_str();
  race_cmd->add_option("--samples", r_samples, "Sample paths per frame")->capture_default_str();
  race_cmd->add_option("--seed", r_seed, "Random seed")->capture_default_str();
  race_cmd->add_option("--report", r_report, "Write the JSON race report here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the AAQM x race decoding ablation grid");
  std::string b_config, b_datasets, b_baseline, b_output;
  std::size_t b_workers = 0;
  bench_cmd->add_option("--config", b_config, "Run configuration (JSON); defaults when omitted");
  bench_cmd->add_option("--datasets", b_datasets, "Directory of CSV datasets")->required();
  bench_cmd->add_option("--baseline", b_baseline, "Baseline method for aggregate relative scores");
  bench_cmd->add_option("--output", b_output, "Output directory (default $APOLLO_OUTPUT_DIR or bench_out)");
  bench_cmd->add_option("--workers", b_workers, "Parallel datasets (default $APOLLO_THREADS or 1)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*quantize) {
      const auto filter = q_filter.filter();
      const auto quant = q_filter.quant();
      const TimeSeries ts = io::load_csv(q_series.input, q_series.column, std::nullopt, q_filter.fs);
      const auto tokens = codec::encode(ts.values, filter, quant);
      codec::write_token_file(q_output, tokens);
      fmt::print(stderr, "encoded {} samples (range [{}, {}]{}) into {}\n", tokens.size(), tokens.norm.min_val,
                 tokens.norm.max_val, tokens.norm.degenerate ? ", constant" : "", q_output);
      return 0;
    }

    if (*dequantize) {
      const auto tokens = codec::read_token_file(dq_input);
      TimeSeries ts;
      ts.values = codec::decode(tokens);
      io::write_csv(dq_output, ts, dq_column);
      return 0;
    }

    if (*fcast) {
      const auto handle = parse_predictor(f_model, forecast::Role::main);
      if (f_serve) {
        forecast::serve_request(handle, std::cin, std::cout);
        return 0;
      }
      if (f_series.input.empty()) throw ConfigError("--input is required without --serve", "input");
      const TimeSeries ts = io::load_csv(f_series.input, f_series.column, std::nullopt, f_filter.fs);
      forecast::ForecastRequest req;
      req.context = codec::encode(context_of(ts, f_series.context), f_filter.filter(), f_filter.quant());
      req.horizon = f_horizon;
      req.num_samples = f_samples;
      req.seed = f_seed;
      const auto result = forecast::predict(handle, req);
      for (std::size_t j = 0; j < result.frames(); ++j) {
        std::cout << forecast::format_frame_line(result.frame(j)) << '\n' << std::flush;
      }
      return 0;
    }

    if (*race_cmd) {
      race::RaceConfig cfg;
      cfg.gamma = r_gamma;
      if (r_min_overlap > 0) cfg.min_overlap = r_min_overlap;
      cfg.norm_kind = race::parse_norm_kind(r_norm);
      cfg.compare_on = race::parse_summary_path(r_compare);
      cfg.clock = r_clock == "wall" ? forecast::ClockMode::wall : forecast::ClockMode::simulated;
      race::validate(cfg);
      const auto main = forecast::with_simulated_latency(parse_predictor(r_main, forecast::Role::main),
                                                         r_main_delay, r_jitter);
      const auto draft = forecast::with_simulated_latency(parse_predictor(r_draft, forecast::Role::draft),
                                                          r_draft_delay, r_jitter);
      const auto filter = r_filter.filter();
      const auto quant = r_filter.quant();
      const TimeSeries ts = io::load_csv(r_series.input, r_series.column, std::nullopt, r_filter.fs);

      forecast::ForecastRequest req;
      req.context = codec::encode(context_of(ts, r_series.context), filter, quant);
      req.horizon = r_horizon;
      req.num_samples = r_samples;
      req.seed = r_seed;
      const auto outcome = race::race(main, draft, req, cfg);

      fmt::print("branch     {}\n", race::to_string(outcome.branch));
      fmt::print("k          {} / {}\n", outcome.k, r_horizon);
      fmt::print("delta_p    {:.6g} (gamma {:.6g})\n", outcome.delta_p, outcome.gamma);
      fmt::print("t_draft    {:.4f} s\n", outcome.t_draft);
      fmt::print("t_main     {:.4f} s{}\n", outcome.t_main, outcome.t_main_projected ? " (projected)" : "");
      fmt::print("t_check    {:.6f} s\n", outcome.t_tolerance);
      fmt::print("t_total    {:.4f} s\n", outcome.t_total);
      fmt::print("speedup    {:.2f}x\n", outcome.speedup());
      if (!outcome.note.empty()) fmt::print("note       {}\n", outcome.note);
      if (!r_report.empty()) {
        std::ofstream out(r_report);
        if (!out) throw RuntimeError("cannot open " + r_report + " for writing");
        out << race::to_json(outcome).dump(2) << '\n';
      }
      return 0;
    }

    if (*bench_cmd) {
      const auto env = io::read_env_overrides();
      bench::BenchOptions opts;
      opts.config = b_config.empty() ? io::RunConfig{} : io::load_config(b_config);
      opts.datasets_dir = b_datasets;
      if (!b_baseline.empty()) opts.baseline = b_baseline;
      opts.output_dir = !b_output.empty() ? std::filesystem::path(b_output)
                                          : env.output_dir.value_or("bench_out");
      opts.workers = b_workers > 0 ? b_workers : env.threads.value_or(1);
      const auto result = bench::run_bench(opts);

      fmt::print("{:<12} {:>8} {:>18} {:>18} {:>14}\n", "method", "horizon", "agg_rel_wql", "agg_rel_mase",
                 "latency_s");
      for (const auto& row : result.aggregates) {
        fmt::print("{:<12} {:>8} {:>18.6f} {:>18.6f} {:>14.4f}\n", row.method, row.horizon, row.agg_relative_wql,
                   row.agg_relative_mase, row.mean_latency_s);
      }
      fmt::print("wrote {}\n", opts.output_dir->string());
      for (const auto& [name, err] : result.failures) fmt::print(stderr, "dataset {} failed: {}\n", name, err);
      return result.failures.empty() ? 0 : kExitRuntime;
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
