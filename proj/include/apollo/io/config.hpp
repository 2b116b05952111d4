#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "apollo/codec/codec.hpp"
#include "apollo/dsp/butterworth.hpp"
#include "apollo/forecast/predictor.hpp"
#include "apollo/metrics/metrics.hpp"
#include "apollo/race/race.hpp"

namespace apollo::io {

/// One forecaster: a reference kind ("persistence", "seasonal_naive",
/// "ar") or "external" with a shell command speaking the line protocol.
struct PredictorConfig {
  std::string kind = "ar";
  std::size_t season_length = 1;
  std::size_t ar_order = 1;
  std::string command;
  double per_frame_delay = 0.0;
  double jitter = 0.0;

  bool operator==(const PredictorConfig&) const = default;
};

struct PredictorPair {
  PredictorConfig main{"ar", 1, 8, {}, 0.020, 0.0};
  PredictorConfig draft{"ar", 1, 2, {}, 0.002, 0.0};

  bool operator==(const PredictorPair&) const = default;
};

struct DataConfig {
  std::string value_column = "value";
  std::optional<std::string> timestamp_column;
  std::size_t context_length = 512;
  std::size_t horizon = 64;
  std::size_t season_length = 1;
  std::size_t num_samples = 20;
  std::uint64_t seed = 0;

  bool operator==(const DataConfig&) const = default;
};

struct EvalConfig {
  std::vector<double> quantile_levels = metrics::default_quantile_levels();
  std::string baseline = "w/o-AAQM-RD";

  bool operator==(const EvalConfig&) const = default;
};

/// Everything a bench or race run needs. The filter's sample rate is the
/// dataset's sampling rate.
struct RunConfig {
  dsp::FilterSpec filter{};
  codec::QuantizationConfig quant{};
  race::RaceConfig race{0.1, std::nullopt, race::NormKind::rmse, race::SummaryPath::median_path,
                        forecast::ClockMode::simulated};
  PredictorPair predictors{};
  EvalConfig eval{};
  DataConfig data{};

  bool operator==(const RunConfig&) const = default;
};

/// Throws ConfigError whose field() is the dotted path of the first
/// violated invariant.
void validate(const RunConfig& cfg);

nlohmann::json to_json(const RunConfig& cfg);

/// Strict: unknown keys and wrongly typed values are rejected with their
/// path. Missing keys take the defaults above. The result is validated.
RunConfig config_from_json(const nlohmann::json& j);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& cfg, const std::filesystem::path& path);

forecast::PredictorHandle build_predictor(const PredictorConfig& cfg, forecast::Role role);

/// Output directory and worker count from APOLLO_OUTPUT_DIR and
/// APOLLO_THREADS, when set.
struct EnvOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> threads;
};
EnvOverrides read_env_overrides();

void save_reports_csv(std::span<const metrics::MetricReport> reports, const std::filesystem::path& path);
void save_reports_json(std::span<const metrics::MetricReport> reports, const std::filesystem::path& path);

}  // namespace apollo::io
