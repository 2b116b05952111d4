#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "apollo/forecast/predictor.hpp"

namespace apollo::race {

using forecast::ForecastRequest;
using forecast::ForecastResult;
using forecast::PredictorHandle;
using forecast::Token;

enum class NormKind { rmse, mean_abs };
enum class SummaryPath { median_path, mean_path };
enum class Branch { concatenated, main_only };

std::string_view to_string(NormKind v);
std::string_view to_string(SummaryPath v);
std::string_view to_string(Branch v);
NormKind parse_norm_kind(std::string_view s);
SummaryPath parse_summary_path(std::string_view s);

struct RaceConfig {
  /// Tolerance; the check passes when delta_p < gamma. Defaults to 10% of
  /// the context range (RMSE over the overlap).
  double gamma = 0.1;
  /// Frames the main must have finished before a check is made. When absent,
  /// max(1, ceil(0.05 * H)).
  std::optional<std::size_t> min_overlap;
  NormKind norm_kind = NormKind::rmse;
  SummaryPath compare_on = SummaryPath::median_path;
  forecast::ClockMode clock = forecast::ClockMode::wall;

  std::size_t effective_min_overlap(std::size_t horizon) const;
  bool operator==(const RaceConfig&) const = default;
};

void validate(const RaceConfig& cfg);

/// Frames [first, first + count) of a forecast, frame-major like
/// ForecastResult::tokens.
struct FrameSlice {
  const ForecastResult* source = nullptr;
  std::size_t first = 0;
  std::size_t count = 0;

  static FrameSlice prefix(const ForecastResult& r, std::size_t k) { return {&r, 0, k}; }
  static FrameSlice suffix(const ForecastResult& r, std::size_t k) {
    return {&r, k, r.frames() - k};
  }
};

struct ToleranceResult {
  double delta_p = 0.0;
  bool pass = false;
};

/// Per-frame summary (median or mean across sample paths) of the normalized
/// values t / Q of each frame in the slice.
std::vector<double> summary_path(const FrameSlice& slice, SummaryPath kind,
                                 std::uint32_t quant_factor);

/// Distance between the two summary paths over the overlap, in units of the
/// context range (token / Q), and whether it is strictly below gamma.
/// Both slices must hold the same k >= 1 frames.
ToleranceResult tolerance_check(const FrameSlice& main_prefix, const FrameSlice& draft_prefix,
                                const RaceConfig& cfg, std::uint32_t quant_factor);

/// Main frames 1..k followed by draft frames k+1..H. The slices must be
/// contiguous and together cover the horizon; provenance is carried over.
ForecastResult concatenate(const FrameSlice& main_prefix, const FrameSlice& draft_suffix);

struct RaceOutcome {
  ForecastResult forecast;
  Branch branch = Branch::main_only;
  /// Frames taken from the main.
  std::size_t k = 0;
  /// NaN when no check was made.
  double delta_p = 0.0;
  double gamma = 0.0;
  std::size_t min_overlap = 0;
  double t_draft = 0.0;
  /// Actual when the main ran to completion, otherwise projected from k
  /// frames as t(k) * H / k.
  double t_main = 0.0;
  bool t_main_projected = false;
  double t_tolerance = 0.0;
  double t_total = 0.0;
  forecast::ClockMode clock = forecast::ClockMode::wall;
  bool draft_failed = false;
  bool main_failed = false;
  std::string main_id;
  std::string draft_id;
  std::string note;

  double speedup() const { return t_total > 0.0 ? t_main / t_total : 0.0; }
};

/// Runs main and draft concurrently on the same request.
///
/// When the draft finishes, k is the number of frames the main has
/// published by then (under ClockMode::simulated, the number stamped no
/// later than the draft's last frame). If k < min_overlap the orchestrator
/// waits for the main to reach min_overlap. A passing tolerance check
/// cancels the main and returns main[1..k] ++ draft[k+1..H]; otherwise the
/// main runs to completion and its result is returned unchanged. If the
/// main finishes first its result is returned directly.
///
/// A failed draft degrades to the main result. Throws RuntimeError when no
/// valid forecast can be produced.
RaceOutcome race(const PredictorHandle& main, const PredictorHandle& draft,
                 const ForecastRequest& req, const RaceConfig& cfg);

/// Race report: branch, k, delta_p, gamma, timings and per-frame provenance.
nlohmann::json to_json(const RaceOutcome& outcome);

}  // namespace apollo::race
