#include "apollo/race/race.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "apollo/error.hpp"

namespace apollo::race {
namespace {

using forecast::ClockMode;
using forecast::FrameStream;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point epoch) {
  return std::chrono::duration<double>(Clock::now() - epoch).count();
}

double median_of(std::vector<double>& v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

// Worker body: stream into `sink`, swallowing the error (the sink records it).
void run_into(const PredictorHandle& handle, const ForecastRequest& req, FrameStream& sink,
              const forecast::StreamOptions& options) {
  try {
    forecast::predict_stream(handle, req, sink, options);
  } catch (const std::exception& e) {
    if (sink.state() == FrameStream::State::running) sink.fail(e.what());
  }
}

}  // namespace

std::string_view to_string(NormKind v) { return v == NormKind::rmse ? "rmse" : "mean_abs"; }
std::string_view to_string(SummaryPath v) {
  return v == SummaryPath::median_path ? "median_path" : "mean_path";
}
std::string_view to_string(Branch v) {
  return v == Branch::concatenated ? "concatenated" : "main_only";
}

NormKind parse_norm_kind(std::string_view s) {
  if (s == "rmse") return NormKind::rmse;
  if (s == "mean_abs") return NormKind::mean_abs;
  throw ConfigError("unknown norm '" + std::string(s) + "'", "race.norm_kind");
}

SummaryPath parse_summary_path(std::string_view s) {
  if (s == "median_path") return SummaryPath::median_path;
  if (s == "mean_path") return SummaryPath::mean_path;
  throw ConfigError("unknown summary path '" + std::string(s) + "'", "race.compare_on");
}

std::size_t RaceConfig::effective_min_overlap(std::size_t horizon) const {
  if (min_overlap) return *min_overlap;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.05 * static_cast<double>(horizon))));
}

void validate(const RaceConfig& cfg) {
  if (!std::isfinite(cfg.gamma) || cfg.gamma < 0.0) throw ConfigError("must be >= 0", "race.gamma");
  if (cfg.min_overlap && *cfg.min_overlap < 1) throw ConfigError("must be >= 1", "race.min_overlap");
}

std::vector<double> summary_path(const FrameSlice& slice, SummaryPath kind,
                                 std::uint32_t quant_factor) {
  std::vector<double> out;
  out.reserve(slice.count);
  std::vector<double> column;
  for (std::size_t j = slice.first; j < slice.first + slice.count; ++j) {
    column.clear();
    for (Token t : slice.source->frame(j)) column.push_back(codec::token_value(t, quant_factor));
    if (kind == SummaryPath::median_path) {
      out.push_back(median_of(column));
    } else {
      double sum = 0.0;
      for (double v : column) sum += v;
      out.push_back(sum / static_cast<double>(column.size()));
    }
  }
  return out;
}

ToleranceResult tolerance_check(const FrameSlice& main_prefix, const FrameSlice& draft_prefix,
                                const RaceConfig& cfg, std::uint32_t quant_factor) {
  if (main_prefix.count == 0) throw ConfigError("tolerance check needs k >= 1 frames", "race.min_overlap");
  if (main_prefix.count != draft_prefix.count) {
    throw RuntimeError("tolerance check on prefixes of different length");
  }
  const auto m = summary_path(main_prefix, cfg.compare_on, quant_factor);
  const auto d = summary_path(draft_prefix, cfg.compare_on, quant_factor);
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double diff = m[i] - d[i];
    acc += cfg.norm_kind == NormKind::rmse ? diff * diff : std::abs(diff);
  }
  acc /= static_cast<double>(m.size());
  ToleranceResult r;
  r.delta_p = cfg.norm_kind == NormKind::rmse ? std::sqrt(acc) : acc;
  r.pass = r.delta_p < cfg.gamma;
  return r;
}

ForecastResult concatenate(const FrameSlice& main_prefix, const FrameSlice& draft_suffix) {
  if (main_prefix.source == nullptr || draft_suffix.source == nullptr) {
    throw RuntimeError("concatenate on an empty slice");
  }
  const ForecastResult& m = *main_prefix.source;
  const ForecastResult& d = *draft_suffix.source;
  if (m.num_samples != d.num_samples) throw RuntimeError("sample path counts differ");
  if (main_prefix.first != 0) throw RuntimeError("main prefix must start at frame 1");
  if (draft_suffix.first != main_prefix.count) {
    throw RuntimeError(draft_suffix.first > main_prefix.count ? "gap between main prefix and draft suffix"
                                                              : "main prefix and draft suffix overlap");
  }
  const std::size_t horizon = d.horizon;
  if (main_prefix.count + draft_suffix.count != horizon) {
    throw RuntimeError("slices do not cover the horizon");
  }
  if (main_prefix.count > m.frames() || draft_suffix.first + draft_suffix.count > d.frames()) {
    throw RuntimeError("slice reaches past the published frames");
  }

  ForecastResult out;
  out.horizon = horizon;
  out.num_samples = d.num_samples;
  out.model_id = main_prefix.count == 0 ? d.model_id
                 : draft_suffix.count == 0 ? m.model_id
                                           : m.model_id + "+" + d.model_id;
  const std::size_t s = d.num_samples;
  auto append = [&](const FrameSlice& slice) {
    const ForecastResult& r = *slice.source;
    out.tokens.insert(out.tokens.end(), r.tokens.begin() + static_cast<std::ptrdiff_t>(slice.first * s),
                      r.tokens.begin() + static_cast<std::ptrdiff_t>((slice.first + slice.count) * s));
    for (std::size_t j = slice.first; j < slice.first + slice.count; ++j) {
      out.frame_done_at.push_back(r.frame_done_at[j]);
      out.frame_source.push_back(j < r.frame_source.size() ? r.frame_source[j] : r.model_id);
    }
  };
  append(main_prefix);
  append(draft_suffix);
  return out;
}

RaceOutcome race(const PredictorHandle& main, const PredictorHandle& draft,
                 const ForecastRequest& req, const RaceConfig& cfg) {
  validate(cfg);
  forecast::validate(req);
  const std::size_t horizon = req.horizon;
  const std::size_t min_overlap = cfg.effective_min_overlap(horizon);
  if (horizon < min_overlap) {
    throw ConfigError("horizon " + std::to_string(horizon) + " is shorter than min_overlap " +
                          std::to_string(min_overlap),
                      "race.min_overlap");
  }
  const std::uint32_t quant = req.context.config.quant_factor;

  PredictorHandle main_h = main;
  PredictorHandle draft_h = draft;
  main_h.role = forecast::Role::main;
  draft_h.role = forecast::Role::draft;
  if (main_h.model_id == draft_h.model_id) {
    main_h.model_id += "/main";
    draft_h.model_id += "/draft";
  }

  RaceOutcome out;
  out.gamma = cfg.gamma;
  out.min_overlap = min_overlap;
  out.clock = cfg.clock;
  out.main_id = main_h.model_id;
  out.draft_id = draft_h.model_id;
  out.delta_p = std::numeric_limits<double>::quiet_NaN();

  auto signal = std::make_shared<forecast::StreamSignal>();
  FrameStream main_s(horizon, req.num_samples, signal);
  FrameStream draft_s(horizon, req.num_samples, signal);
  const bool simulated = cfg.clock == ClockMode::simulated;
  const auto epoch = Clock::now();

  std::jthread main_thread([&](std::stop_token st) {
    run_into(main_h, req, main_s, {cfg.clock, epoch, st});
  });
  std::jthread draft_thread([&](std::stop_token st) {
    run_into(draft_h, req, draft_s, {cfg.clock, epoch, st});
  });

  auto main_done_time = [&] { return main_s.done_at(horizon - 1); };
  auto finish_main_only = [&](const char* note) {
    main_s.wait([&] { return main_s.terminal(); });
    if (!main_s.complete()) {
      throw RuntimeError("race produced no forecast: main failed (" + main_s.error().value_or("?") +
                         ")" + (out.draft_failed ? ", draft failed" : ""));
    }
    draft_thread.request_stop();
    out.branch = Branch::main_only;
    out.forecast = main_s.snapshot(main_h.model_id);
    out.k = horizon;
    out.t_main = main_done_time();
    out.t_main_projected = false;
    out.t_total = simulated ? out.t_main : seconds_since(epoch);
    if (note != nullptr) out.note = note;
    return out;
  };

  // Phase 1: wait for the draft, or for the main to finish first.
  if (simulated) {
    draft_s.wait([&] { return draft_s.terminal(); });
  } else {
    draft_s.wait([&] { return draft_s.terminal() || main_s.complete(); });
  }

  if (!draft_s.complete()) {
    out.t_draft = std::numeric_limits<double>::quiet_NaN();
    if (draft_s.state() == FrameStream::State::failed) out.draft_failed = true;
    return finish_main_only(out.draft_failed ? "draft failed" : "main finished before draft");
  }
  out.t_draft = draft_s.done_at(horizon - 1);

  // Phase 2: how far the main got by the time the draft finished.
  std::size_t k = 0;
  double decided_at = 0.0;
  if (simulated) {
    main_s.wait([&] {
      const std::size_t p = main_s.published();
      return main_s.terminal() || (p > 0 && main_s.done_at(p - 1) > out.t_draft);
    });
    if (main_s.complete() && main_done_time() <= out.t_draft) {
      return finish_main_only("main finished before draft");
    }
    const std::size_t p = main_s.published();
    while (k < p && main_s.done_at(k) <= out.t_draft) ++k;
    decided_at = out.t_draft;
  } else {
    if (main_s.complete()) return finish_main_only("main finished before draft");
    k = main_s.published();
  }

  if (k < min_overlap) {
    main_s.wait([&] { return main_s.terminal() || main_s.published() >= min_overlap; });
    k = simulated ? std::min(min_overlap, main_s.published()) : main_s.published();
    if (k == horizon) return finish_main_only("main finished while waiting for min_overlap");
    if (simulated && k > 0) decided_at = std::max(decided_at, main_s.done_at(k - 1));
  }
  if (main_s.state() == FrameStream::State::failed) out.main_failed = true;
  if (k < min_overlap) {
    throw RuntimeError("main failed before min_overlap frames (" + main_s.error().value_or("?") +
                       "); draft result cannot be validated");
  }

  // Phase 3: tolerance check on the overlap.
  const ForecastResult main_prefix = main_s.snapshot(main_h.model_id, k);
  const ForecastResult draft_full = draft_s.snapshot(draft_h.model_id);
  const auto t0 = Clock::now();
  const ToleranceResult check =
      tolerance_check(FrameSlice::prefix(main_prefix, k), FrameSlice::prefix(draft_full, k), cfg, quant);
  out.t_tolerance = seconds_since(t0);
  out.delta_p = check.delta_p;

  if (check.pass) {
    main_thread.request_stop();
    out.branch = Branch::concatenated;
    out.k = k;
    out.forecast = concatenate(FrameSlice::prefix(main_prefix, k), FrameSlice::suffix(draft_full, k));
    out.t_main = main_prefix.frame_done_at[k - 1] * static_cast<double>(horizon) / static_cast<double>(k);
    out.t_main_projected = true;
    out.t_total = simulated ? decided_at + out.t_tolerance : seconds_since(epoch);
    return out;
  }
  if (out.main_failed) {
    throw RuntimeError("tolerance check failed and the main predictor failed: " +
                       main_s.error().value_or("?"));
  }
  return finish_main_only(nullptr);
}

nlohmann::json to_json(const RaceOutcome& o) {
  auto num = [](double v) -> nlohmann::json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t j = 0; j < o.forecast.frames(); ++j) {
    frames.push_back({{"index", j + 1},
                      {"source", o.forecast.frame_source[j]},
                      {"done_at_s", o.forecast.frame_done_at[j]},
                      {"tokens", std::vector<Token>(o.forecast.frame(j).begin(), o.forecast.frame(j).end())}});
  }
  return {
      {"branch", to_string(o.branch)},
      {"k", o.k},
      {"horizon", o.forecast.horizon},
      {"num_samples", o.forecast.num_samples},
      {"delta_p", num(o.delta_p)},
      {"gamma", o.gamma},
      {"min_overlap", o.min_overlap},
      {"main", o.main_id},
      {"draft", o.draft_id},
      {"clock", o.clock == ClockMode::wall ? "wall" : "simulated"},
      {"draft_failed", o.draft_failed},
      {"main_failed", o.main_failed},
      {"note", o.note},
      {"timings",
       {{"t_draft_s", num(o.t_draft)},
        {"t_main_s", num(o.t_main)},
        {"t_main_projected", o.t_main_projected},
        {"t_tolerance_s", o.t_tolerance},
        {"t_total_s", o.t_total},
        {"speedup", num(o.speedup())}}},
      {"frames", std::move(frames)},
  };
}

}  // namespace apollo::race
