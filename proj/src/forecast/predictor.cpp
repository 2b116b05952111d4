#include "apollo/forecast/predictor.hpp"

#include <cmath>
#include <condition_variable>
#include <random>

#include "apollo/error.hpp"

namespace apollo::forecast {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

// Sleeps until `deadline` or until stop is requested; false on stop.
bool sleep_until(std::chrono::steady_clock::time_point deadline, const std::stop_token& stop) {
  std::mutex m;
  std::condition_variable_any cv;
  std::unique_lock lock(m);
  return !cv.wait_until(lock, stop, deadline, [] { return false; }) && !stop.stop_requested();
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::main ? "main" : "draft"; }

void validate(const ForecastRequest& req) {
  if (req.horizon < 1) throw ConfigError("horizon must be >= 1", "horizon");
  if (req.num_samples < 1) throw ConfigError("num_samples must be >= 1", "num_samples");
  if (req.context.tokens.empty()) throw InputError("forecast context is empty");
  for (codec::Token t : req.context.tokens) {
    if (t > req.context.config.quant_factor) throw InputError("context token exceeds quant factor");
  }
}

PredictorHandle with_simulated_latency(PredictorHandle handle, double per_frame_delay,
                                       double jitter) {
  if (!std::isfinite(per_frame_delay) || per_frame_delay < 0.0) {
    throw ConfigError("per-frame delay must be a non-negative number", "latency.delay");
  }
  if (!std::isfinite(jitter) || jitter < 0.0) {
    throw ConfigError("jitter must be a non-negative number", "latency.jitter");
  }
  handle.latency = {per_frame_delay, jitter};
  handle.expected_per_frame_latency = per_frame_delay;
  return handle;
}

ForecastResult predict_stream(const PredictorHandle& handle, const ForecastRequest& req,
                              FrameStream& sink, const StreamOptions& options) {
  if (sink.horizon() != req.horizon || sink.num_samples() != req.num_samples) {
    throw RuntimeError("sink shape does not match the request");
  }

  std::mt19937_64 jitter_rng(req.seed ^ fnv1a(handle.model_id));
  std::uniform_real_distribution<double> jitter_dist(-1.0, 1.0);
  auto next_gap = [&] {
    const double j = handle.latency.jitter > 0.0 ? handle.latency.jitter * jitter_dist(jitter_rng) : 0.0;
    return std::max(0.0, handle.latency.per_frame_delay + j);
  };

  std::vector<Token> frame(req.num_samples);
  double simulated_now = 0.0;
  auto deadline = std::chrono::steady_clock::now();
  try {
    validate(req);
    if (!handle.model) throw ConfigError("predictor handle has no model", handle.model_id);
    auto generator = handle.model->start(req);
    for (std::size_t j = 0; j < req.horizon; ++j) {
      if (options.stop.stop_requested()) {
        sink.cancel();
        return sink.snapshot(handle.model_id);
      }
      generator->next(frame);
      const double gap = next_gap();

      double stamp = 0.0;
      if (options.clock == ClockMode::simulated) {
        simulated_now += gap;
        stamp = simulated_now;
      } else {
        deadline += std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(gap));
        if (gap > 0.0 && !sleep_until(deadline, options.stop)) {
          sink.cancel();
          return sink.snapshot(handle.model_id);
        }
        stamp = std::chrono::duration<double>(std::chrono::steady_clock::now() - options.epoch).count();
      }
      sink.publish(frame, stamp);
    }
  } catch (const std::exception& e) {
    sink.fail(handle.model_id + ": " + e.what());
    throw;
  }
  return sink.snapshot(handle.model_id);
}

ForecastResult predict(const PredictorHandle& handle, const ForecastRequest& req,
                       const StreamOptions& options) {
  FrameStream sink(req.horizon, req.num_samples);
  return predict_stream(handle, req, sink, options);
}

}  // namespace apollo::forecast
