#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>

#include "apollo/codec/codec.hpp"
#include "apollo/forecast/frame_stream.hpp"

namespace apollo::forecast {

/// History tokens plus what to forecast.
struct ForecastRequest {
  codec::TokenSequence context;
  std::size_t horizon = 1;
  std::size_t num_samples = 1;
  std::uint64_t seed = 0;
};

void validate(const ForecastRequest& req);

/// Produces one frame (one token per sample path) per call, in horizon order.
class FrameGenerator {
 public:
  virtual ~FrameGenerator() = default;
  virtual void next(std::span<Token> frame) = 0;
};

/// A forecasting model. start() may be called concurrently on one instance;
/// each returned generator serves a single request.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::string describe() const = 0;
  virtual std::unique_ptr<FrameGenerator> start(const ForecastRequest& req) const = 0;
};

enum class Role { main, draft };

std::string_view to_string(Role role);

/// Simulated per-frame cost: each frame gap is per_frame_delay plus a
/// uniform draw from [-jitter, jitter], floored at zero.
struct LatencyProfile {
  double per_frame_delay = 0.0;
  double jitter = 0.0;
};

struct PredictorHandle {
  std::string model_id;
  Role role = Role::main;
  /// Advisory, seconds per frame.
  double expected_per_frame_latency = 0.0;
  std::shared_ptr<const Predictor> model;
  LatencyProfile latency;
};

/// Copy of `handle` whose frames are paced by the given delay. Forecast
/// values are unchanged. Throws ConfigError for negative or non-finite
/// arguments.
PredictorHandle with_simulated_latency(PredictorHandle handle, double per_frame_delay,
                                       double jitter = 0.0);

/// How frame timestamps are produced.
///
/// wall:      the stream sleeps out its latency profile and stamps frames
///            with the monotonic clock.
/// simulated: no sleeping; the timestamp of frame j is the cumulative
///            simulated delay of frames 0..j. Races decided on simulated
///            time are reproducible run to run.
enum class ClockMode { wall, simulated };

struct StreamOptions {
  ClockMode clock = ClockMode::wall;
  /// Timestamps are measured from here in wall mode.
  std::chrono::steady_clock::time_point epoch = std::chrono::steady_clock::now();
  std::stop_token stop;
};

/// Runs the predictor, publishing frames 1..H into `sink` as they complete.
///
/// Returns the full result. If the stop token fires, publication stops at
/// the current frame boundary, the sink is marked cancelled and the partial
/// result is returned. A failing predictor marks the sink failed (frames
/// already published stay readable) and the error is rethrown.
ForecastResult predict_stream(const PredictorHandle& handle, const ForecastRequest& req,
                              FrameStream& sink, const StreamOptions& options = {});

/// Convenience: streams into a private buffer.
ForecastResult predict(const PredictorHandle& handle, const ForecastRequest& req,
                       const StreamOptions& options = {});

}  // namespace apollo::forecast
