#pragma once

#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apollo/codec/codec.hpp"

namespace apollo::forecast {

using codec::Token;

/// Forecast frames over a horizon. Frame j holds one token per sample path
/// and occupies tokens[j * num_samples, (j + 1) * num_samples).
struct ForecastResult {
  std::size_t horizon = 0;
  std::size_t num_samples = 0;
  std::vector<Token> tokens;
  /// Seconds since the start of the stream at which frame j was published.
  std::vector<double> frame_done_at;
  /// Model that produced each frame.
  std::vector<std::string> frame_source;
  std::string model_id;

  std::size_t frames() const noexcept { return frame_done_at.size(); }
  std::span<const Token> frame(std::size_t j) const {
    return std::span<const Token>(tokens).subspan(j * num_samples, num_samples);
  }
  /// Sample path s across all frames.
  std::vector<Token> path(std::size_t s) const;

  bool operator==(const ForecastResult&) const = default;
};

/// Wake-up channel shared between the streams a consumer watches.
class StreamSignal {
 public:
  void notify() {
    {
      std::lock_guard lock(mutex_);
      ++epoch_;
    }
    cv_.notify_all();
  }

  template <typename Pred>
  void wait(Pred pred) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, pred);
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t epoch_ = 0;
};

/// Single-producer frame buffer with lock-free reads of the completed prefix.
///
/// Storage for the whole horizon is allocated up front. A frame is written
/// in full before the published count is released, so a reader that loads
/// published() may read frames [0, published()) without locking and never
/// sees a partially written frame.
class FrameStream {
 public:
  enum class State { running, complete, failed, cancelled };

  FrameStream(std::size_t horizon, std::size_t num_samples,
              std::shared_ptr<StreamSignal> signal = nullptr);

  FrameStream(const FrameStream&) = delete;
  FrameStream& operator=(const FrameStream&) = delete;

  // Producer side.
  void publish(std::span<const Token> frame, double done_at);
  void fail(std::string message);
  void cancel();

  // Consumer side.
  std::size_t published() const noexcept { return published_.load(std::memory_order_acquire); }
  State state() const noexcept { return state_.load(std::memory_order_acquire); }
  bool complete() const noexcept { return state() == State::complete; }
  bool terminal() const noexcept { return state() != State::running; }
  std::optional<std::string> error() const;

  std::size_t horizon() const noexcept { return horizon_; }
  std::size_t num_samples() const noexcept { return num_samples_; }

  /// Valid for j < published().
  std::span<const Token> frame(std::size_t j) const {
    return std::span<const Token>(tokens_).subspan(j * num_samples_, num_samples_);
  }
  double done_at(std::size_t j) const { return done_at_[j]; }

  /// Copy of the first `frames` published frames (all published when absent).
  ForecastResult snapshot(const std::string& model_id,
                          std::optional<std::size_t> frames = std::nullopt) const;

  /// Blocks until pred() holds, re-evaluating on every publication.
  template <typename Pred>
  void wait(Pred pred) const {
    signal_->wait(pred);
  }

  const std::shared_ptr<StreamSignal>& signal() const noexcept { return signal_; }

 private:
  std::size_t horizon_;
  std::size_t num_samples_;
  std::vector<Token> tokens_;
  std::vector<double> done_at_;
  std::atomic<std::size_t> published_{0};
  std::atomic<State> state_{State::running};
  mutable std::mutex error_mutex_;
  std::string error_;
  std::shared_ptr<StreamSignal> signal_;
};

}  // namespace apollo::forecast
