#include "apollo/forecast/frame_stream.hpp"

#include <algorithm>

#include "apollo/error.hpp"

namespace apollo::forecast {

std::vector<Token> ForecastResult::path(std::size_t s) const {
  std::vector<Token> out;
  out.reserve(frames());
  for (std::size_t j = 0; j < frames(); ++j) out.push_back(tokens[j * num_samples + s]);
  return out;
}

FrameStream::FrameStream(std::size_t horizon, std::size_t num_samples,
                         std::shared_ptr<StreamSignal> signal)
    : horizon_(horizon),
      num_samples_(num_samples),
      tokens_(horizon * num_samples),
      done_at_(horizon, 0.0),
      signal_(signal ? std::move(signal) : std::make_shared<StreamSignal>()) {}

void FrameStream::publish(std::span<const Token> frame, double done_at) {
  const std::size_t j = published_.load(std::memory_order_relaxed);
  if (state() != State::running || j >= horizon_) {
    throw RuntimeError("publish on a closed frame stream");
  }
  if (frame.size() != num_samples_) throw RuntimeError("frame width does not match sample count");
  std::copy(frame.begin(), frame.end(), tokens_.begin() + static_cast<std::ptrdiff_t>(j * num_samples_));
  done_at_[j] = done_at;
  published_.store(j + 1, std::memory_order_release);
  if (j + 1 == horizon_) state_.store(State::complete, std::memory_order_release);
  signal_->notify();
}

void FrameStream::fail(std::string message) {
  {
    std::lock_guard lock(error_mutex_);
    error_ = std::move(message);
  }
  state_.store(State::failed, std::memory_order_release);
  signal_->notify();
}

void FrameStream::cancel() {
  State expected = State::running;
  state_.compare_exchange_strong(expected, State::cancelled, std::memory_order_acq_rel);
  signal_->notify();
}

std::optional<std::string> FrameStream::error() const {
  if (state() != State::failed) return std::nullopt;
  std::lock_guard lock(error_mutex_);
  return error_;
}

ForecastResult FrameStream::snapshot(const std::string& model_id,
                                     std::optional<std::size_t> frames) const {
  const std::size_t n = std::min(frames.value_or(published()), published());
  ForecastResult r;
  r.horizon = horizon_;
  r.num_samples = num_samples_;
  r.model_id = model_id;
  r.tokens.assign(tokens_.begin(), tokens_.begin() + static_cast<std::ptrdiff_t>(n * num_samples_));
  r.frame_done_at.assign(done_at_.begin(), done_at_.begin() + static_cast<std::ptrdiff_t>(n));
  r.frame_source.assign(n, model_id);
  return r;
}

}  // namespace apollo::forecast
