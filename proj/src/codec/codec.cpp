#include "apollo/codec/codec.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "apollo/dsp/filtfilt.hpp"
#include "apollo/error.hpp"

namespace apollo::codec {
namespace {

constexpr double kGridTolerance = 1e-9;

void require_finite(std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InputError("non-finite sample at index " + std::to_string(i));
  }
}

}  // namespace

std::string_view to_string(RoundingMode mode) {
  return mode == RoundingMode::floor ? "floor" : "nearest";
}

RoundingMode parse_rounding_mode(std::string_view name) {
  if (name == "floor") return RoundingMode::floor;
  if (name == "nearest") return RoundingMode::nearest;
  throw ConfigError("unknown rounding mode '" + std::string(name) + "'", "quant.rounding");
}

void validate(const QuantizationConfig& config) {
  if (config.quant_factor < 1) throw ConfigError("must be >= 1", "quant.quant_factor");
  if (config.rounding != RoundingMode::floor && config.rounding != RoundingMode::nearest) {
    throw ConfigError("unknown rounding mode", "quant.rounding");
  }
}

Normalized normalize(std::span<const double> x) {
  if (x.empty()) throw InputError("cannot normalize an empty series");
  require_finite(x);
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  Normalized out;
  out.record = {*lo, *hi, *lo == *hi};
  out.values.resize(x.size());
  if (out.record.degenerate) {
    std::fill(out.values.begin(), out.values.end(), 0.5);
    return out;
  }
  const double range = out.record.range();
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.values[i] = std::clamp((x[i] - out.record.min_val) / range, 0.0, 1.0);
  }
  return out;
}

std::vector<double> denormalize(std::span<const double> y, const NormalizationRecord& record) {
  std::vector<double> out(y.size());
  if (record.degenerate) {
    std::fill(out.begin(), out.end(), record.min_val);
    return out;
  }
  const double range = record.range();
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = record.min_val + y[i] * range;
  return out;
}

Token quantize_index(double v, const QuantizationConfig& config) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw InputError("value " + std::to_string(v) + " outside [0, 1] cannot be quantized");
  }
  const std::uint32_t q = config.quant_factor;
  const double qd = static_cast<double>(q);
  auto level = [qd](std::int64_t i) { return static_cast<double>(i) / qd; };

  if (config.rounding == RoundingMode::floor) {
    // v * Q can land a hair below an integer (0.3 * 1e4 = 2999.999...), so
    // settle the index against the grid value itself.
    auto i = static_cast<std::int64_t>(std::floor(v * qd));
    while (i < q && level(i + 1) <= v) ++i;
    while (i > 0 && level(i) > v) --i;
    return static_cast<Token>(i);
  }

  auto i = static_cast<std::int64_t>(std::floor(v * qd));
  i = std::clamp<std::int64_t>(i, 0, q);
  const std::int64_t up = std::min<std::int64_t>(i + 1, q);
  return static_cast<Token>(std::abs(level(up) - v) < std::abs(level(i) - v) ? up : i);
}

std::vector<double> quantize(std::span<const double> y_norm, const QuantizationConfig& config) {
  validate(config);
  std::vector<double> out(y_norm.size());
  for (std::size_t i = 0; i < y_norm.size(); ++i) {
    out[i] = token_value(quantize_index(y_norm[i], config), config.quant_factor);
  }
  return out;
}

TokenSequence tokenize(std::span<const double> x_q, const QuantizationConfig& config,
                       const NormalizationRecord& record) {
  validate(config);
  const double qd = static_cast<double>(config.quant_factor);
  TokenSequence out;
  out.norm = record;
  out.config = config;
  out.tokens.reserve(x_q.size());
  for (std::size_t i = 0; i < x_q.size(); ++i) {
    const double v = x_q[i];
    if (!(v >= -kGridTolerance && v <= 1.0 + kGridTolerance)) {
      throw InputError("value at index " + std::to_string(i) + " is outside [0, 1]");
    }
    const double idx = std::round(v * qd);
    if (std::abs(idx / qd - v) > kGridTolerance) {
      throw InputError("value at index " + std::to_string(i) + " is not on the 1/Q grid");
    }
    out.tokens.push_back(static_cast<Token>(std::clamp(idx, 0.0, qd)));
  }
  return out;
}

std::vector<double> detokenize(std::span<const Token> tokens, const QuantizationConfig& config) {
  std::vector<double> out(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] > config.quant_factor) {
      throw InputError("token " + std::to_string(tokens[i]) + " at index " + std::to_string(i) +
                       " exceeds the vocabulary bound " + std::to_string(config.quant_factor));
    }
    out[i] = token_value(tokens[i], config.quant_factor);
  }
  return out;
}

std::vector<double> detokenize(const TokenSequence& t) { return detokenize(t.tokens, t.config); }

TokenSequence encode(std::span<const double> x, const std::optional<dsp::FilterSpec>& filter,
                     const QuantizationConfig& config) {
  validate(config);
  require_finite(x);
  std::vector<double> y(x.begin(), x.end());
  if (filter) {
    const auto coeffs = dsp::design_butterworth(*filter);
    const bool constant = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
    if (!constant) y = dsp::filtfilt(coeffs, x);
  }

  const Normalized norm = normalize(y);
  TokenSequence out;
  out.norm = norm.record;
  out.config = config;
  out.tokens.reserve(norm.values.size());
  for (double v : norm.values) out.tokens.push_back(quantize_index(v, config));
  return out;
}

std::vector<double> decode(const TokenSequence& t) { return denormalize(detokenize(t), t.norm); }

std::vector<double> decode(std::span<const Token> tokens, const TokenSequence& reference) {
  return denormalize(detokenize(tokens, reference.config), reference.norm);
}

}  // namespace apollo::codec
