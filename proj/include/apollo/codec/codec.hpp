#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "apollo/dsp/butterworth.hpp"

namespace apollo::codec {

using Token = std::uint32_t;

enum class RoundingMode : std::uint8_t { floor = 0, nearest = 1 };

std::string_view to_string(RoundingMode mode);
RoundingMode parse_rounding_mode(std::string_view name);

struct QuantizationConfig {
  std::uint32_t quant_factor = 10000;
  RoundingMode rounding = RoundingMode::floor;

  bool operator==(const QuantizationConfig&) const = default;
};

void validate(const QuantizationConfig& config);

/// Min/max of the context window. A constant window is flagged degenerate:
/// it normalizes to 0.5 everywhere and denormalizes back to the constant.
struct NormalizationRecord {
  double min_val = 0.0;
  double max_val = 1.0;
  bool degenerate = false;

  double range() const noexcept { return max_val - min_val; }
  bool operator==(const NormalizationRecord&) const = default;
};

/// Token IDs in [0, Q] plus what is needed to map them back to real units.
struct TokenSequence {
  std::vector<Token> tokens;
  NormalizationRecord norm;
  QuantizationConfig config;

  std::size_t size() const noexcept { return tokens.size(); }
  bool operator==(const TokenSequence&) const = default;
};

struct Normalized {
  std::vector<double> values;
  NormalizationRecord record;
};

/// Min-max scaling onto [0, 1]. Rejects empty or non-finite input.
Normalized normalize(std::span<const double> x);

/// min + y * (max - min); the constant itself for a degenerate record.
std::vector<double> denormalize(std::span<const double> y, const NormalizationRecord& record);

/// Grid index of one normalized value.
///
/// floor:   largest i with i/Q <= v, so the error i/Q - v lies in (-1/Q, 0]
///          and v == 1 maps to Q.
/// nearest: the closer of the two neighbouring levels, error within
///          [-1/(2Q), 1/(2Q)].
Token quantize_index(double v, const QuantizationConfig& config);

/// Snaps every value of y_norm (which must lie in [0, 1]) onto the grid
/// i / Q.
std::vector<double> quantize(std::span<const double> y_norm, const QuantizationConfig& config);

/// Grid value -> token ID round(v * Q). Values further than 1e-9 from the
/// grid, or outside [0, 1], are rejected.
TokenSequence tokenize(std::span<const double> x_q, const QuantizationConfig& config,
                       const NormalizationRecord& record = {});

/// Token ID -> grid value t / Q, bit-identical to what quantize() produced.
std::vector<double> detokenize(const TokenSequence& t);
std::vector<double> detokenize(std::span<const Token> tokens, const QuantizationConfig& config);

/// Token -> normalized value t / Q.
inline double token_value(Token t, std::uint32_t quant_factor) {
  return static_cast<double>(t) / static_cast<double>(quant_factor);
}

/// Anti-aliasing quantization: zero-phase low-pass, normalize the filtered
/// series, quantize, tokenize. With no filter spec the series is encoded as
/// is (the ablation without noise erasure).
TokenSequence encode(std::span<const double> x, const std::optional<dsp::FilterSpec>& filter,
                     const QuantizationConfig& config);

/// detokenize followed by denormalize.
std::vector<double> decode(const TokenSequence& t);

/// Decodes tokens that were produced against `reference`'s record.
std::vector<double> decode(std::span<const Token> tokens, const TokenSequence& reference);

}  // namespace apollo::codec
