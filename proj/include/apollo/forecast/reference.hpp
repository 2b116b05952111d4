#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "apollo/forecast/predictor.hpp"

namespace apollo::forecast {

enum class ReferenceKind { persistence, seasonal_naive, ar };

std::string_view to_string(ReferenceKind kind);
ReferenceKind parse_reference_kind(std::string_view name);

struct ReferenceParams {
  /// Period for seasonal_naive.
  std::size_t season_length = 1;
  /// Lag count for ar.
  std::size_t ar_order = 1;

  bool operator==(const ReferenceParams&) const = default;
};

/// Least-squares AR(p) fit with intercept:
///   x[t] = intercept + sum_i coeffs[i] * x[t - 1 - i] + e[t],  e ~ N(0, sigma^2).
struct ArModel {
  double intercept = 0.0;
  std::vector<double> coeffs;
  double sigma = 0.0;

  /// Conditional mean of the next value given history (most recent last).
  double predict_next(std::span<const double> history) const;
};

/// Needs at least 2 * order + 2 observations. Throws InputError otherwise.
ArModel fit_ar(std::span<const double> series, std::size_t order);

/// Reference forecasters. All work on the normalized value t / Q of each
/// token and emit tokens on the same grid (nearest level, clamped to
/// [0, Q]).
///
/// persistence:    every frame repeats the last context token.
/// seasonal_naive: frame j repeats context[n - P + (j mod P)].
/// ar:             AR(p) fitted to the context; each sample path draws
///                 Gaussian innovations with the fitted sigma from an RNG
///                 seeded by (seed, path index).
///
/// Naive kinds replicate their point path across samples. Model ids look
/// like "persistence", "seasonal_naive(24)", "ar(3)".
PredictorHandle make_reference_predictor(ReferenceKind kind, const ReferenceParams& params = {},
                                         Role role = Role::main);

}  // namespace apollo::forecast
