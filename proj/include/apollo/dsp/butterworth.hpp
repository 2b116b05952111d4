#pragma once

#include <complex>
#include <span>
#include <vector>

namespace apollo::dsp {

inline constexpr int kMaxButterworthOrder = 12;

struct FilterSpec {
  int order = 5;
  double cutoff_hz = 10.0;
  double sample_rate_hz = 100.0;

  double nyquist_hz() const noexcept { return sample_rate_hz / 2.0; }
  /// Cutoff as a fraction of Nyquist, the `Wn` argument of a classic butter().
  double normalized_cutoff() const noexcept { return cutoff_hz / nyquist_hz(); }

  bool operator==(const FilterSpec&) const = default;
};

/// One second-order section b(z)/a(z) with a0 = 1. A first-order section
/// has b2 = a2 = 0.
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

/// Rational transfer function b(z)/a(z), coefficients in ascending powers of
/// z^-1, with a[0] == 1. Designed filters also carry the same response as a
/// cascade of unit-DC-gain sections, which is what filtering and response
/// evaluation use when present; the expanded polynomials lose precision at
/// high orders with extreme cutoffs.
struct FilterCoefficients {
  std::vector<double> b;
  std::vector<double> a;
  std::vector<Biquad> sections;
  int order() const noexcept { return static_cast<int>(a.size()) - 1; }
};

/// Throws ConfigError unless 1 <= order <= 12, all values are finite and
/// 0 < cutoff < Nyquist.
void validate(const FilterSpec& spec);

/// Digital low-pass Butterworth filter.
///
/// The analog prototype poles are placed on the left half of the unit
/// circle, scaled to the pre-warped cutoff 2 fs tan(pi fc / fs), and mapped
/// through the bilinear transform; all n zeros land at z = -1. The DC gain is
/// renormalized to exactly one. With pre-warping the -3 dB point of the
/// digital response sits at the requested cutoff.
FilterCoefficients design_butterworth(const FilterSpec& spec);

/// Frequency response H(e^{jw}) at a frequency in Hz.
std::complex<double> frequency_response(const FilterCoefficients& coeffs, double freq_hz,
                                        double sample_rate_hz);

/// |H(e^{jw})| for a single pass of the filter.
double magnitude_response(const FilterCoefficients& coeffs, double freq_hz,
                          double sample_rate_hz);

/// Poles of the filter, taken from the sections when present and from the
/// roots of a(z) otherwise.
std::vector<std::complex<double>> poles(const FilterCoefficients& coeffs);

/// Largest pole magnitude; < 1 means the filter is stable.
double pole_radius(const FilterCoefficients& coeffs);

}  // namespace apollo::dsp
