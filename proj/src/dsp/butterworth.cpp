#include "apollo/dsp/butterworth.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "apollo/error.hpp"

namespace apollo::dsp {
namespace {

// Expand prod (z - r_i) into ascending powers of z^-1 (leading 1).
std::vector<double> expand_roots(std::span<const std::complex<double>> roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  std::vector<double> out(c.size());
  std::transform(c.begin(), c.end(), out.begin(), [](auto v) { return v.real(); });
  return out;
}

}  // namespace

void validate(const FilterSpec& spec) {
  if (spec.order < 1) throw ConfigError("order must be >= 1", "filter.order");
  if (spec.order > kMaxButterworthOrder) {
    throw ConfigError("order must be <= 12",
                      "filter.order");
  }
  if (!std::isfinite(spec.sample_rate_hz) || spec.sample_rate_hz <= 0.0) {
    throw ConfigError("sample rate must be a positive finite number", "filter.sample_rate_hz");
  }
  if (!std::isfinite(spec.cutoff_hz) || spec.cutoff_hz <= 0.0) {
    throw ConfigError("cutoff must be a positive finite number", "filter.cutoff_hz");
  }
  if (spec.cutoff_hz >= spec.nyquist_hz()) {
    throw ConfigError("cutoff must be below the Nyquist frequency (sample_rate_hz / 2)",
                      "filter.cutoff_hz");
  }
}

FilterCoefficients design_butterworth(const FilterSpec& spec) {
  validate(spec);
  const int n = spec.order;

  // Work at fs = 2 so the bilinear constant is 2 * fs = 4.
  constexpr double k_bilinear = 4.0;
  const double warped = k_bilinear * std::tan(std::numbers::pi * spec.normalized_cutoff() / 2.0);

  std::vector<std::complex<double>> z_poles;
  z_poles.reserve(n);
  for (int k = 0; k < n; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + n + 1.0) / (2.0 * n);
    const std::complex<double> s_pole = warped * std::polar(1.0, theta);
    z_poles.push_back((k_bilinear + s_pole) / (k_bilinear - s_pole));
  }

  FilterCoefficients out;
  // Poles k and n-1-k are conjugates; the middle one is real for odd n.
  for (int k = 0; k < n / 2; ++k) {
    const auto p = z_poles[k];
    Biquad q;
    q.a1 = -2.0 * p.real();
    q.a2 = std::norm(p);
    const double g = (1.0 + q.a1 + q.a2) / 4.0;
    q.b0 = g;
    q.b1 = 2.0 * g;
    q.b2 = g;
    out.sections.push_back(q);
  }
  if (n % 2 == 1) {
    const double p = z_poles[n / 2].real();
    const double g = (1.0 - p) / 2.0;
    out.sections.push_back(Biquad{g, g, 0.0, -p, 0.0});
  }

  const std::vector<std::complex<double>> z_zeros(n, -1.0);
  out.b = expand_roots(z_zeros);
  out.a = expand_roots(z_poles);
  double sum_b = 0.0;
  double sum_a = 0.0;
  for (double v : out.b) sum_b += v;
  for (double v : out.a) sum_a += v;
  const double dc = sum_b / sum_a;
  for (auto& v : out.b) v /= dc;
  return out;
}

std::complex<double> frequency_response(const FilterCoefficients& coeffs, double freq_hz,
                                        double sample_rate_hz) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz;
  if (!coeffs.sections.empty()) {
    const auto z1 = std::polar(1.0, -w);
    const auto z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& q : coeffs.sections) {
      h *= (q.b0 + q.b1 * z1 + q.b2 * z2) / (1.0 + q.a1 * z1 + q.a2 * z2);
    }
    return h;
  }
  std::complex<double> num = 0.0;
  std::complex<double> den = 0.0;
  for (std::size_t k = 0; k < coeffs.b.size(); ++k) num += coeffs.b[k] * std::polar(1.0, -w * k);
  for (std::size_t k = 0; k < coeffs.a.size(); ++k) den += coeffs.a[k] * std::polar(1.0, -w * k);
  return num / den;
}

double magnitude_response(const FilterCoefficients& coeffs, double freq_hz,
                          double sample_rate_hz) {
  return std::abs(frequency_response(coeffs, freq_hz, sample_rate_hz));
}

std::vector<std::complex<double>> poles(const FilterCoefficients& coeffs) {
  if (!coeffs.sections.empty()) {
    std::vector<std::complex<double>> out;
    for (const auto& q : coeffs.sections) {
      if (q.a2 == 0.0) {
        out.emplace_back(-q.a1, 0.0);
        continue;
      }
      const std::complex<double> disc = std::sqrt(std::complex<double>(q.a1 * q.a1 - 4.0 * q.a2));
      out.push_back((-q.a1 + disc) / 2.0);
      out.push_back((-q.a1 - disc) / 2.0);
    }
    return out;
  }
  const int n = coeffs.order();
  if (n < 1) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) companion(0, j) = -coeffs.a[j + 1] / coeffs.a[0];
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

double pole_radius(const FilterCoefficients& coeffs) {
  double r = 0.0;
  for (const auto& p : poles(coeffs)) r = std::max(r, std::abs(p));
  return r;
}

}  // namespace apollo::dsp
