#include "apollo/dsp/filtfilt.hpp"

#include <algorithm>
#include <cmath>

#include "apollo/error.hpp"

namespace apollo::dsp {

namespace {

std::vector<double> lfilter_direct(const FilterCoefficients& coeffs, std::span<const double> x,
                                   std::vector<double>& z) {
  const std::size_t n = static_cast<std::size_t>(coeffs.order());
  const auto& b = coeffs.b;
  const auto& a = coeffs.a;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = b[0] * xi + (n > 0 ? z[0] : 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) z[k] = b[k + 1] * xi - a[k + 1] * yi + z[k + 1];
    if (n > 0) z[n - 1] = b[n] * xi - a[n] * yi;
    y[i] = yi;
  }
  return y;
}

std::vector<double> lfilter_sections(const FilterCoefficients& coeffs, std::span<const double> x,
                                     std::vector<double>& z) {
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t s = 0; s < coeffs.sections.size(); ++s) {
    const Biquad& q = coeffs.sections[s];
    double z0 = z[2 * s];
    double z1 = z[2 * s + 1];
    for (double& v : y) {
      const double xi = v;
      const double yi = q.b0 * xi + z0;
      z0 = q.b1 * xi - q.a1 * yi + z1;
      z1 = q.b2 * xi - q.a2 * yi;
      v = yi;
    }
    z[2 * s] = z0;
    z[2 * s + 1] = z1;
  }
  return y;
}

}  // namespace

std::size_t state_size(const FilterCoefficients& coeffs) {
  return coeffs.sections.empty() ? static_cast<std::size_t>(coeffs.order())
                                 : 2 * coeffs.sections.size();
}

std::vector<double> lfilter(const FilterCoefficients& coeffs, std::span<const double> x,
                            std::vector<double>* state) {
  const std::size_t n = state_size(coeffs);
  std::vector<double> local(n, 0.0);
  std::vector<double>& z = state != nullptr && state->size() == n ? *state : local;
  return coeffs.sections.empty() ? lfilter_direct(coeffs, x, z) : lfilter_sections(coeffs, x, z);
}

std::vector<double> steady_state(const FilterCoefficients& coeffs) {
  if (!coeffs.sections.empty()) {
    // Every section has unit DC gain, so each sees the same constant input.
    std::vector<double> z;
    for (const auto& q : coeffs.sections) {
      const double g = (q.b0 + q.b1 + q.b2) / (1.0 + q.a1 + q.a2);
      z.push_back((q.b1 - q.a1 * g) + (q.b2 - q.a2 * g));
      z.push_back(q.b2 - q.a2 * g);
    }
    return z;
  }
  // With x == 1 and y == G = sum(b) / sum(a) held constant, the recursion in
  // lfilter gives z[k] = sum_{m > k} (b[m] - a[m] G).
  const std::size_t n = static_cast<std::size_t>(coeffs.order());
  double sum_b = 0.0;
  double sum_a = 0.0;
  for (double v : coeffs.b) sum_b += v;
  for (double v : coeffs.a) sum_a += v;
  const double gain = sum_b / sum_a;

  std::vector<double> z(n, 0.0);
  double acc = 0.0;
  for (std::size_t m = n; m >= 1; --m) {
    acc += coeffs.b[m] - coeffs.a[m] * gain;
    z[m - 1] = acc;
  }
  return z;
}

std::size_t filtfilt_padding(const FilterCoefficients& coeffs) {
  return 3 * std::max(coeffs.a.size(), coeffs.b.size());
}

std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x) {
  const std::size_t pad = filtfilt_padding(coeffs);
  if (x.size() <= pad) {
    throw InputError("filtfilt needs more than " + std::to_string(pad) +
                     " samples for edge padding, got " + std::to_string(x.size()));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw InputError("non-finite sample at index " + std::to_string(i));
  }

  const std::size_t len = x.size();
  std::vector<double> ext;
  ext.reserve(len + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[len - 1] - x[len - 1 - i]);

  const std::vector<double> zi = steady_state(coeffs);
  auto scaled = [&](double v) {
    std::vector<double> z = zi;
    for (auto& e : z) e *= v;
    return z;
  };

  auto state = scaled(ext.front());
  std::vector<double> forward = lfilter(coeffs, ext, &state);
  std::reverse(forward.begin(), forward.end());
  state = scaled(forward.front());
  std::vector<double> backward = lfilter(coeffs, forward, &state);
  std::reverse(backward.begin(), backward.end());

  return {backward.begin() + static_cast<std::ptrdiff_t>(pad),
          backward.begin() + static_cast<std::ptrdiff_t>(pad + len)};
}

}  // namespace apollo::dsp
