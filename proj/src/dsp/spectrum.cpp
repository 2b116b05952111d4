#include "apollo/dsp/spectrum.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>

#include "apollo/error.hpp"

namespace apollo::dsp {
namespace {

// FFTW's planner is not re-entrant; execution of a finished plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void transform(std::vector<std::complex<double>>& data, int sign) {
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buf, buf, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw RuntimeError("FFTW failed to create a plan");
  fftw_execute(plan);
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace

std::vector<double> fft_frequencies(std::size_t n, double sample_rate_hz) {
  std::vector<double> f(n);
  const double step = sample_rate_hz / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto signed_k = k <= (n - 1) / 2 ? static_cast<double>(k)
                                           : static_cast<double>(k) - static_cast<double>(n);
    f[k] = signed_k * step;
  }
  return f;
}

Spectrum dft(std::span<const double> x, double sample_rate_hz) {
  if (x.empty()) throw InputError("dft of an empty sequence");
  Spectrum s;
  s.bins.assign(x.begin(), x.end());
  transform(s.bins, FFTW_FORWARD);
  s.bin_freq_hz = fft_frequencies(x.size(), sample_rate_hz);
  return s;
}

std::vector<double> idft(const Spectrum& s) {
  if (s.bins.empty()) throw InputError("idft of an empty spectrum");
  std::vector<std::complex<double>> data = s.bins;
  transform(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].real() * scale;
  return out;
}

Spectrum power_spectrum(const Spectrum& s) {
  Spectrum p;
  p.bin_freq_hz = s.bin_freq_hz;
  p.bins.reserve(s.bins.size());
  for (const auto& v : s.bins) p.bins.emplace_back(std::norm(v), 0.0);
  return p;
}

double snr(const Spectrum& signal_psd, const Spectrum& noise_psd, std::optional<Band> band,
           std::span<const double> noise_weights) {
  if (signal_psd.size() != noise_psd.size()) {
    throw InputError("signal and noise spectra differ in length");
  }
  if (!noise_weights.empty() && noise_weights.size() != noise_psd.size()) {
    throw InputError("noise weights must match the spectrum length");
  }
  if (band && (band->low_hz < 0.0 || band->high_hz < band->low_hz)) {
    throw InputError("band must satisfy 0 <= low <= high");
  }

  double p_signal = 0.0;
  double p_noise = 0.0;
  for (std::size_t k = 0; k < signal_psd.size(); ++k) {
    if (band) {
      const double f = std::abs(signal_psd.bin_freq_hz[k]);
      if (f < band->low_hz || f > band->high_hz) continue;
    }
    p_signal += signal_psd.bins[k].real();
    const double w = noise_weights.empty() ? 1.0 : noise_weights[k];
    p_noise += noise_psd.bins[k].real() * w;
  }
  if (p_noise == 0.0) {
    return p_signal == 0.0 ? std::numeric_limits<double>::quiet_NaN()
                           : std::numeric_limits<double>::infinity();
  }
  return p_signal / p_noise;
}

}  // namespace apollo::dsp
