#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

namespace apollo::dsp {

/// DFT of a real sequence. bin_freq_hz follows the signed FFT layout: bins
/// above N/2 carry negative frequencies, so |bin_freq_hz[k]| is the physical
/// frequency of bin k.
struct Spectrum {
  std::vector<std::complex<double>> bins;
  std::vector<double> bin_freq_hz;

  std::size_t size() const noexcept { return bins.size(); }
};

/// Signed frequency of each of n DFT bins.
std::vector<double> fft_frequencies(std::size_t n, double sample_rate_hz);

/// X[k] = sum_n x[n] exp(-2 pi i k n / N). Thread-safe.
Spectrum dft(std::span<const double> x, double sample_rate_hz = 1.0);

/// Inverse of dft(); returns the real part of the inverse transform.
std::vector<double> idft(const Spectrum& s);

/// |X[k]|^2 per bin, same layout as the input.
Spectrum power_spectrum(const Spectrum& s);

/// Closed frequency interval [low_hz, high_hz] applied to |frequency|.
struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

/// Ratio sum P_s[k] / sum P_e[k] of two power spectra (P = |X|^2, see
/// power_spectrum) over the bins whose |frequency| lies in `band` (all bins
/// when absent). When `noise_weights` is given, noise bin k
/// is multiplied by noise_weights[k] before summing; pass the filter's power
/// response to obtain the post-filtering ratio.
///
/// Both spectra must have equal length. Returns +infinity
/// when the weighted noise power is exactly zero, and signals a zero signal
/// power over zero noise power as NaN.
double snr(const Spectrum& signal_psd, const Spectrum& noise_psd,
           std::optional<Band> band = std::nullopt,
           std::span<const double> noise_weights = {});

}  // namespace apollo::dsp
