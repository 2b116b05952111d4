#pragma once

#include <span>
#include <vector>

#include "apollo/dsp/butterworth.hpp"

namespace apollo::dsp {

/// Causal IIR filter in transposed direct form II, run section by section
/// when coeffs.sections is set. `state` holds state_size(coeffs) delay
/// elements and is updated in place; an empty state means zero initial
/// conditions.
std::vector<double> lfilter(const FilterCoefficients& coeffs, std::span<const double> x,
                            std::vector<double>* state = nullptr);

/// Two per section, or order() for a bare transfer function.
std::size_t state_size(const FilterCoefficients& coeffs);

/// Delay-line contents of lfilter's state for a unit-step steady state.
/// Scaling by the first input sample removes the start-up transient.
std::vector<double> steady_state(const FilterCoefficients& coeffs);

/// Odd extension length used by filtfilt: 3 * (order + 1).
std::size_t filtfilt_padding(const FilterCoefficients& coeffs);

/// Zero-phase filtering: forward pass, reversed pass, reversed again.
///
/// The input is extended at both ends by odd reflection about the end
/// samples and each pass starts from the steady state of its first sample.
/// The effective magnitude response is |H|^2 with zero phase.
///
/// Requires x.size() > filtfilt_padding(coeffs) and finite samples.
std::vector<double> filtfilt(const FilterCoefficients& coeffs, std::span<const double> x);

}  // namespace apollo::dsp
