#pragma once

#include <optional>
#include <vector>

namespace apollo {

/// Uniformly sampled real-valued series.
struct TimeSeries {
  std::vector<double> values;
  double sample_rate_hz = 1.0;
  std::optional<std::vector<double>> timestamps;

  std::size_t size() const noexcept { return values.size(); }
};

}  // namespace apollo
