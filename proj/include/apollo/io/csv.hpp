#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "apollo/time_series.hpp"

namespace apollo::io {

struct DatasetSpec {
  std::filesystem::path path;
  std::string value_column = "value";
  std::optional<std::string> timestamp_column;
  double sample_rate_hz = 1.0;
  std::size_t context_length = 0;
  std::size_t horizon = 0;
  std::size_t season_length = 1;
};

/// Reads one numeric column of a delimited file with a header row.
///
/// Throws InputError naming the file and 1-based line for a missing column,
/// a blank or non-numeric value, or a non-finite value. A numeric timestamp
/// column, when requested, is loaded into TimeSeries::timestamps.
TimeSeries load_csv(const std::filesystem::path& path, const std::string& value_column,
                    const std::optional<std::string>& timestamp_column = std::nullopt,
                    double sample_rate_hz = 1.0);

/// As above, and additionally requires context_length + horizon rows.
TimeSeries load_csv(const DatasetSpec& spec);

/// Writes "index,<value_column>" (or "<timestamp>,<value>" when timestamps
/// are present) with values printed to 17 significant digits.
void write_csv(const std::filesystem::path& path, const TimeSeries& series,
               const std::string& value_column = "value");

}  // namespace apollo::io
