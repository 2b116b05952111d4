#include "apollo/io/csv.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <vector>

#include "apollo/error.hpp"

namespace apollo::io {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

// Comma-separated fields; double quotes group a field and "" escapes a quote.
std::vector<std::string> split_row(std::string_view line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(trim(field));
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name,
                         const std::filesystem::path& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InputError(path.string() + ": column '" + name + "' not found in header");
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, const std::string& value_column,
                    const std::optional<std::string>& timestamp_column, double sample_rate_hz) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const auto header = split_row(line);
  const std::size_t vcol = column_index(header, value_column, path);
  std::optional<std::size_t> tcol;
  if (timestamp_column) tcol = column_index(header, *timestamp_column, path);

  TimeSeries ts;
  ts.sample_rate_hz = sample_rate_hz;
  std::vector<double> stamps;
  bool numeric_stamps = tcol.has_value();
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_row(line);
    if (vcol >= fields.size() || fields[vcol].empty()) {
      throw InputError(fmt::format("{}: line {}: blank value in column '{}'", path.string(), line_no,
                                   value_column));
    }
    const auto v = parse_double(fields[vcol]);
    if (!v) {
      throw InputError(fmt::format("{}: line {}: non-numeric value '{}'", path.string(), line_no,
                                   fields[vcol]));
    }
    if (!std::isfinite(*v)) {
      throw InputError(fmt::format("{}: line {}: non-finite value", path.string(), line_no));
    }
    ts.values.push_back(*v);
    if (numeric_stamps) {
      const auto t = *tcol < fields.size() ? parse_double(fields[*tcol]) : std::nullopt;
      if (t) {
        stamps.push_back(*t);
      } else {
        numeric_stamps = false;
      }
    }
  }
  if (numeric_stamps) ts.timestamps = std::move(stamps);
  return ts;
}

TimeSeries load_csv(const DatasetSpec& spec) {
  TimeSeries ts = load_csv(spec.path, spec.value_column, spec.timestamp_column, spec.sample_rate_hz);
  const std::size_t needed = spec.context_length + spec.horizon;
  if (ts.size() < needed) {
    throw InputError(fmt::format("{}: {} rows, need at least context_length + horizon = {}",
                                 spec.path.string(), ts.size(), needed));
  }
  return ts;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series,
               const std::string& value_column) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  const bool stamped = series.timestamps && series.timestamps->size() == series.size();
  out << (stamped ? "timestamp" : "index") << ',' << value_column << '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (stamped) {
      out << fmt::format("{:.17g},{:.17g}\n", (*series.timestamps)[i], series.values[i]);
    } else {
      out << fmt::format("{},{:.17g}\n", i, series.values[i]);
    }
  }
  if (!out) throw RuntimeError("failed writing " + path.string());
}

}  // namespace apollo::io
