#pragma once

#include <stdexcept>
#include <string>

namespace apollo {

/// Failure classes; the CLI maps each to its own exit code.
enum class ErrorKind { input, config, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad data: non-finite samples, malformed files, out-of-range tokens.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Invalid parameters. `field` is the dotted path of the offending setting
/// when one is known (e.g. "filter.cutoff_hz").
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : Error(ErrorKind::config, field.empty() ? what : field + ": " + what),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

class RuntimeError : public Error {
 public:
  explicit RuntimeError(const std::string& what) : Error(ErrorKind::runtime, what) {}
};

/// A metric whose denominator vanishes (all-zero truth for WQL, flat
/// in-sample context for MASE). Distinct from a numeric overflow.
class UndefinedMetric : public Error {
 public:
  explicit UndefinedMetric(const std::string& what) : Error(ErrorKind::input, what) {}
};

}  // namespace apollo
