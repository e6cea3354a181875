#pragma once

#include <stdexcept>
#include <string>

namespace camboost {

/// Base for every error raised by the library. `category()` is a short
/// machine-parseable tag used by the CLI's single-line error report.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& message) : Error("dimension", message) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& message) : Error("usage", message) {}
};

class ValueError : public Error {
 public:
  explicit ValueError(const std::string& message) : Error("value", message) {}
};

/// Raised when a statistic is mathematically undefined for its input
/// (constant vector for Spearman, no positives for AP).
class UndefinedError : public Error {
 public:
  explicit UndefinedError(const std::string& message) : Error("undefined", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message) : Error("format", message) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& message) : Error("divergence", message) {}
};

}  // namespace camboost
