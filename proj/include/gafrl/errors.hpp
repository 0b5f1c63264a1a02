#pragma once

#include <stdexcept>
#include <string>

namespace gafrl {

// Every error carries a short machine-readable kind so the CLI can print
// "error: <kind>: <message>" on one line.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error("io", m) {}
};

// Malformed CSV row or config line. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& m)
      : Error("parse", m + " at line " + std::to_string(line)), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& m) : Error("validation", m) {}
};

class OrderingError : public Error {
 public:
  explicit OrderingError(const std::string& m) : Error("ordering", m) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& m)
      : Error("insufficient-data", m) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& m) : Error("domain", m) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& m) : Error("dimension", m) {}
};

class LifecycleError : public Error {
 public:
  explicit LifecycleError(const std::string& m) : Error("lifecycle", m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error("config", m) {}
};

class CorpusError : public Error {
 public:
  explicit CorpusError(const std::string& m) : Error("corpus", m) {}
};

// Raised when a loss or gradient stops being finite during training.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(const std::string& m) : Error("divergence", m) {}
};

}  // namespace gafrl
