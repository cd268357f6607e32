#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpmliv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  /// Short machine-readable category ("ingestion", "config", ...).
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// Raised while turning a CSV file into a Dataset. Row is 1-based counting
/// data rows (the header is row 0); zero means "not row specific".
class IngestionError : public Error {
 public:
  IngestionError(const std::string& message, std::size_t row = 0, std::string column = {})
      : Error("ingestion", message), row_(row), column_(std::move(column)) {}

  std::size_t row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  std::size_t row_;
  std::string column_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error("config", message) {}
};

/// Design matrix is rank deficient; the message names the offending columns.
class RankError : public Error {
 public:
  explicit RankError(const std::string& message) : Error("rank", message) {}
};

/// A numerical failure inside a sampler or estimator (non-finite likelihood etc).
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message) : Error("numerical", message) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& message) : Error("argument", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace dpmliv
