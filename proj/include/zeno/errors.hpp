#pragma once

#include <stdexcept>
#include <string>

namespace zeno {

// Invalid or inconsistent run configuration (bad key, bad value, parse error).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solve failed to reach its target (calibration, power search, ...).
class SolveError : public std::runtime_error {
 public:
  explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed on-disk data; carries the 1-based row and the column name.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, int row, std::string column)
      : std::runtime_error(what), row_(row), column_(std::move(column)) {}
  int row() const { return row_; }
  const std::string& column() const { return column_; }

 private:
  int row_ = 0;
  std::string column_;
};

}  // namespace zeno
