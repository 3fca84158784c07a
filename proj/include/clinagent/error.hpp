#pragma once

#include <stdexcept>
#include <string>

namespace clinagent {

/// Base for every error raised by the library. The CLI maps subclasses
/// onto exit codes: InputError -> 2, everything else -> 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or missing user input (files, flags, schemas).
class InputError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public InputError {
 public:
  explicit SchemaError(std::string column)
      : InputError("missing required column '" + column + "'"), column_(std::move(column)) {}
  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

class RowError : public InputError {
 public:
  RowError(std::size_t row, const std::string& what)
      : InputError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

}  // namespace clinagent
