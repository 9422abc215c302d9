#pragma once

#include <stdexcept>
#include <string>

namespace gamlss {

/// Input violates the declared schema (missing column, bad cell, wrong kind).
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Fitting failed: divergence, non-finite intermediate, iteration blow-up.
class FitError : public std::runtime_error {
 public:
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Design matrix is rank deficient; message names the offending columns.
class RankError : public std::runtime_error {
 public:
  explicit RankError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Formula text failed to parse. The message includes a caret rendering of
/// the offending position; column() is its 1-based text column.
class FormulaError : public std::runtime_error {
 public:
  FormulaError(const std::string& msg, int column)
      : std::runtime_error(msg), column_(column) {}
  int column() const noexcept { return column_; }

 private:
  int column_ = 0;
};

} // namespace gamlss
