#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gamlss/types.hpp"

namespace gamlss {

/// Kinds a schema can enforce on a column.
enum class VarKind {
  PositiveReal, // finite, > 0
  Real,         // finite
  Discrete,     // finite set of allowed values
  Binary,       // 0 or 1
  ThreeLevel    // one of three coded values
};

struct VariableSpec {
  std::string name;
  VarKind kind = VarKind::Real;
  std::vector<double> levels; // allowed values for Discrete/Binary/ThreeLevel
};

/// Declares required columns and their kinds; extra columns pass through.
struct SchemaSpec {
  std::vector<VariableSpec> variables;
  std::vector<std::string> optional_passthrough;

  /// The land-lot schema: UP/AR/FR positive reals, LAT/LON UTM reals,
  /// UC in {3.0,3.5,...,6.0}, ST integer 1..18, TO/PA/SI/VN/SZ binary,
  /// STR/NI coded {0,1,2}, YR in {2005,2006,2007}; NB optional passthrough.
  static SchemaSpec hedonic();

  const VariableSpec* find(const std::string& name) const;
};

/// Immutable-after-construction column store; all model variables are
/// numeric (categorical columns carry coded levels), with optional
/// free-text passthrough columns preserved for round-tripping.
struct Dataset {
  Index n = 0;
  std::string provenance;
  Index dropped_rows = 0; // listwise-deleted during ingestion

  std::vector<std::string> names;
  std::vector<Vector> columns;
  std::vector<std::string> text_names;
  std::vector<std::vector<std::string>> text_columns;

  bool has(const std::string& name) const;
  const Vector& column(const std::string& name) const;
  /// Adds or replaces a numeric column (length must equal n).
  void set_column(const std::string& name, Vector values);

 private:
  std::unordered_map<std::string, std::size_t> index_;
  friend Dataset load_csv(const std::string&, const SchemaSpec&);
};

Dataset load_csv(const std::string& path, const SchemaSpec& schema);

void write_csv(const std::string& path, const Dataset& ds);

/// Adds the model's derived columns: year/street/registry dummies
/// (YR06, YR07, STR1, STR2, NIO, NIT), log(AR), log(ST), log(UP),
/// FRVN = FR*VN and log(FRVN) = log(max(FRVN, 1)). Idempotent.
Dataset derive_variables(const Dataset& ds);

struct SummaryRow {
  std::string name;
  double mean, median, sd, min, max, range;
};

std::vector<SummaryRow> describe(const Dataset& ds,
                                 const std::vector<std::string>& variables);

/// Validates ds against the schema; throws SchemaError naming the first
/// offending column/row.
void validate_schema(const Dataset& ds, const SchemaSpec& schema);

} // namespace gamlss
