#pragma once

#include <string>
#include <vector>

#include "gamlss/dataset.hpp"
#include "gamlss/family.hpp"
#include "gamlss/model.hpp"

namespace gamlss {

/// One additive term of a model formula: a plain variable, log(variable),
/// or a cubic-spline term cs(variable, df=k) / cs(log(variable), df=k)
/// where k counts the smooth degrees of freedom beyond the linear part.
struct FormulaTerm {
  bool is_spline = false;
  bool log_arg = false;
  std::string variable;
  double df = 0.0;

  /// Column name the term resolves to: "X" or "log(X)".
  std::string column() const;
  /// Canonical rendering: "X", "log(X)", "cs(X, df=10)".
  std::string text() const;
};

/// Parsed two-part formula
///   RESP ~ TERM (+ TERM)* [ "|" "sigma:" TERM (+ TERM)* ]
/// The response is a variable or log(variable). A lone "1" denotes an
/// intercept-only term list; an absent sigma part also means an
/// intercept-only dispersion submodel.
struct FormulaAst {
  std::string response;
  bool log_response = false;
  std::vector<FormulaTerm> mu_terms;
  std::vector<FormulaTerm> sigma_terms;
  bool has_sigma_part = false;

  std::string response_column() const;
  /// Canonical text; parsing it reproduces this AST (fixed point).
  std::string text() const;
};

/// Parses the mini-language above, whitespace-insensitive. Throws
/// FormulaError with a 1-based column and a caret rendering on unknown
/// function names, malformed df specifications, duplicate terms, and any
/// other syntax error.
FormulaAst parse_formula(const std::string& text);

/// A ModelSpec assembled from a formula plus non-fatal warnings (link
/// choices that leave a positive parameter unconstrained).
struct BuiltSpec {
  ModelSpec spec;
  std::vector<std::string> warnings;
};

/// Resolves the formula against a dataset's columns. Throws SchemaError
/// for unknown variables and std::invalid_argument for a spline on a
/// non-continuous (binary-coded) variable.
BuiltSpec build_spec(const FormulaAst& ast, Family family, LinkId mu_link,
                     LinkId sigma_link, const Dataset& data);

/// Column names the formula needs: the response and every term.
std::vector<std::string> formula_columns(const FormulaAst& ast);

/// Adds any missing "log(X)" column among `names`, computed from the base
/// column X when present; X must be strictly positive (domain error names
/// the first offending row). Names without the log(...) shape, already
/// present, or with no base column are left for spec resolution to report.
void ensure_log_columns(Dataset& data, const std::vector<std::string>& names);

} // namespace gamlss
