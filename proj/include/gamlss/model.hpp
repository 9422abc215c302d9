#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gamlss/dataset.hpp"
#include "gamlss/family.hpp"
#include "gamlss/links.hpp"
#include "gamlss/spline.hpp"
#include "gamlss/types.hpp"

namespace gamlss {

/// One smooth term: a cubic smoothing spline on `variable` contributing
/// `extra_df` effective degrees of freedom beyond the linear part (which is
/// always carried by the parametric design). extra_df = 0 reduces the term
/// to the plain linear column.
struct SplineTerm {
  std::string variable;
  double extra_df = 0.0;
};

/// Additive predictor specification for one distribution parameter. An
/// intercept is always included; parametric_terms and spline variables must
/// name distinct columns of the dataset.
struct Submodel {
  LinkId link = LinkId::Identity;
  std::vector<std::string> parametric_terms;
  std::vector<SplineTerm> spline_terms;
};

struct ModelSpec {
  std::string response;
  Family family = Family::NO;
  Submodel mu;
  Submodel sigma;
};

struct FitOptions {
  int max_outer = 50;
  int max_inner = 30;
  double tol = 1e-6;
  /// Optional warm starts, given as fitted parameter values per observation.
  std::optional<Vector> mu_start;
  std::optional<Vector> sigma_start;
};

/// Fitted state of one submodel. beta is ordered [intercept,
/// parametric_terms..., spline linear parts...] and named accordingly;
/// smoother_fits hold the centered smooth curves (orthogonal to {1, x}
/// under the final working weights), aligned with spline_terms.
struct SubmodelFit {
  LinkId link = LinkId::Identity;
  std::vector<std::string> beta_names;
  Vector beta;
  std::vector<std::string> parametric_terms;
  std::vector<SplineTerm> spline_terms;
  std::vector<SmootherFit> smoother_fits;
  Vector eta;
  Vector fitted_param;
  Vector se;
  Vector z;
  Vector p;
  Matrix vcov;
};

struct DfEntry {
  std::string parameter; // "mu" or "sigma"
  std::string term;      // "(Intercept)", variable name, or "cs(var)"
  double df = 0.0;
};

struct FittedModel {
  Family family = Family::NO;
  std::string response;
  SubmodelFit mu;
  SubmodelFit sigma;
  double global_deviance = 0.0;
  double df_total = 0.0;
  std::vector<DfEntry> df_ledger;
  Index n = 0;
  bool converged = false;
  int iterations = 0;
  /// Deviance after each committed half-cycle (mu stage, then sigma stage,
  /// two entries per outer iteration); nonincreasing up to 1e-8 per step.
  std::vector<double> gd_trace;
};

/// Penalized maximum-likelihood fit: outer cycling over mu and sigma, inner
/// weighted backfitting of the parametric part and each smooth term on the
/// working response. Deterministic for identical inputs.
FittedModel fit(const ModelSpec& spec, const Dataset& data,
                const FitOptions& options = {});

/// -2 sum_i log f(y_i | mu_i, sigma_i) with parameters assembled from the
/// fitted coefficients and smoothers row by row.
double global_deviance(const FittedModel& fm, const Dataset& data);

/// log-likelihood minus 0.5 * sum over smoothers of lambda * int f''^2.
double penalized_loglik(const FittedModel& fm, const Dataset& data);

/// Parameter predictions (inverse-linked) for new rows.
Vector predict(const FittedModel& fm, const Dataset& new_data, Param which);

struct CoefficientRow {
  std::string parameter;
  std::string term;
  double estimate = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 0.0;
};

/// Flattened coefficient table (mu rows first). Requires a converged fit.
std::vector<CoefficientRow> standard_errors(const FittedModel& fm);

/// Total degrees of freedom a specification will consume once fitted:
/// per submodel, one for the intercept, one per parametric term, and
/// 1 + extra_df per spline term.
double model_df_total(const ModelSpec& spec);

} // namespace gamlss
