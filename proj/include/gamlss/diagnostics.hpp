#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gamlss/dataset.hpp"
#include "gamlss/model.hpp"
#include "gamlss/types.hpp"

namespace gamlss {

/// Deviance-based selection criteria: GAIC(#) = GD + # * df.
struct CriterionReport {
  double gd = 0.0;
  double df_total = 0.0;
  Index n = 0;
  double aic = 0.0; // GAIC(2)
  double bic = 0.0; // GAIC(ln n)
  std::map<double, double> gaic_custom;
};

double gaic(double gd, double df, double penalty);

CriterionReport criteria(const FittedModel& fm,
                         const std::vector<double>& extra_penalties = {});

struct LrResult {
  double lambda = 0.0; // gd0 - gd1
  double df = 0.0;     // df1 - df0
  double p = 1.0;      // upper chi-square tail at max(lambda, 0)
};

/// Generalized likelihood-ratio test of a nested pair (model 1 extends
/// model 0). Throws std::invalid_argument unless df1 > df0.
LrResult lr_test(double gd0, double gd1, double df0, double df1);

/// Quantile residuals r_i = Phi^{-1}(F(y_i | fitted parameters)). For the
/// continuous families shipped here the probabilities are deterministic, so
/// randomized is always false and seed stays empty (reserved for discrete
/// families). Probabilities numerically at 0 or 1 are clamped to
/// [1e-12, 1 - 1e-12] and counted.
struct ResidualSet {
  Vector r;
  Vector u;
  bool randomized = false;
  std::optional<uint64_t> seed;
  int clamped = 0;
};

ResidualSet quantile_residuals(const FittedModel& fm, const Dataset& data,
                               std::optional<uint64_t> seed = {});

/// One point of a detrended normal QQ (worm) plot with pointwise 95% bands.
struct WormPoint {
  double z = 0.0;         // theoretical normal quantile
  double deviation = 0.0; // empirical minus theoretical
  double lower = 0.0;
  double upper = 0.0;
};

/// Half-width of the 95% band: 1.96 * sqrt(p(1-p)/n) / phi(Phi^{-1}(p)).
double worm_band_halfwidth(double p, Index n);

/// Detrended QQ data at plotting positions p_i = (i - 0.5)/n. Needs at
/// least 10 residuals. n_points <= 0 keeps every point; otherwise that many
/// rank-evenly-spaced points are returned.
std::vector<WormPoint> worm_plot_data(const ResidualSet& rs,
                                      Index n_points = -1);

/// Worm plot per quantile bin of a covariate (default four bins).
struct WormPanel {
  double lo = 0.0; // covariate range of the bin
  double hi = 0.0;
  Index count = 0;
  std::vector<WormPoint> points;
};

std::vector<WormPanel> grouped_worm_plot(const ResidualSet& rs,
                                         const Vector& covariate,
                                         int bins = 4, Index n_points = -1);

/// Squared Pearson correlation between response and fitted values.
double pseudo_r2_corr(const Vector& y, const Vector& yhat);

/// 1 - loglik_fit / loglik_null.
double pseudo_r2_mcfadden(double loglik_fit, double loglik_null);

/// 1 - exp(2 (loglik_null - loglik_fit) / n).
double pseudo_r2_coxsnell(double loglik_fit, double loglik_null, Index n);

/// Kolmogorov-Smirnov test of residuals against the standard normal,
/// finite-n adjusted (Stephens); p from the asymptotic Kolmogorov series.
struct KsResult {
  double stat = 0.0; // D
  double p = 1.0;
};

KsResult ks_test_normal(const Vector& r);

/// Everything the `diagnose` workflow reports for one fitted model. The
/// null deviance comes from an intercept-only refit with the same family
/// and links.
struct DiagnosticsReport {
  CriterionReport crit;
  double resid_mean = 0.0;
  double resid_var = 0.0;
  double resid_skewness = 0.0;
  double resid_kurtosis = 0.0; // plain kurtosis (3 for a normal)
  int clamped = 0;
  KsResult ks;
  double r2_corr = 0.0;
  double mcfadden = 0.0;
  double coxsnell = 0.0;
  double null_gd = 0.0;
  bool null_converged = false;
};

DiagnosticsReport diagnose_model(const FittedModel& fm, const Dataset& data);

/// Stable two-space-indented JSON rendering of the report.
std::string diagnostics_json(const DiagnosticsReport& report);

} // namespace gamlss
