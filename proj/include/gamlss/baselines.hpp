#pragma once

#include <string>
#include <utility>
#include <vector>

#include "gamlss/types.hpp"

namespace gamlss {

/// Ordinary least-squares fit with classical and leverage-robust covariance.
/// sigma2_hat is the unbiased residual variance RSS/(n-p); aic/bic use the
/// Gaussian likelihood with the variance counted as a parameter.
struct OlsFit {
  Vector beta;
  Vector residuals;
  Vector fitted;
  double sigma2_hat = 0.0;
  double r2 = 0.0;
  double adj_r2 = 0.0;
  double loglik = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  Vector hat_diagonals;
  Matrix vcov_classical;
  Matrix vcov_hc3;
  Index n = 0;
  Index p = 0;
};

/// Gamma GLM with log link fitted by iteratively reweighted least squares.
struct GlmFit {
  Vector beta;
  Vector eta;
  Vector mu_hat;
  double dispersion = 0.0; // Pearson moment estimate
  double deviance = 0.0;
  double loglik = 0.0; // at dispersion deviance/n
  double aic = 0.0;
  double bic = 0.0;
  Vector se, z, p;
  Index n = 0;
  Index rank = 0;
  int iterations = 0;
};

/// names, when given, label columns in rank-deficiency errors.
OlsFit ols_fit(const Matrix& X, const Vector& y,
               const std::vector<std::string>& names = {});

/// HC3 sandwich standard errors: sqrt of the diagonal of
/// (X'X)^{-1} X' diag(e_i^2/(1-h_i)^2) X (X'X)^{-1}.
Vector hc3_se(const OlsFit& fit, const Matrix& X);

/// Power-transform profile likelihood over the grid, refined by
/// golden-section search to 1e-4. Returns (lambda_hat, profile values).
std::pair<double, Vector> box_cox_profile(const Vector& y, const Matrix& X,
                                          const Vector& lambda_grid);

/// Default grid: 81 equispaced points on [-2, 2].
Vector box_cox_default_grid();

/// Profile log-likelihood at a single lambda (includes the Jacobian term).
double box_cox_loglik(const Vector& y, const Matrix& X, double lambda);

std::pair<double, double> jarque_bera(const Vector& residuals);

std::pair<double, double> breusch_pagan(const Matrix& X, const Vector& residuals);

GlmFit glm_fit_gamma_log(const Matrix& X, const Vector& y,
                         const std::vector<std::string>& names = {});

} // namespace gamlss
