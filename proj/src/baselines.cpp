#include "gamlss/baselines.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gamlss/error.hpp"
#include "gamlss/special.hpp"

namespace gamlss {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

std::string column_label(const std::vector<std::string>& names, Index j) {
  if (j >= 0 && static_cast<std::size_t>(j) < names.size()) {
    return "'" + names[static_cast<std::size_t>(j)] + "'";
  }
  return "#" + std::to_string(j);
}

void check_design(const Matrix& X, const Vector& y) {
  if (X.rows() != y.size()) {
    throw std::invalid_argument("design has " + std::to_string(X.rows()) +
                                " rows but response has " +
                                std::to_string(y.size()));
  }
  if (X.rows() <= X.cols()) {
    throw std::invalid_argument(
        "need more observations than design columns (n=" +
        std::to_string(X.rows()) + ", p=" + std::to_string(X.cols()) + ")");
  }
  for (Index i = 0; i < X.rows(); ++i) {
    for (Index j = 0; j < X.cols(); ++j) {
      if (!std::isfinite(X(i, j))) {
        throw std::invalid_argument(
            "design contains a non-finite value at row " +
            std::to_string(i + 1) + ", column " + std::to_string(j + 1));
      }
    }
    if (!std::isfinite(y[i])) {
      throw std::invalid_argument("response is non-finite at row " +
                                  std::to_string(i + 1));
    }
  }
}

// Rank check shared by OLS and the GLM; names the trailing pivot columns.
void require_full_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr,
                       Index p, const std::vector<std::string>& names) {
  if (qr.rank() == p) return;
  std::string cols;
  const auto& perm = qr.colsPermutation().indices();
  for (Index k = qr.rank(); k < p; ++k) {
    if (!cols.empty()) cols += ", ";
    cols += column_label(names, perm[k]);
  }
  throw RankError("design is rank deficient (rank " + std::to_string(qr.rank()) +
                  " of " + std::to_string(p) + "); dependent columns: " + cols);
}

} // namespace

OlsFit ols_fit(const Matrix& X, const Vector& y,
               const std::vector<std::string>& names) {
  check_design(X, y);
  const Index n = X.rows(), p = X.cols();

  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  require_full_rank(qr, p, names);

  OlsFit fit;
  fit.n = n;
  fit.p = p;
  fit.beta = qr.solve(y);
  fit.fitted = X * fit.beta;
  fit.residuals = y - fit.fitted;

  const double rss = fit.residuals.squaredNorm();
  const double ybar = y.mean();
  const double tss = (y.array() - ybar).square().sum();
  fit.r2 = tss > 0.0 ? 1.0 - rss / tss : 1.0;
  fit.adj_r2 = 1.0 - (1.0 - fit.r2) * static_cast<double>(n - 1) /
                         static_cast<double>(n - p);
  fit.sigma2_hat = rss / static_cast<double>(n - p);

  // Gaussian likelihood at the MLE variance; variance counts as a parameter.
  const double sigma2_mle = rss / static_cast<double>(n);
  fit.loglik = -0.5 * static_cast<double>(n) * (kLog2Pi + std::log(sigma2_mle) + 1.0);
  const double k = static_cast<double>(p + 1);
  fit.aic = -2.0 * fit.loglik + 2.0 * k;
  fit.bic = -2.0 * fit.loglik + std::log(static_cast<double>(n)) * k;

  // (X'X)^{-1} via the thin-Q factorization: R^{-1} R^{-T} with permutation.
  const Matrix thinQ = qr.householderQ() * Matrix::Identity(n, p);
  const Matrix R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  const Matrix Rinv = R.inverse();
  const Matrix perm = qr.colsPermutation();
  const Matrix xtx_inv = perm * (Rinv * Rinv.transpose()) * perm.transpose();

  fit.hat_diagonals = thinQ.rowwise().squaredNorm();
  fit.vcov_classical = fit.sigma2_hat * xtx_inv;

  Vector omega(n);
  for (Index i = 0; i < n; ++i) {
    const double denom = 1.0 - fit.hat_diagonals[i];
    if (denom <= 1e-12) {
      throw std::invalid_argument("leverage at row " + std::to_string(i + 1) +
                                  " is 1 within tolerance; HC3 undefined");
    }
    omega[i] = fit.residuals[i] * fit.residuals[i] / (denom * denom);
  }
  fit.vcov_hc3 = xtx_inv * (X.transpose() * omega.asDiagonal() * X) * xtx_inv;
  return fit;
}

Vector hc3_se(const OlsFit& fit, const Matrix& X) {
  if (X.rows() != fit.n || X.cols() != fit.p) {
    throw std::invalid_argument("design dimensions do not match the fit");
  }
  const Matrix xtx_inv =
      (X.transpose() * X).ldlt().solve(Matrix::Identity(fit.p, fit.p));
  Vector omega(fit.n);
  for (Index i = 0; i < fit.n; ++i) {
    const double denom = 1.0 - fit.hat_diagonals[i];
    if (denom <= 1e-12) {
      throw std::invalid_argument("leverage at row " + std::to_string(i + 1) +
                                  " is 1 within tolerance; HC3 undefined");
    }
    omega[i] = fit.residuals[i] * fit.residuals[i] / (denom * denom);
  }
  const Matrix V = xtx_inv * (X.transpose() * omega.asDiagonal() * X) * xtx_inv;
  return V.diagonal().array().sqrt();
}

Vector box_cox_default_grid() {
  Vector grid(81);
  for (int i = 0; i < 81; ++i) grid[i] = -2.0 + 0.05 * i;
  return grid;
}

namespace {

Vector power_transform(const Vector& y, double lambda) {
  if (lambda == 0.0) return y.array().log();
  return ((y.array().pow(lambda)) - 1.0) / lambda;
}

} // namespace

double box_cox_loglik(const Vector& y, const Matrix& X, double lambda) {
  for (Index i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) {
      throw std::domain_error("power transform needs positive responses (row " +
                              std::to_string(i + 1) + " is " +
                              std::to_string(y[i]) + ")");
    }
  }
  const Index n = y.size();
  const Vector z = power_transform(y, lambda);
  const OlsFit fit = ols_fit(X, z);
  const double rss = fit.residuals.squaredNorm();
  const double sum_log_y = y.array().log().sum();
  return -0.5 * static_cast<double>(n) *
             (kLog2Pi + std::log(rss / static_cast<double>(n)) + 1.0) +
         (lambda - 1.0) * sum_log_y;
}

std::pair<double, Vector> box_cox_profile(const Vector& y, const Matrix& X,
                                          const Vector& lambda_grid) {
  if (lambda_grid.size() < 2) {
    throw std::invalid_argument("lambda grid needs at least 2 points");
  }
  Vector profile(lambda_grid.size());
  Index best = 0;
  for (Index i = 0; i < lambda_grid.size(); ++i) {
    profile[i] = box_cox_loglik(y, X, lambda_grid[i]);
    if (profile[i] > profile[best]) best = i;
  }
  // Golden-section refinement inside the bracketing neighbors.
  double lo = lambda_grid[std::max<Index>(best - 1, 0)];
  double hi = lambda_grid[std::min<Index>(best + 1, lambda_grid.size() - 1)];
  const double gr = 0.6180339887498949; // 1/phi
  double a = hi - gr * (hi - lo);
  double b = lo + gr * (hi - lo);
  double fa = box_cox_loglik(y, X, a);
  double fb = box_cox_loglik(y, X, b);
  while (hi - lo > 1e-4) {
    if (fa > fb) {
      hi = b;
      b = a;
      fb = fa;
      a = hi - gr * (hi - lo);
      fa = box_cox_loglik(y, X, a);
    } else {
      lo = a;
      a = b;
      fa = fb;
      b = lo + gr * (hi - lo);
      fb = box_cox_loglik(y, X, b);
    }
  }
  return {0.5 * (lo + hi), profile};
}

std::pair<double, double> jarque_bera(const Vector& residuals) {
  const Index n = residuals.size();
  if (n < 8) {
    throw std::invalid_argument("Jarque-Bera needs at least 8 residuals, got " +
                                std::to_string(n));
  }
  const double mean = residuals.mean();
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double d = residuals[i] - mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double nn = static_cast<double>(n);
  m2 /= nn;
  m3 /= nn;
  m4 /= nn;
  if (m2 <= 0.0) return {0.0, 1.0};
  const double skew = m3 / std::pow(m2, 1.5);
  const double kurt = m4 / (m2 * m2);
  const double jb =
      nn / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
  return {jb, chisq_upper_tail(jb, 2.0)};
}

std::pair<double, double> breusch_pagan(const Matrix& X, const Vector& residuals) {
  if (X.cols() < 2) {
    throw std::invalid_argument(
        "Breusch-Pagan needs regressors beyond the intercept");
  }
  const Vector e2 = residuals.array().square();
  const double tss = (e2.array() - e2.mean()).square().sum();
  if (tss <= 1e-300) return {0.0, 1.0}; // constant squared residuals
  const OlsFit aux = ols_fit(X, e2);
  const double stat = static_cast<double>(X.rows()) * aux.r2;
  const double df = static_cast<double>(X.cols() - 1);
  return {stat, chisq_upper_tail(std::max(stat, 0.0), df)};
}

GlmFit glm_fit_gamma_log(const Matrix& X, const Vector& y,
                         const std::vector<std::string>& names) {
  check_design(X, y);
  const Index n = X.rows(), p = X.cols();
  for (Index i = 0; i < n; ++i) {
    if (!(y[i] > 0.0)) {
      throw std::domain_error("gamma GLM needs positive responses (row " +
                              std::to_string(i + 1) + " is " +
                              std::to_string(y[i]) + ")");
    }
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(X);
  qr.setThreshold(1e-10);
  require_full_rank(qr, p, names);

  // log link makes the IRLS weights constant, so the factorization is reused.
  GlmFit fit;
  fit.n = n;
  fit.rank = p;
  Vector eta = y.array().log();
  Vector mu = y;
  auto deviance_of = [&y, n](const Vector& m) {
    double dev = 0.0;
    for (Index i = 0; i < n; ++i) {
      dev += 2.0 * (-std::log(y[i] / m[i]) + (y[i] - m[i]) / m[i]);
    }
    return dev;
  };
  const Vector col_scale = X.cwiseAbs().colwise().maxCoeff().cwiseMax(1.0);
  auto score_small = [&](const Vector& m) {
    // score in eta units is X'(y-mu)/mu; scale by column magnitude so the
    // stationarity check is unit-free
    const Vector s = X.transpose() * ((y - m).array() / m.array()).matrix();
    return (s.array().abs() / col_scale.array()).maxCoeff() < 1e-6;
  };
  double dev = deviance_of(mu);
  int it = 0;
  bool converged = false;
  for (; it < 100; ++it) {
    const Vector z = eta.array() + (y - mu).array() / mu.array();
    fit.beta = qr.solve(z);
    eta = X * fit.beta;
    mu = eta.array().exp();
    for (Index i = 0; i < n; ++i) {
      if (!std::isfinite(mu[i]) || mu[i] <= 0.0) {
        throw FitError("gamma GLM diverged at iteration " + std::to_string(it) +
                       " (fitted mean non-positive or non-finite at row " +
                       std::to_string(i + 1) + ")");
      }
    }
    const double new_dev = deviance_of(mu);
    const bool done = std::abs(new_dev - dev) < 1e-10 && score_small(mu);
    dev = new_dev;
    if (done) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw FitError("gamma GLM did not converge within 100 iterations (deviance " +
                   std::to_string(dev) + ")");
  }
  fit.iterations = it + 1;
  fit.eta = eta;
  fit.mu_hat = mu;
  fit.deviance = dev;

  double pearson = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double r = (y[i] - mu[i]) / mu[i];
    pearson += r * r;
  }
  fit.dispersion = pearson / static_cast<double>(n - p);

  // Wald covariance: dispersion * (X'X)^{-1} (unit IRLS weights under log link)
  const Matrix xtx_inv =
      (X.transpose() * X).ldlt().solve(Matrix::Identity(p, p));
  fit.se = (fit.dispersion * xtx_inv.diagonal().array()).sqrt();
  fit.z = fit.beta.array() / fit.se.array();
  fit.p = Vector(p);
  for (Index j = 0; j < p; ++j) {
    fit.p[j] = 2.0 * norm_cdf(-std::abs(fit.z[j]));
  }

  // Likelihood at the deviance-based dispersion (reporting convention):
  // shape a = 1/disp, scale mu*disp.
  const double disp = dev / static_cast<double>(n);
  const double a = 1.0 / disp;
  double ll = 0.0;
  for (Index i = 0; i < n; ++i) {
    ll += (a - 1.0) * std::log(y[i]) - y[i] / (disp * mu[i]) -
          a * std::log(disp * mu[i]) - log_gamma(a);
  }
  fit.loglik = ll;
  const double k = static_cast<double>(p + 1); // dispersion counted
  fit.aic = -2.0 * ll + 2.0 * k;
  fit.bic = -2.0 * ll + std::log(static_cast<double>(n)) * k;
  return fit;
}

} // namespace gamlss
