#include "gamlss/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "gamlss/error.hpp"

namespace gamlss {

namespace {

// Q (n_unique x (n_unique-2)) maps interior second derivatives to residual
// divided differences; column c touches rows c, c+1, c+2.
struct QColumn {
  long double q1, q2, q3;
};

// The penalized system's entries scale like lambda / h^3, so its condition
// number blows up when knot gaps are uneven; the banded kernel therefore
// assembles, factorizes and solves in extended precision, which keeps the
// fitted values accurate to ~1e-11 even on systems conditioned like 1e9.
QColumn q_column(const std::vector<double>& h, std::size_t c) {
  const long double inv_a = 1.0L / static_cast<long double>(h[c]);
  const long double inv_b = 1.0L / static_cast<long double>(h[c + 1]);
  return {inv_a, -inv_a - inv_b, inv_b};
}

// LDL^T factorization of a symmetric positive-definite pentadiagonal matrix
// given by its diagonal d0, first off-diagonal d1 and second off-diagonal d2.
struct BandedLdlt {
  std::vector<long double> d;  // D
  std::vector<long double> l1; // L[i+1][i]
  std::vector<long double> l2; // L[i+2][i]
};

BandedLdlt factorize(const std::vector<long double>& d0,
                     const std::vector<long double>& d1,
                     const std::vector<long double>& d2) {
  const std::size_t k = d0.size();
  BandedLdlt f;
  f.d.assign(k, 0.0L);
  f.l1.assign(k, 0.0L);
  f.l2.assign(k, 0.0L);
  for (std::size_t i = 0; i < k; ++i) {
    long double di = d0[i];
    if (i >= 1) di -= f.l1[i - 1] * f.l1[i - 1] * f.d[i - 1];
    if (i >= 2) di -= f.l2[i - 2] * f.l2[i - 2] * f.d[i - 2];
    if (!(di > 0.0L) || !std::isfinite(di)) {
      throw FitError("spline system is not positive definite (pivot " +
                     std::to_string(i) + ")");
    }
    f.d[i] = di;
    if (i + 1 < k) {
      long double off = d1[i];
      if (i >= 1) off -= f.l1[i - 1] * f.l2[i - 1] * f.d[i - 1];
      f.l1[i] = off / di;
    }
    if (i + 2 < k) f.l2[i] = d2[i] / di;
  }
  return f;
}

std::vector<long double> solve(const BandedLdlt& f,
                               std::vector<long double> rhs) {
  const std::size_t k = rhs.size();
  for (std::size_t i = 0; i < k; ++i) {
    if (i >= 1) rhs[i] -= f.l1[i - 1] * rhs[i - 1];
    if (i >= 2) rhs[i] -= f.l2[i - 2] * rhs[i - 2];
  }
  for (std::size_t i = 0; i < k; ++i) rhs[i] /= f.d[i];
  for (std::size_t ii = k; ii-- > 0;) {
    if (ii + 1 < k) rhs[ii] -= f.l1[ii] * rhs[ii + 1];
    if (ii + 2 < k) rhs[ii] -= f.l2[ii] * rhs[ii + 2];
  }
  return rhs;
}

// Central bands of M^{-1} (Takahashi recurrences): only entries within the
// bandwidth are needed for the smoother trace.
struct SelectedInverse {
  std::vector<long double> z0; // Z[i][i]
  std::vector<long double> z1; // Z[i][i+1]
  std::vector<long double> z2; // Z[i][i+2]
};

SelectedInverse selected_inverse(const BandedLdlt& f) {
  const std::size_t k = f.d.size();
  SelectedInverse z;
  z.z0.assign(k, 0.0L);
  z.z1.assign(k, 0.0L);
  z.z2.assign(k, 0.0L);
  for (std::size_t ii = k; ii-- > 0;) {
    if (ii + 2 < k) {
      z.z2[ii] = -(f.l1[ii] * z.z1[ii + 1] + f.l2[ii] * z.z0[ii + 2]);
    }
    if (ii + 1 < k) {
      long double v = f.l1[ii] * z.z0[ii + 1];
      if (ii + 2 < k) v += f.l2[ii] * z.z1[ii + 1];
      z.z1[ii] = -v;
    }
    long double v = 1.0L / f.d[ii];
    if (ii + 1 < k) v -= f.l1[ii] * z.z1[ii];
    if (ii + 2 < k) v -= f.l2[ii] * z.z2[ii];
    z.z0[ii] = v;
  }
  return z;
}

void check_finite(const Vector& v, const char* what) {
  for (Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw std::invalid_argument(std::string(what) +
                                  " contains a non-finite value at row " +
                                  std::to_string(i));
    }
  }
}

} // namespace

CubicSplineSolver::CubicSplineSolver(const Vector& x, const Vector& weights) {
  n_ = x.size();
  if (weights.size() != n_) {
    throw std::invalid_argument("x and weights must have equal length");
  }
  check_finite(x, "x");
  order_.resize(static_cast<std::size_t>(n_));
  std::iota(order_.begin(), order_.end(), Index{0});
  std::sort(order_.begin(), order_.end(),
            [&x](Index a, Index b) { return x[a] < x[b]; });

  // x values closer than 1e-6 of the data range merge into one knot: gaps
  // far below the data resolution add nothing to the curve but put entries
  // of wildly different magnitude into the penalized system, which makes
  // its factorization numerically indefinite.
  const double span =
      x[order_.back()] - x[order_.front()]; // order_ sorts ascending
  const double tie_tol = 1e-6 * span;

  group_of_row_.assign(static_cast<std::size_t>(n_), 0);
  knots_.clear();
  std::vector<double> group_max;
  for (std::size_t r = 0; r < order_.size(); ++r) {
    const Index row = order_[r];
    const double xi = x[row];
    if (knots_.empty() || xi - knots_.back() > tie_tol) {
      knots_.push_back(xi); // group anchor (its minimum); midpoint later
      group_max.push_back(xi);
    } else {
      group_max.back() = xi;
    }
    group_of_row_[static_cast<std::size_t>(row)] =
        static_cast<Index>(knots_.size()) - 1;
  }
  for (std::size_t g = 0; g < knots_.size(); ++g) {
    knots_[g] = 0.5 * (knots_[g] + group_max[g]);
  }
  if (knots_.size() < 4) {
    throw std::invalid_argument(
        "cubic spline needs at least 4 distinct x values, got " +
        std::to_string(knots_.size()));
  }
  h_.resize(knots_.size() - 1);
  for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
    h_[i] = knots_[i + 1] - knots_[i];
  }
  set_weights(weights);
}

void CubicSplineSolver::set_weights(const Vector& weights) {
  if (weights.size() != n_) {
    throw std::invalid_argument("weights length does not match x");
  }
  row_weight_.assign(static_cast<std::size_t>(n_), 0.0);
  agg_weight_.assign(knots_.size(), 0.0);
  for (Index i = 0; i < n_; ++i) {
    const double w = weights[i];
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be positive and finite (row " +
                                  std::to_string(i) + ")");
    }
    row_weight_[static_cast<std::size_t>(i)] = w;
    agg_weight_[static_cast<std::size_t>(
        group_of_row_[static_cast<std::size_t>(i)])] += w;
  }
}

void CubicSplineSolver::build_system(double lambda,
                                     std::vector<long double>* d0,
                                     std::vector<long double>* d1,
                                     std::vector<long double>* d2) const {
  const std::size_t m = knots_.size();
  const std::size_t k = m - 2;
  const long double lam = lambda;
  d0->assign(k, 0.0L);
  d1->assign(k > 0 ? k - 1 : 0, 0.0L);
  d2->assign(k > 1 ? k - 2 : 0, 0.0L);
  for (std::size_t c = 0; c < k; ++c) {
    const QColumn q = q_column(h_, c);
    (*d0)[c] = (static_cast<long double>(h_[c]) + h_[c + 1]) / 3.0L +
               lam * (q.q1 * q.q1 / agg_weight_[c] +
                      q.q2 * q.q2 / agg_weight_[c + 1] +
                      q.q3 * q.q3 / agg_weight_[c + 2]);
    if (c + 1 < k) {
      const QColumn qn = q_column(h_, c + 1);
      (*d1)[c] = static_cast<long double>(h_[c + 1]) / 6.0L +
                 lam * (q.q2 * qn.q1 / agg_weight_[c + 1] +
                        q.q3 * qn.q2 / agg_weight_[c + 2]);
    }
    if (c + 2 < k) {
      const QColumn qnn = q_column(h_, c + 2);
      (*d2)[c] = lam * q.q3 * qnn.q1 / agg_weight_[c + 2];
    }
  }
}

double CubicSplineSolver::trace(double lambda) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
  const std::size_t m = knots_.size();
  if (lambda == 0.0) return static_cast<double>(m);
  std::vector<long double> d0, d1, d2;
  build_system(lambda, &d0, &d1, &d2);
  const BandedLdlt f = factorize(d0, d1, d2);
  const SelectedInverse z = selected_inverse(f);
  const std::size_t k = m - 2;
  // trace(S) = m - lambda * sum_i (Q M^{-1} Q^T)_{ii} / w_i over unique knots.
  long double correction = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t cols[3];
    long double a[3];
    int nc = 0;
    if (i >= 2 && i - 2 < k) {
      cols[nc] = i - 2;
      a[nc++] = q_column(h_, i - 2).q3;
    }
    if (i >= 1 && i - 1 < k) {
      cols[nc] = i - 1;
      a[nc++] = q_column(h_, i - 1).q2;
    }
    if (i < k) {
      cols[nc] = i;
      a[nc++] = q_column(h_, i).q1;
    }
    long double qzq = 0.0L;
    for (int s = 0; s < nc; ++s) {
      for (int t = 0; t < nc; ++t) {
        const std::size_t lo = std::min(cols[s], cols[t]);
        const std::size_t gap = std::max(cols[s], cols[t]) - lo;
        const long double zst =
            gap == 0 ? z.z0[lo] : (gap == 1 ? z.z1[lo] : z.z2[lo]);
        qzq += a[s] * a[t] * zst;
      }
    }
    correction += qzq / agg_weight_[i];
  }
  return static_cast<double>(static_cast<long double>(m) -
                             static_cast<long double>(lambda) * correction);
}

double CubicSplineSolver::lambda_for_edf(double target_edf) const {
  const double m = static_cast<double>(knots_.size());
  if (!(target_edf > 2.0) || target_edf > m + 1e-9) {
    throw std::invalid_argument(
        "target_edf must lie in (2, number of distinct x]");
  }
  if (target_edf >= m) return 0.0;
  double lo = 1.0, hi = 1.0;
  while (trace(hi) > target_edf) {
    hi *= 16.0;
    if (hi > 1e300) return hi;
  }
  while (trace(lo) < target_edf) {
    lo /= 16.0;
    if (lo < 1e-300) return 0.0;
  }
  // Bisection on log(lambda); the trace is monotone decreasing in lambda.
  // Near the linear limit the stopping tolerance tightens with the gap to 2
  // so the returned penalty tracks the target rather than the tolerance.
  const double tol = std::min(1e-6, std::max(1e-12, 0.05 * (target_edf - 2.0)));
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double tr = trace(mid);
    if (std::abs(tr - target_edf) < tol) return mid;
    if (tr > target_edf) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi / lo < 1.0 + 1e-15) break;
  }
  return std::sqrt(lo * hi);
}

SmootherFit CubicSplineSolver::fit(const Vector& y, double lambda) const {
  if (y.size() != n_) throw std::invalid_argument("y length does not match x");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be finite and non-negative");
  }
  check_finite(y, "y");
  const std::size_t m = knots_.size();
  const std::size_t k = m - 2;

  // Weighted means of y within each tie group: the penalized criterion
  // depends on the fit only through these (plus a constant).
  std::vector<double> ybar(m, 0.0);
  for (Index i = 0; i < n_; ++i) {
    const std::size_t g =
        static_cast<std::size_t>(group_of_row_[static_cast<std::size_t>(i)]);
    ybar[g] += row_weight_[static_cast<std::size_t>(i)] * y[i];
  }
  for (std::size_t g = 0; g < m; ++g) ybar[g] /= agg_weight_[g];

  // Reinsch: solve (R + lambda Q^T W^{-1} Q) gamma = Q^T ybar, then
  // f = ybar - lambda W^{-1} Q gamma.
  std::vector<long double> rhs(k, 0.0L);
  for (std::size_t c = 0; c < k; ++c) {
    rhs[c] = (static_cast<long double>(ybar[c + 2]) - ybar[c + 1]) /
                 h_[c + 1] -
             (static_cast<long double>(ybar[c + 1]) - ybar[c]) / h_[c];
  }
  std::vector<long double> d0, d1, d2;
  build_system(lambda, &d0, &d1, &d2);
  const BandedLdlt f = factorize(d0, d1, d2);
  const std::vector<long double> gamma = solve(f, rhs);

  SmootherFit out;
  out.lambda = lambda;
  out.knots = Eigen::Map<const Vector>(knots_.data(), static_cast<Index>(m));
  out.second_derivs = Vector::Zero(static_cast<Index>(m));
  for (std::size_t c = 0; c < k; ++c) {
    out.second_derivs[static_cast<Index>(c) + 1] =
        static_cast<double>(gamma[c]);
  }
  out.values = Vector::Zero(static_cast<Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    long double qg = 0.0L;
    if (i >= 2 && i - 2 < k) qg += q_column(h_, i - 2).q3 * gamma[i - 2];
    if (i >= 1 && i - 1 < k) qg += q_column(h_, i - 1).q2 * gamma[i - 1];
    if (i < k) qg += q_column(h_, i).q1 * gamma[i];
    out.values[static_cast<Index>(i)] = static_cast<double>(
        ybar[i] - static_cast<long double>(lambda) * qg / agg_weight_[i]);
  }
  out.edf = lambda == 0.0 ? static_cast<double>(m) : trace(lambda);
  out.fitted = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    out.fitted[i] = out.values[group_of_row_[static_cast<std::size_t>(i)]];
  }
  return out;
}

SmootherFit fit_cubic_spline(const Vector& x, const Vector& y,
                             const Vector& weights, double lambda) {
  CubicSplineSolver solver(x, weights);
  return solver.fit(y, lambda);
}

double edf_to_lambda(const Vector& x, const Vector& weights,
                     double target_edf) {
  CubicSplineSolver solver(x, weights);
  return solver.lambda_for_edf(target_edf);
}

namespace {

// Interval index for evaluation: largest i with knots[i] <= xv, clamped to
// [0, m-2] so boundary points use the adjacent segment.
Index interval_of(const Vector& knots, double xv) {
  const Index m = knots.size();
  Index lo = 0, hi = m - 1;
  if (xv <= knots[0]) return 0;
  if (xv >= knots[m - 1]) return m - 2;
  while (hi - lo > 1) {
    const Index mid = (lo + hi) / 2;
    if (knots[mid] <= xv) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

double eval_segment(const SmootherFit& fit, Index i, double xv) {
  const double h = fit.knots[i + 1] - fit.knots[i];
  const double A = (fit.knots[i + 1] - xv) / h;
  const double B = (xv - fit.knots[i]) / h;
  return A * fit.values[i] + B * fit.values[i + 1] +
         ((A * A * A - A) * fit.second_derivs[i] +
          (B * B * B - B) * fit.second_derivs[i + 1]) *
             h * h / 6.0;
}

double segment_slope(const SmootherFit& fit, Index i, double xv) {
  const double h = fit.knots[i + 1] - fit.knots[i];
  const double A = (fit.knots[i + 1] - xv) / h;
  const double B = (xv - fit.knots[i]) / h;
  return (fit.values[i + 1] - fit.values[i]) / h -
         (3.0 * A * A - 1.0) * h * fit.second_derivs[i] / 6.0 +
         (3.0 * B * B - 1.0) * h * fit.second_derivs[i + 1] / 6.0;
}

} // namespace

Vector predict_spline(const SmootherFit& fit, const Vector& x_new) {
  const Index m = fit.knots.size();
  if (m < 2 || fit.values.size() != m || fit.second_derivs.size() != m) {
    throw std::invalid_argument("smoother fit is incomplete");
  }
  Vector out(x_new.size());
  const double left_slope = segment_slope(fit, 0, fit.knots[0]);
  const double right_slope = segment_slope(fit, m - 2, fit.knots[m - 1]);
  for (Index j = 0; j < x_new.size(); ++j) {
    const double xv = x_new[j];
    if (!std::isfinite(xv)) {
      throw std::invalid_argument("prediction point is non-finite at row " +
                                  std::to_string(j));
    }
    if (xv < fit.knots[0]) {
      out[j] = fit.values[0] + (xv - fit.knots[0]) * left_slope;
    } else if (xv > fit.knots[m - 1]) {
      out[j] = fit.values[m - 1] + (xv - fit.knots[m - 1]) * right_slope;
    } else {
      out[j] = eval_segment(fit, interval_of(fit.knots, xv), xv);
    }
  }
  return out;
}

double spline_derivative(const SmootherFit& fit, double x) {
  const Index m = fit.knots.size();
  if (x <= fit.knots[0]) return segment_slope(fit, 0, fit.knots[0]);
  if (x >= fit.knots[m - 1]) return segment_slope(fit, m - 2, fit.knots[m - 1]);
  return segment_slope(fit, interval_of(fit.knots, x), x);
}

double spline_roughness(const SmootherFit& fit) {
  // f'' is piecewise linear between knots, zero outside:
  // each segment contributes h*(g_i^2 + g_i g_{i+1} + g_{i+1}^2)/3.
  double out = 0.0;
  for (Index i = 0; i + 1 < fit.knots.size(); ++i) {
    const double h = fit.knots[i + 1] - fit.knots[i];
    const double a = fit.second_derivs[i];
    const double b = fit.second_derivs[i + 1];
    out += h * (a * a + a * b + b * b) / 3.0;
  }
  return out;
}

} // namespace gamlss
