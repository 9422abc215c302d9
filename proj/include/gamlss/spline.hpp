#pragma once

#include <vector>

#include "gamlss/types.hpp"

namespace gamlss {

/// A fitted weighted natural cubic smoothing spline, minimizer of
///   sum_i w_i (y_i - f(x_i))^2 + lambda * int f''(t)^2 dt.
/// Knots are the sorted unique x values; the curve is represented by its
/// values and second derivatives at the knots (natural: zero at both ends),
/// which is enough to evaluate f and f' anywhere.
struct SmootherFit {
  Vector knots;
  Vector values;
  Vector second_derivs;
  double lambda = 0.0;
  double edf = 0.0; // trace of the linear smoother map
  Vector fitted;    // at the training x, original order
};

/// Reusable solver for one covariate: ties are collapsed to unique knots
/// with aggregated weights once, then fits at different responses and
/// lambdas run in O(n) via the pentadiagonal Reinsch system.
class CubicSplineSolver {
 public:
  CubicSplineSolver(const Vector& x, const Vector& weights);

  /// Same x, new weights (re-aggregates ties).
  void set_weights(const Vector& weights);

  /// Trace of the smoother matrix at the given penalty.
  double trace(double lambda) const;

  /// Penalty whose smoother trace equals target_edf within 1e-6.
  double lambda_for_edf(double target_edf) const;

  SmootherFit fit(const Vector& y, double lambda) const;

  Index n_unique() const { return static_cast<Index>(knots_.size()); }
  const std::vector<double>& knots() const { return knots_; }

 private:
  // The penalized system is conditioned like lambda / h^3, so the banded
  // kernel assembles and solves it in extended precision.
  void build_system(double lambda, std::vector<long double>* d0,
                    std::vector<long double>* d1,
                    std::vector<long double>* d2) const;

  std::vector<Index> order_;        // sort permutation of x
  std::vector<Index> group_of_row_; // row -> unique knot index
  std::vector<double> knots_;
  std::vector<double> row_weight_;
  std::vector<double> agg_weight_; // per-knot sums of row weights
  std::vector<double> h_;          // knot gaps
  Index n_ = 0;
};

SmootherFit fit_cubic_spline(const Vector& x, const Vector& y,
                             const Vector& weights, double lambda);

double edf_to_lambda(const Vector& x, const Vector& weights,
                     double target_edf);

Vector predict_spline(const SmootherFit& fit, const Vector& x_new);

/// f'(x) of the fitted curve (linear extrapolation outside the knots).
double spline_derivative(const SmootherFit& fit, double x);

/// int f''(t)^2 dt of the fitted curve.
double spline_roughness(const SmootherFit& fit);

} // namespace gamlss
