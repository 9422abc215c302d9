#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamlss/dataset.hpp"
#include "gamlss/diagnostics.hpp"
#include "gamlss/error.hpp"
#include "gamlss/model.hpp"
#include "gamlss/simulate.hpp"
#include "gamlss/special.hpp"

using namespace gamlss;

namespace {

Dataset make_dataset(std::vector<std::pair<std::string, Vector>> cols) {
  Dataset d;
  d.n = cols.front().second.size();
  for (auto& [name, v] : cols) d.set_column(name, std::move(v));
  return d;
}

/// A fitted model representing y ~ N(0, 1): identity-link zero mean,
/// log-link unit dispersion, no covariates.
FittedModel standard_normal_model() {
  FittedModel fm;
  fm.family = Family::NO;
  fm.response = "y";
  fm.converged = true;
  fm.mu.link = LinkId::Identity;
  fm.mu.beta_names = {"(Intercept)"};
  fm.mu.beta = Vector::Zero(1);
  fm.sigma.link = LinkId::Log;
  fm.sigma.beta_names = {"(Intercept)"};
  fm.sigma.beta = Vector::Zero(1);
  return fm;
}

/// Residuals placed exactly at the normal quantiles of the plotting
/// positions (i + 0.5)/n, so a worm plot of them detrends to zero.
ResidualSet exact_normal_residuals(Index n) {
  ResidualSet rs;
  rs.r.resize(n);
  rs.u.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    rs.u[i] = p;
    rs.r[i] = norm_quantile(p);
  }
  return rs;
}

/// A sorted sample whose empirical CDF sits exactly `delta` below the
/// normal CDF wherever the quantile is representable, so the KS statistic
/// equals delta by construction.
Vector ks_shift_sample(Index n, double delta) {
  Vector r(n);
  for (Index i = 0; i < n; ++i) {
    const double p = std::max(
        (static_cast<double>(i) + 1.0) / static_cast<double>(n) - delta,
        1e-6);
    r[i] = norm_quantile(p);
  }
  return r;
}

Dataset gaussian_linear_data(Index n, uint64_t seed) {
  Rng rng(seed);
  Vector x1(n), x2(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x1[i] = rng.uniform();
    x2[i] = rng.normal();
    y[i] = 1.5 + 0.8 * x1[i] - 0.5 * x2[i] + 0.6 * rng.normal();
  }
  return make_dataset({{"y", y}, {"x1", x1}, {"x2", x2}});
}

FitOptions tight() {
  FitOptions o;
  o.tol = 1e-10;
  o.max_outer = 200;
  return o;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

} // namespace

TEST_CASE("generalized criterion is deviance plus penalty times df") {
  CHECK(gaic(19083.0, 36.0, 2.0) == 19155.0);

  const double ln_n = std::log(2109.0);
  const double bic = gaic(19083.0, 36.0, ln_n);
  CHECK(std::abs(bic - 19358.542890497236) < 1e-9);
  CHECK(std::abs(bic - 19359.0) < 0.5); // rounded reporting stays faithful

  CHECK(gaic(1234.5, 17.0, 0.0) == 1234.5);

  CHECK_THROWS_AS(gaic(100.0, -1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(gaic(100.0, 5.0, -0.25), std::invalid_argument);
}

TEST_CASE("criterion report carries aic bic and custom penalties") {
  FittedModel fm;
  fm.global_deviance = 19083.0;
  fm.df_total = 36.0;
  fm.n = 2109;

  const CriterionReport crit = criteria(fm, {0.0, 4.0});
  CHECK(crit.gd == 19083.0);
  CHECK(crit.df_total == 36.0);
  CHECK(crit.n == 2109);
  CHECK(crit.aic - crit.gd == 72.0); // penalty 2 on 36 df, exact
  CHECK(crit.bic == gaic(19083.0, 36.0, std::log(2109.0)));
  CHECK(std::abs((crit.bic - crit.gd) - 275.5) < 0.5);
  CHECK(crit.gaic_custom.at(0.0) == crit.gd);
  CHECK(crit.gaic_custom.at(4.0) == crit.gd + 144.0);
  CHECK(crit.gaic_custom.size() == 2);
}

TEST_CASE("likelihood ratio test matches chi-square tails") {
  SUBCASE("identical deviances give a unit p-value") {
    const LrResult r = lr_test(100.0, 100.0, 2.0, 3.0);
    CHECK(r.lambda == 0.0);
    CHECK(r.df == 1.0);
    CHECK(r.p == 1.0);
  }

  SUBCASE("one extra df at the normal-square critical value") {
    // chi-square(1) is the square of a standard normal, so its 95th
    // percentile is the square of the two-sided normal critical value
    const double q = 1.959963984540054 * 1.959963984540054;
    const LrResult r = lr_test(100.0 + q, 100.0, 5.0, 6.0);
    CHECK(r.df == 1.0);
    CHECK(std::abs(r.p - 0.05) < 1e-9);
  }

  SUBCASE("two extra df: the chi-square is exponential") {
    const double q = -2.0 * std::log(0.05); // survival exp(-x/2)
    const LrResult r = lr_test(50.0 + q, 50.0, 3.0, 5.0);
    CHECK(r.df == 2.0);
    CHECK(std::abs(r.p - 0.05) < 1e-12);
  }

  SUBCASE("a better null is clamped to zero evidence") {
    const LrResult r = lr_test(99.0, 100.0, 2.0, 3.0);
    CHECK(r.lambda == -1.0);
    CHECK(r.p == 1.0);
  }

  SUBCASE("p decreases as the statistic grows") {
    CHECK(lr_test(110.0, 100.0, 2.0, 3.0).p <
          lr_test(105.0, 100.0, 2.0, 3.0).p);
  }

  SUBCASE("non-nested degrees of freedom are rejected") {
    CHECK_THROWS_AS(lr_test(1.0, 1.0, 3.0, 3.0), std::invalid_argument);
    CHECK_THROWS_AS(lr_test(1.0, 1.0, 5.0, 2.0), std::invalid_argument);
  }
}

TEST_CASE("likelihood ratio rejection rate is calibrated under the null") {
  Rng rng(51001);
  const Index n = 80;
  const int reps = 500;
  int rejections = 0;
  double lambda_sum = 0.0;

  ModelSpec null_spec;
  null_spec.response = "y";
  null_spec.family = Family::NO;
  null_spec.mu.link = LinkId::Identity;
  null_spec.sigma.link = LinkId::Log;
  ModelSpec alt_spec = null_spec;
  alt_spec.mu.parametric_terms = {"x"};

  for (int rep = 0; rep < reps; ++rep) {
    Vector y(n), x(n);
    for (Index i = 0; i < n; ++i) {
      y[i] = rng.normal();
      x[i] = rng.normal(); // unrelated to y: the null model is true
    }
    const Dataset d = make_dataset({{"y", y}, {"x", x}});
    const FittedModel f0 = fit(null_spec, d);
    const FittedModel f1 = fit(alt_spec, d);
    REQUIRE(f0.converged);
    REQUIRE(f1.converged);
    const LrResult r =
        lr_test(f0.global_deviance, f1.global_deviance, f0.df_total,
                f1.df_total);
    CHECK(r.lambda > -1e-6); // the larger model can only fit better
    lambda_sum += r.lambda;
    if (r.p < 0.05) ++rejections;
  }

  // nominal 5 percent level: empirical rate within [3%, 7%]
  CHECK(rejections >= 15);
  CHECK(rejections <= 35);
  // the statistic averages near its chi-square(1) mean of one
  CHECK(lambda_sum / reps > 0.75);
  CHECK(lambda_sum / reps < 1.35);
}

TEST_CASE("quantile residuals are the probit of the model probabilities") {
  const FittedModel fm = standard_normal_model();
  Vector y(6);
  y << 0.0, 1.959963984540054, -1.959963984540054, 1000.0, -1000.0, 0.5;
  const Dataset d = make_dataset({{"y", y}});

  const ResidualSet rs = quantile_residuals(fm, d);
  CHECK_FALSE(rs.randomized);
  CHECK_FALSE(rs.seed.has_value());
  CHECK(rs.r.size() == 6);
  CHECK(rs.u.size() == 6);

  // conditional median maps to residual zero
  CHECK(std::abs(rs.u[0] - 0.5) < 1e-15);
  CHECK(std::abs(rs.r[0]) < 1e-12);

  // F = 0.975 maps back to the two-sided normal critical value
  CHECK(std::abs(rs.u[1] - 0.975) < 1e-9);
  CHECK(std::abs(rs.r[1] - 1.95996) < 1e-5);
  CHECK(std::abs(rs.r[2] + rs.r[1]) < 1e-9);

  // probabilities numerically at the boundary are clamped and counted
  CHECK(rs.clamped == 2);
  CHECK(std::abs(rs.r[3] - norm_quantile(1.0 - 1e-12)) < 1e-12);
  CHECK(std::abs(rs.r[4] - norm_quantile(1e-12)) < 1e-12);
  CHECK(rs.u.minCoeff() >= 1e-12);
  CHECK(rs.u.maxCoeff() <= 1.0 - 1e-12);

  // residuals are the normal quantiles of the stored probabilities
  for (Index i = 0; i < 6; ++i) {
    CHECK(std::abs(rs.r[i] - norm_quantile(rs.u[i])) < 1e-12);
  }

  const ResidualSet again = quantile_residuals(fm, d);
  CHECK(bitwise_equal(rs.r, again.r));
  CHECK(bitwise_equal(rs.u, again.u));
}

TEST_CASE("residuals of a well specified gamma fit look standard normal") {
  Rng rng(52001);
  const Index n = 2000;
  Vector x(n), y(n);
  for (Index i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    const double mu = std::exp(0.5 + 1.2 * x[i]);
    y[i] = rng.gamma(1.0 / 0.09, 0.09 * mu); // dispersion 0.3
  }
  const Dataset d = make_dataset({{"y", y}, {"x", x}});

  ModelSpec spec;
  spec.response = "y";
  spec.family = Family::GA;
  spec.mu.link = LinkId::Log;
  spec.mu.parametric_terms = {"x"};
  spec.sigma.link = LinkId::Log;
  const FittedModel fm = fit(spec, d, tight());
  REQUIRE(fm.converged);

  const ResidualSet rs = quantile_residuals(fm, d);
  CHECK(rs.clamped == 0);
  const double mean = rs.r.mean();
  const double var =
      (rs.r.array() - mean).square().sum() / static_cast<double>(n - 1);
  CHECK(std::abs(mean) < 0.05);
  CHECK(var > 0.9);
  CHECK(var < 1.1);
  CHECK(ks_test_normal(rs.r).p > 0.01);
}

TEST_CASE("worm plot of exact normal quantiles detrends to zero") {
  const Index n = 200;
  ResidualSet rs = exact_normal_residuals(n);
  std::mt19937 g(7);
  std::shuffle(rs.r.data(), rs.r.data() + n, g); // order must not matter

  const std::vector<WormPoint> pts = worm_plot_data(rs);
  REQUIRE(pts.size() == static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    CHECK(std::abs(pts[j].deviation) < 1e-12);
    CHECK(pts[j].lower == -pts[j].upper);
    const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(n);
    CHECK(std::abs(pts[j].upper - worm_band_halfwidth(p, n)) < 1e-15);
    if (j > 0) CHECK(pts[j].z > pts[j - 1].z);
  }
}

TEST_CASE("worm band half width matches the closed form reference") {
  CHECK(std::abs(worm_band_halfwidth(0.5, 100) - 0.2456) < 1e-4);

  // quadrupling the sample size halves the band exactly
  const double ratio =
      worm_band_halfwidth(0.3, 500) / worm_band_halfwidth(0.3, 2000);
  CHECK(std::abs(ratio - 2.0) < 1e-12);

  CHECK_THROWS_AS(worm_band_halfwidth(0.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(worm_band_halfwidth(1.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(worm_band_halfwidth(0.5, 0), std::invalid_argument);
}

TEST_CASE("a location shift lifts the worm outside its bands") {
  const Index n = 1000;
  ResidualSet rs = exact_normal_residuals(n);
  rs.r.array() += 0.3;

  const std::vector<WormPoint> pts = worm_plot_data(rs);
  REQUIRE(pts.size() == static_cast<std::size_t>(n));
  Index outside = 0;
  for (const WormPoint& w : pts) {
    CHECK(std::abs(w.deviation - 0.3) < 1e-12);
    if (w.deviation > w.upper || w.deviation < w.lower) ++outside;
  }
  CHECK(outside > 800); // only the extreme tails have bands that wide
}

TEST_CASE("realized worm bands shrink like the square root of n") {
  const std::vector<WormPoint> small = worm_plot_data(
      exact_normal_residuals(1000));
  const std::vector<WormPoint> large = worm_plot_data(
      exact_normal_residuals(4000));
  // compare the central points (z closest to zero)
  const auto center = [](const std::vector<WormPoint>& pts) {
    double best = 1e300;
    double band = 0.0;
    for (const WormPoint& w : pts) {
      if (std::abs(w.z) < best) {
        best = std::abs(w.z);
        band = w.upper;
      }
    }
    return band;
  };
  const double ratio = center(small) / center(large);
  CHECK(ratio > 1.96);
  CHECK(ratio < 2.04);
}

TEST_CASE("worm plot subsampling keeps rank-evenly-spaced points") {
  const Index n = 1000;
  const ResidualSet rs = exact_normal_residuals(n);

  const std::vector<WormPoint> pts = worm_plot_data(rs, 100);
  REQUIRE(pts.size() == 100);
  for (std::size_t j = 1; j < pts.size(); ++j) {
    CHECK(pts[j].z > pts[j - 1].z);
  }
  // first subsampled rank is (2*0+1)*1000/200 = 5
  CHECK(std::abs(pts[0].z - norm_quantile(5.5 / 1000.0)) < 1e-12);

  CHECK(worm_plot_data(rs, -1).size() == static_cast<std::size_t>(n));
  CHECK(worm_plot_data(rs, 5000).size() == static_cast<std::size_t>(n));

  ResidualSet tiny = exact_normal_residuals(9);
  CHECK_THROWS_AS(worm_plot_data(tiny), std::invalid_argument);
  CHECK(worm_plot_data(exact_normal_residuals(10)).size() == 10);
}

TEST_CASE("grouped worm plots bin by covariate rank") {
  const Index n = 400;
  ResidualSet rs;
  rs.r.resize(n);
  rs.u.resize(n);
  Vector c(n);
  for (Index i = 0; i < n; ++i) {
    const double p = (static_cast<double>(i % 100) + 0.5) / 100.0;
    rs.u[i] = p;
    rs.r[i] = norm_quantile(p);
    // strictly increasing, so covariate rank equals row order
    c[i] = static_cast<double>(i / 100) + 0.001 * static_cast<double>(i % 100);
  }

  const std::vector<WormPanel> panels = grouped_worm_plot(rs, c, 4);
  REQUIRE(panels.size() == 4);
  for (int b = 0; b < 4; ++b) {
    const WormPanel& panel = panels[static_cast<std::size_t>(b)];
    CHECK(panel.count == 100);
    CHECK(std::abs(panel.lo - static_cast<double>(b)) < 1e-12);
    CHECK(std::abs(panel.hi - (static_cast<double>(b) + 0.099)) < 1e-12);
    REQUIRE(panel.points.size() == 100);
    for (const WormPoint& w : panel.points) {
      CHECK(std::abs(w.deviation) < 1e-12); // each bin holds exact quantiles
    }
  }

  // scrambling the rows leaves every panel unchanged
  std::mt19937 g(11);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
  std::shuffle(perm.begin(), perm.end(), g);
  ResidualSet rs2;
  rs2.r.resize(n);
  rs2.u.resize(n);
  Vector c2(n);
  for (Index k = 0; k < n; ++k) {
    const Index i = perm[static_cast<std::size_t>(k)];
    rs2.r[k] = rs.r[i];
    rs2.u[k] = rs.u[i];
    c2[k] = c[i];
  }
  const std::vector<WormPanel> scrambled = grouped_worm_plot(rs2, c2, 4);
  REQUIRE(scrambled.size() == 4);
  for (std::size_t b = 0; b < 4; ++b) {
    CHECK(scrambled[b].lo == panels[b].lo);
    CHECK(scrambled[b].hi == panels[b].hi);
    REQUIRE(scrambled[b].points.size() == panels[b].points.size());
    for (std::size_t j = 0; j < panels[b].points.size(); ++j) {
      CHECK(scrambled[b].points[j].z == panels[b].points[j].z);
      CHECK(std::abs(scrambled[b].points[j].deviation -
                     panels[b].points[j].deviation) < 1e-15);
    }
  }

  SUBCASE("bins that would fall under ten observations are rejected") {
    ResidualSet small = exact_normal_residuals(30);
    Vector cov = Vector::LinSpaced(30, 0.0, 1.0);
    CHECK_THROWS_WITH_AS(grouped_worm_plot(small, cov, 4),
                         doctest::Contains("at least 10"),
                         std::invalid_argument);
  }
  SUBCASE("covariate length must match") {
    ResidualSet small = exact_normal_residuals(40);
    Vector cov = Vector::LinSpaced(39, 0.0, 1.0);
    CHECK_THROWS_AS(grouped_worm_plot(small, cov, 2), std::invalid_argument);
  }
  SUBCASE("at least one bin") {
    ResidualSet small = exact_normal_residuals(40);
    Vector cov = Vector::LinSpaced(40, 0.0, 1.0);
    CHECK_THROWS_AS(grouped_worm_plot(small, cov, 0), std::invalid_argument);
  }
}

TEST_CASE("correlation pseudo r-squared") {
  Rng rng(53001);
  const Index n = 2000;
  Vector y(n), independent(n);
  for (Index i = 0; i < n; ++i) {
    y[i] = rng.normal();
    independent[i] = rng.normal();
  }

  CHECK(std::abs(pseudo_r2_corr(y, y) - 1.0) < 1e-12);

  const Vector affine = 2.0 - 3.0 * y.array();
  CHECK(std::abs(pseudo_r2_corr(y, affine) - 1.0) < 1e-12);

  CHECK(pseudo_r2_corr(y, independent) < 0.01);

  const Vector constant = Vector::Constant(n, 4.2);
  CHECK_THROWS_AS(pseudo_r2_corr(y, constant), std::invalid_argument);
  CHECK_THROWS_AS(pseudo_r2_corr(constant, y), std::invalid_argument);
  Vector short_vec(3);
  short_vec << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(pseudo_r2_corr(y, short_vec), std::invalid_argument);
}

TEST_CASE("likelihood pseudo r-squared measures") {
  CHECK(pseudo_r2_mcfadden(-500.0, -1000.0) == 0.5);
  CHECK(pseudo_r2_mcfadden(-1000.0, -1000.0) == 0.0);
  CHECK_THROWS_AS(pseudo_r2_mcfadden(-1.0, 0.0), std::invalid_argument);

  CHECK(pseudo_r2_coxsnell(-100.0, -100.0, 50) == 0.0);
  // a log-likelihood gain of n/2 gives 1 - exp(-1)
  CHECK(std::abs(pseudo_r2_coxsnell(-75.0, -100.0, 50) -
                 0.6321205588285577) < 1e-12);
  CHECK(pseudo_r2_coxsnell(-90.0, -100.0, 50) >
        pseudo_r2_coxsnell(-95.0, -100.0, 50));
  CHECK_THROWS_AS(pseudo_r2_coxsnell(-1.0, -2.0, 0), std::invalid_argument);
}

TEST_CASE("pseudo r-squared grows along a nested fit sequence") {
  const Dataset d = gaussian_linear_data(400, 53002);

  ModelSpec spec;
  spec.response = "y";
  spec.family = Family::NO;
  spec.mu.link = LinkId::Identity;
  spec.sigma.link = LinkId::Log;
  const FittedModel f0 = fit(spec, d, tight());
  spec.mu.parametric_terms = {"x1"};
  const FittedModel f1 = fit(spec, d, tight());
  spec.mu.parametric_terms = {"x1", "x2"};
  const FittedModel f2 = fit(spec, d, tight());
  REQUIRE(f0.converged);
  REQUIRE(f1.converged);
  REQUIRE(f2.converged);

  const double l0 = -0.5 * f0.global_deviance;
  const double l1 = -0.5 * f1.global_deviance;
  const double l2 = -0.5 * f2.global_deviance;

  const double mcf1 = pseudo_r2_mcfadden(l1, l0);
  const double mcf2 = pseudo_r2_mcfadden(l2, l0);
  CHECK(pseudo_r2_mcfadden(l0, l0) == 0.0);
  CHECK(mcf1 > 0.0);
  CHECK(mcf2 >= mcf1 - 1e-9);
  CHECK(mcf2 < 1.0);

  const double cs1 = pseudo_r2_coxsnell(l1, l0, d.n);
  const double cs2 = pseudo_r2_coxsnell(l2, l0, d.n);
  CHECK(cs1 > 0.0);
  CHECK(cs2 >= cs1 - 1e-9);
  CHECK(cs2 < 1.0);

  const Vector y = d.column("y");
  CHECK(pseudo_r2_corr(y, predict(f2, d, Param::Mu)) >=
        pseudo_r2_corr(y, predict(f1, d, Param::Mu)) - 1e-9);
}

TEST_CASE("kolmogorov-smirnov statistic and p-values match references") {
  SUBCASE("exact quantiles give the minimal possible statistic") {
    const ResidualSet rs = exact_normal_residuals(500);
    const KsResult k = ks_test_normal(rs.r);
    CHECK(std::abs(k.stat - 1.0 / 1000.0) < 1e-12);
    CHECK(k.p > 0.999);
  }

  SUBCASE("constructed statistics hit the tabulated survival values") {
    const Index n = 100;
    const double root_n = std::sqrt(static_cast<double>(n));
    const double factor = root_n + 0.12 + 0.11 / root_n;
    const std::vector<std::pair<double, double>> frozen = {
        {0.5, 0.9639452436648751},
        {1.0, 0.26999967167735456},
        {1.3581, 0.0499996304316674},
        {1.62762, 0.01000023513015591},
    };
    for (const auto& [t_target, p_expected] : frozen) {
      const double delta = t_target / factor;
      const KsResult k = ks_test_normal(ks_shift_sample(n, delta));
      CHECK(std::abs(k.stat - delta) < 1e-9);
      CHECK(std::abs(k.p - p_expected) < 1e-7);
    }
  }

  SUBCASE("a gross location shift is rejected hard") {
    ResidualSet rs = exact_normal_residuals(200);
    rs.r.array() += 0.5;
    const KsResult k = ks_test_normal(rs.r);
    CHECK(k.stat > 0.15);
    CHECK(k.stat < 0.25);
    CHECK(k.p < 1e-5);
  }

  SUBCASE("degenerate input is rejected") {
    Vector one(1);
    one << 0.0;
    CHECK_THROWS_AS(ks_test_normal(one), std::invalid_argument);
  }
}

TEST_CASE("kolmogorov-smirnov accepts simulated normal samples") {
  Rng rng(54001);
  const Index n = 300;
  int rejections = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Vector r(n);
    for (Index i = 0; i < n; ++i) r[i] = rng.normal();
    if (ks_test_normal(r).p < 0.01) ++rejections;
  }
  CHECK(rejections <= 4); // nominal rate is one in a hundred
}

TEST_CASE("model diagnosis summarizes residuals criteria and the null fit") {
  const Dataset d = gaussian_linear_data(500, 55001);
  ModelSpec spec;
  spec.response = "y";
  spec.family = Family::NO;
  spec.mu.link = LinkId::Identity;
  spec.mu.parametric_terms = {"x1", "x2"};
  spec.sigma.link = LinkId::Log;
  const FittedModel fm = fit(spec, d, tight());
  REQUIRE(fm.converged);

  const DiagnosticsReport rep = diagnose_model(fm, d);

  CHECK(rep.crit.gd == fm.global_deviance);
  CHECK(rep.crit.aic == criteria(fm).aic);
  CHECK(rep.crit.bic == criteria(fm).bic);

  CHECK(std::abs(rep.resid_mean) < 0.1);
  CHECK(rep.resid_var > 0.85);
  CHECK(rep.resid_var < 1.15);
  CHECK(std::abs(rep.resid_skewness) < 0.25);
  CHECK(std::abs(rep.resid_kurtosis - 3.0) < 0.6);
  CHECK(rep.clamped == 0);
  CHECK(rep.ks.p > 0.01);

  CHECK(rep.r2_corr > 0.2);
  CHECK(rep.r2_corr < 0.8);

  CHECK(rep.null_converged);
  CHECK(rep.null_gd > fm.global_deviance + 10.0);
  CHECK(std::abs(rep.mcfadden -
                 (1.0 - fm.global_deviance / rep.null_gd)) < 1e-12);
  CHECK(rep.mcfadden > 0.0);
  CHECK(rep.mcfadden < 1.0);
  const double expected_cs =
      1.0 - std::exp((fm.global_deviance - rep.null_gd) /
                     static_cast<double>(fm.n));
  CHECK(std::abs(rep.coxsnell - expected_cs) < 1e-12);
  CHECK(rep.coxsnell > 0.0);
  CHECK(rep.coxsnell < 1.0);
}

TEST_CASE("diagnostics render as a stable parsable json document") {
  const Dataset d = gaussian_linear_data(120, 55002);
  ModelSpec spec;
  spec.response = "y";
  spec.family = Family::NO;
  spec.mu.link = LinkId::Identity;
  spec.mu.parametric_terms = {"x1"};
  spec.sigma.link = LinkId::Log;
  const FittedModel fm = fit(spec, d, tight());
  REQUIRE(fm.converged);
  const DiagnosticsReport rep = diagnose_model(fm, d);

  const std::string text = diagnostics_json(rep);
  CHECK(text.back() == '\n');
  CHECK(diagnostics_json(rep) == text); // deterministic rendering

  const nlohmann::json j = nlohmann::json::parse(text);
  CHECK(j.at("format_version").get<int>() == 1);
  CHECK(j.at("criteria").at("gd").get<double>() == rep.crit.gd);
  CHECK(j.at("criteria").at("aic").get<double>() == rep.crit.aic);
  CHECK(j.at("criteria").at("bic").get<double>() == rep.crit.bic);
  CHECK(j.at("criteria").at("n").get<Index>() == rep.crit.n);
  CHECK(j.at("residuals").at("clamped").get<int>() == rep.clamped);
  CHECK(j.at("residuals").at("variance").get<double>() == rep.resid_var);
  CHECK(j.at("ks").at("p").get<double>() == rep.ks.p);
  CHECK(j.at("pseudo_r2").at("corr").get<double>() == rep.r2_corr);
  CHECK(j.at("pseudo_r2").at("cox_snell").get<double>() == rep.coxsnell);
  CHECK(j.at("null_model").at("converged").get<bool>() ==
        rep.null_converged);

  // section order is fixed for reproducible artifacts
  const std::size_t pos_crit = text.find("\"criteria\"");
  const std::size_t pos_resid = text.find("\"residuals\"");
  const std::size_t pos_ks = text.find("\"ks\"");
  const std::size_t pos_r2 = text.find("\"pseudo_r2\"");
  REQUIRE(pos_crit != std::string::npos);
  REQUIRE(pos_resid != std::string::npos);
  REQUIRE(pos_ks != std::string::npos);
  REQUIRE(pos_r2 != std::string::npos);
  CHECK(pos_crit < pos_resid);
  CHECK(pos_resid < pos_ks);
  CHECK(pos_ks < pos_r2);
}
