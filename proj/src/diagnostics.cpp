#include "gamlss/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gamlss/error.hpp"
#include "gamlss/special.hpp"

namespace gamlss {

namespace {

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;

std::vector<Index> rank_order(const Vector& r) {
  std::vector<Index> idx(static_cast<std::size_t>(r.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::sort(idx.begin(), idx.end(),
            [&r](Index a, Index b) { return r[a] < r[b]; });
  return idx;
}

} // namespace

double gaic(double gd, double df, double penalty) {
  if (!(df >= 0.0)) {
    throw std::invalid_argument("gaic needs df >= 0, got " +
                                std::to_string(df));
  }
  if (!(penalty >= 0.0)) {
    throw std::invalid_argument("gaic needs a nonnegative penalty, got " +
                                std::to_string(penalty));
  }
  return gd + penalty * df;
}

CriterionReport criteria(const FittedModel& fm,
                         const std::vector<double>& extra_penalties) {
  CriterionReport rep;
  rep.gd = fm.global_deviance;
  rep.df_total = fm.df_total;
  rep.n = fm.n;
  rep.aic = gaic(rep.gd, rep.df_total, 2.0);
  rep.bic = gaic(rep.gd, rep.df_total, std::log(static_cast<double>(fm.n)));
  for (double k : extra_penalties) {
    rep.gaic_custom[k] = gaic(rep.gd, rep.df_total, k);
  }
  return rep;
}

LrResult lr_test(double gd0, double gd1, double df0, double df1) {
  const double d = df1 - df0;
  if (!(d > 0.0)) {
    throw std::invalid_argument(
        "likelihood-ratio test needs the extended model to have more "
        "degrees of freedom (df0 = " +
        std::to_string(df0) + ", df1 = " + std::to_string(df1) + ")");
  }
  LrResult out;
  out.lambda = gd0 - gd1;
  out.df = d;
  const double stat = std::max(0.0, out.lambda);
  out.p = stat == 0.0 ? 1.0 : chisq_upper_tail(stat, d);
  return out;
}

ResidualSet quantile_residuals(const FittedModel& fm, const Dataset& data,
                               std::optional<uint64_t> seed) {
  (void)seed; // continuous families need no randomization
  const Vector& y = data.column(fm.response);
  const Vector mu = predict(fm, data, Param::Mu);
  const Vector sigma = predict(fm, data, Param::Sigma);

  ResidualSet rs;
  rs.randomized = false;
  rs.u.resize(data.n);
  rs.r.resize(data.n);
  for (Index i = 0; i < data.n; ++i) {
    double u = cdf(fm.family, y[i], mu[i], sigma[i]);
    if (u < kClampLo) {
      u = kClampLo;
      ++rs.clamped;
    } else if (u > kClampHi) {
      u = kClampHi;
      ++rs.clamped;
    }
    rs.u[i] = u;
    rs.r[i] = norm_quantile(u);
  }
  return rs;
}

double worm_band_halfwidth(double p, Index n) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("band position must be inside (0,1)");
  }
  if (n < 1) throw std::invalid_argument("band needs a positive sample size");
  const double z = norm_quantile(p);
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n)) /
         norm_pdf(z);
}

std::vector<WormPoint> worm_plot_data(const ResidualSet& rs, Index n_points) {
  const Index n = rs.r.size();
  if (n < 10) {
    throw std::invalid_argument("worm plot needs at least 10 residuals, got " +
                                std::to_string(n));
  }
  Vector sorted = rs.r;
  std::sort(sorted.data(), sorted.data() + sorted.size());

  const Index keep = (n_points <= 0 || n_points >= n) ? n : n_points;
  std::vector<WormPoint> out;
  out.reserve(static_cast<std::size_t>(keep));
  for (Index j = 0; j < keep; ++j) {
    // rank-even subsample: for keep == n this is the identity
    const Index i =
        (keep == n)
            ? j
            : static_cast<Index>((2 * j + 1) * n / (2 * keep));
    const double p =
        (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    WormPoint w;
    w.z = norm_quantile(p);
    w.deviation = sorted[i] - w.z;
    const double half = worm_band_halfwidth(p, n);
    w.lower = -half;
    w.upper = half;
    out.push_back(w);
  }
  return out;
}

std::vector<WormPanel> grouped_worm_plot(const ResidualSet& rs,
                                         const Vector& covariate, int bins,
                                         Index n_points) {
  const Index n = rs.r.size();
  if (covariate.size() != n) {
    throw std::invalid_argument("grouping covariate has length " +
                                std::to_string(covariate.size()) +
                                ", residuals have " + std::to_string(n));
  }
  if (bins < 1) throw std::invalid_argument("need at least one bin");

  const std::vector<Index> order = rank_order(covariate);
  std::vector<WormPanel> panels;
  for (int b = 0; b < bins; ++b) {
    const Index lo = n * b / bins;
    const Index hi = n * (b + 1) / bins; // exclusive
    const Index count = hi - lo;
    if (count < 10) {
      throw std::invalid_argument(
          "worm-plot bin " + std::to_string(b + 1) + " holds only " +
          std::to_string(count) + " observations; need at least 10");
    }
    ResidualSet sub;
    sub.r.resize(count);
    sub.u.resize(count);
    for (Index k = 0; k < count; ++k) {
      sub.r[k] = rs.r[order[static_cast<std::size_t>(lo + k)]];
      sub.u[k] = rs.u[order[static_cast<std::size_t>(lo + k)]];
    }
    WormPanel panel;
    panel.lo = covariate[order[static_cast<std::size_t>(lo)]];
    panel.hi = covariate[order[static_cast<std::size_t>(hi - 1)]];
    panel.count = count;
    panel.points = worm_plot_data(sub, n_points);
    panels.push_back(std::move(panel));
  }
  return panels;
}

double pseudo_r2_corr(const Vector& y, const Vector& yhat) {
  if (y.size() != yhat.size() || y.size() < 2) {
    throw std::invalid_argument("correlation needs two equally sized vectors "
                                "of at least two entries");
  }
  if (y.maxCoeff() == y.minCoeff() || yhat.maxCoeff() == yhat.minCoeff()) {
    throw std::invalid_argument(
        "correlation is undefined for a constant vector");
  }
  const double my = y.mean();
  const double mh = yhat.mean();
  const Vector dy = y.array() - my;
  const Vector dh = yhat.array() - mh;
  const double vy = dy.squaredNorm();
  const double vh = dh.squaredNorm();
  if (vy <= 0.0 || vh <= 0.0) {
    throw std::invalid_argument(
        "correlation is undefined for a constant vector");
  }
  const double c = dy.dot(dh);
  const double r2 = (c * c) / (vy * vh);
  return std::min(1.0, std::max(0.0, r2));
}

double pseudo_r2_mcfadden(double loglik_fit, double loglik_null) {
  if (loglik_null == 0.0) {
    throw std::invalid_argument(
        "McFadden pseudo-R2 is undefined for a zero null log-likelihood");
  }
  return 1.0 - loglik_fit / loglik_null;
}

double pseudo_r2_coxsnell(double loglik_fit, double loglik_null, Index n) {
  if (n < 1) {
    throw std::invalid_argument("Cox-Snell pseudo-R2 needs n > 0");
  }
  return 1.0 - std::exp(2.0 * (loglik_null - loglik_fit) /
                        static_cast<double>(n));
}

KsResult ks_test_normal(const Vector& r) {
  const Index n = r.size();
  if (n < 2) {
    throw std::invalid_argument("KS test needs at least two residuals");
  }
  Vector sorted = r;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  double d = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double f = norm_cdf(sorted[i]);
    const double lo = static_cast<double>(i) / static_cast<double>(n);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
    d = std::max(d, std::max(f - lo, hi - f));
  }
  KsResult out;
  out.stat = d;
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = d * (sn + 0.12 + 0.11 / sn);
  // Kolmogorov survival function 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 t^2)
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * double(k) * double(k) * t * t);
    p += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  out.p = std::min(1.0, std::max(0.0, p));
  return out;
}

DiagnosticsReport diagnose_model(const FittedModel& fm, const Dataset& data) {
  DiagnosticsReport rep;
  rep.crit = criteria(fm);

  const ResidualSet rs = quantile_residuals(fm, data);
  rep.clamped = rs.clamped;
  const Index n = rs.r.size();
  const double mean = rs.r.mean();
  const Vector c = rs.r.array() - mean;
  const double m2 = c.squaredNorm() / static_cast<double>(n);
  const double m3 = c.array().pow(3).sum() / static_cast<double>(n);
  const double m4 = c.array().pow(4).sum() / static_cast<double>(n);
  rep.resid_mean = mean;
  rep.resid_var = c.squaredNorm() / static_cast<double>(n - 1);
  rep.resid_skewness = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
  rep.resid_kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  rep.ks = ks_test_normal(rs.r);

  const Vector& y = data.column(fm.response);
  rep.r2_corr = pseudo_r2_corr(y, predict(fm, data, Param::Mu));

  // intercept-only refit for the likelihood-based pseudo-R2 values
  ModelSpec null_spec;
  null_spec.response = fm.response;
  null_spec.family = fm.family;
  null_spec.mu.link = fm.mu.link;
  null_spec.sigma.link = fm.sigma.link;
  const FittedModel null_fit = fit(null_spec, data);
  rep.null_gd = null_fit.global_deviance;
  rep.null_converged = null_fit.converged;
  rep.mcfadden = pseudo_r2_mcfadden(-0.5 * fm.global_deviance,
                                    -0.5 * rep.null_gd);
  rep.coxsnell = pseudo_r2_coxsnell(-0.5 * fm.global_deviance,
                                    -0.5 * rep.null_gd, fm.n);
  return rep;
}

std::string diagnostics_json(const DiagnosticsReport& report) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["criteria"] = {{"gd", report.crit.gd},
                   {"df_total", report.crit.df_total},
                   {"n", report.crit.n},
                   {"aic", report.crit.aic},
                   {"bic", report.crit.bic}};
  if (!report.crit.gaic_custom.empty()) {
    nlohmann::ordered_json custom;
    for (const auto& [k, v] : report.crit.gaic_custom) {
      custom[std::to_string(k)] = v;
    }
    j["criteria"]["gaic"] = custom;
  }
  j["residuals"] = {{"mean", report.resid_mean},
                    {"variance", report.resid_var},
                    {"skewness", report.resid_skewness},
                    {"kurtosis", report.resid_kurtosis},
                    {"clamped", report.clamped}};
  j["ks"] = {{"stat", report.ks.stat}, {"p", report.ks.p}};
  j["pseudo_r2"] = {{"corr", report.r2_corr},
                    {"mcfadden", report.mcfadden},
                    {"cox_snell", report.coxsnell}};
  j["null_model"] = {{"gd", report.null_gd},
                     {"converged", report.null_converged}};
  return j.dump(2) + "\n";
}

} // namespace gamlss
