#include "gamlss/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gamlss/error.hpp"
#include "gamlss/special.hpp"

namespace gamlss {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string param_label(Param which) {
  return which == Param::Mu ? "mu" : "sigma";
}

void require_full_rank(const Eigen::ColPivHouseholderQR<Matrix>& qr, Index p,
                       const std::vector<std::string>& names,
                       const std::string& submodel) {
  if (qr.rank() == p) return;
  std::string cols;
  const auto& perm = qr.colsPermutation().indices();
  for (Index k = qr.rank(); k < p; ++k) {
    if (!cols.empty()) cols += ", ";
    cols += names[perm[k]];
  }
  throw RankError(submodel + " design is rank deficient (rank " +
                  std::to_string(qr.rank()) + " of " + std::to_string(p) +
                  "); dependent columns: " + cols);
}

/// Design and reusable solvers for one submodel; immutable during a fit.
struct SubWork {
  Matrix X;
  std::vector<std::string> names;
  std::vector<SplineTerm> sterms;
  std::vector<CubicSplineSolver> solvers; // aligned with sterms
  std::vector<Vector> xcol;               // spline covariate columns
};

/// Mutable per-submodel state during fitting. All members are linear in the
/// underlying coefficients, so convex combinations of two states stay
/// internally consistent (used by step halving).
struct StageState {
  Vector beta;
  Vector eta_par;
  std::vector<Vector> s; // centered smooth contribution per term
  std::vector<SmootherFit> smooth;
  Vector eta;
};

void blend_toward(StageState& st, const StageState& base, double weight) {
  const double keep = 1.0 - weight;
  st.beta = keep * st.beta + weight * base.beta;
  st.eta_par = keep * st.eta_par + weight * base.eta_par;
  st.eta = keep * st.eta + weight * base.eta;
  for (std::size_t j = 0; j < st.s.size(); ++j) {
    st.s[j] = keep * st.s[j] + weight * base.s[j];
    st.smooth[j].values =
        keep * st.smooth[j].values + weight * base.smooth[j].values;
    st.smooth[j].second_derivs = keep * st.smooth[j].second_derivs +
                                 weight * base.smooth[j].second_derivs;
    st.smooth[j].fitted =
        keep * st.smooth[j].fitted + weight * base.smooth[j].fitted;
  }
}

SubWork build_work(const Submodel& sm, const Dataset& data,
                   const std::string& response, const std::string& label) {
  SubWork w;
  std::set<std::string> seen;
  auto claim = [&](const std::string& name) {
    if (name == response) {
      throw std::invalid_argument("response '" + response +
                                  "' also appears as a covariate in the " +
                                  label + " submodel");
    }
    if (!seen.insert(name).second) {
      throw std::invalid_argument("variable '" + name +
                                  "' appears more than once in the " + label +
                                  " submodel");
    }
  };
  for (const auto& t : sm.parametric_terms) claim(t);
  for (const auto& t : sm.spline_terms) claim(t.variable);

  const Index n = data.n;
  const Index p = 1 + static_cast<Index>(sm.parametric_terms.size()) +
                  static_cast<Index>(sm.spline_terms.size());
  w.X.resize(n, p);
  w.X.col(0).setOnes();
  w.names.push_back("(Intercept)");
  Index c = 1;
  for (const auto& t : sm.parametric_terms) {
    w.X.col(c++) = data.column(t);
    w.names.push_back(t);
  }
  const Vector unit_w = Vector::Ones(n);
  for (const auto& t : sm.spline_terms) {
    if (!(std::isfinite(t.extra_df) && t.extra_df >= 0.0)) {
      throw std::invalid_argument("spline term on '" + t.variable + "' in the " +
                                  label + " submodel has invalid extra df");
    }
    const Vector& x = data.column(t.variable);
    w.X.col(c++) = x;
    w.names.push_back(t.variable);
    w.sterms.push_back(t);
    w.xcol.push_back(x);
    try {
      w.solvers.emplace_back(x, unit_w);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("spline term on '" + t.variable + "' in the " +
                                  label + " submodel: " + e.what());
    }
    const double m = static_cast<double>(w.solvers.back().n_unique());
    if (t.extra_df > 0.0 && t.extra_df + 2.0 > m) {
      throw std::invalid_argument(
          "spline term on '" + t.variable + "' in the " + label +
          " submodel asks for " + std::to_string(t.extra_df) +
          " extra df but only " + std::to_string(static_cast<long>(m)) +
          " distinct values are available");
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) {
      if (!std::isfinite(w.X(i, j))) {
        throw std::invalid_argument("covariate '" + w.names[j] + "' in the " +
                                    label + " submodel is non-finite at row " +
                                    std::to_string(i + 1));
      }
    }
  }
  return w;
}

double submodel_df(const Submodel& sm) {
  double df = 1.0; // intercept
  df += static_cast<double>(sm.parametric_terms.size());
  for (const auto& t : sm.spline_terms) df += 1.0 + t.extra_df;
  return df;
}

Vector apply_link(LinkId link, const Vector& x) {
  Vector out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = link_apply(link, x[i]);
  return out;
}

Vector apply_link_inverse(LinkId link, const Vector& eta) {
  Vector out(eta.size());
  for (Index i = 0; i < eta.size(); ++i) out[i] = link_inverse(link, eta[i]);
  return out;
}

/// Weighted least-squares projection of v onto span{1, x}: returns (a, b)
/// of the best fit a + b x.
std::pair<double, double> wls_line(const Vector& x, const Vector& v,
                                   const Vector& w) {
  const double sw = w.sum();
  const double swx = w.dot(x);
  const double swxx = w.dot(x.cwiseProduct(x).eval());
  const double swv = w.dot(v);
  const double swxv = w.dot(x.cwiseProduct(v).eval());
  const double det = sw * swxx - swx * swx;
  if (!(std::isfinite(det)) || std::abs(det) <= 1e-300) {
    throw FitError("degenerate covariate while centering a smooth term");
  }
  const double b = (sw * swxv - swx * swv) / det;
  const double a = (swv - b * swx) / sw;
  return {a, b};
}

struct Fitter {
  const ModelSpec& spec;
  const Dataset& data;
  const FitOptions& opt;
  const Index n;
  const Vector& y;
  SubWork wmu, wsg;
  StageState smu, ssg;
  ParamVector params;
  std::vector<double> gd_trace;

  Fitter(const ModelSpec& spec_, const Dataset& data_, const FitOptions& opt_)
      : spec(spec_),
        data(data_),
        opt(opt_),
        n(data_.n),
        y(data_.column(spec_.response)) {}

  double gd_of(const Vector& mu, const Vector& sigma) const {
    double ll = 0.0;
    try {
      for (Index i = 0; i < n; ++i) {
        ll += log_density(spec.family, y[i], mu[i], sigma[i]);
      }
    } catch (const std::exception&) {
      return kInf;
    }
    return std::isfinite(ll) ? -2.0 * ll : kInf;
  }

  void init_state(SubWork& w, StageState& st, const Vector& param0,
                  LinkId link) {
    st.beta = Vector::Zero(w.X.cols());
    st.eta = apply_link(link, param0);
    // start with everything in the parametric intercept-free part: set the
    // working decomposition to eta_par = eta, smooth terms zero
    st.eta_par = st.eta;
    st.s.assign(w.sterms.size(), Vector::Zero(n));
    st.smooth.resize(w.sterms.size());
    for (std::size_t j = 0; j < w.sterms.size(); ++j) {
      const auto& knots = w.solvers[j].knots();
      SmootherFit sf;
      sf.knots = Eigen::Map<const Vector>(knots.data(),
                                          static_cast<Index>(knots.size()));
      sf.values = Vector::Zero(sf.knots.size());
      sf.second_derivs = Vector::Zero(sf.knots.size());
      sf.lambda = 0.0;
      sf.edf = 0.0;
      sf.fitted = Vector::Zero(n);
      st.smooth[j] = sf;
    }
  }

  /// One weighted-backfitting stage for the given parameter. Commits only if
  /// the global deviance does not increase (up to 1e-9); otherwise halves the
  /// step toward the previous state, falling back to a full revert. The very
  /// first stage is lenient: the initialization interpolates toward the data
  /// and so can undercut every representable model, which must not block the
  /// first real fit — any finite deviance is accepted there.
  double run_stage(Param which, double gd_cur, int outer, bool lenient) {
    SubWork& w = (which == Param::Mu) ? wmu : wsg;
    StageState& st = (which == Param::Mu) ? smu : ssg;
    const LinkId link =
        (which == Param::Mu) ? spec.mu.link : spec.sigma.link;
    Vector& param_vec = (which == Param::Mu) ? params.mu : params.sigma;

    const StageState base = st;
    const Vector param_base = param_vec;

    Vector u, wt;
    try {
      auto uw = score_and_weight(spec.family, y, params, which, link);
      u = std::move(uw.first);
      wt = std::move(uw.second);
    } catch (const std::exception& e) {
      throw FitError(std::string(e.what()) + " [outer iteration " +
                     std::to_string(outer) + ", " + param_label(which) +
                     " stage]");
    }
    const Vector z = st.eta + (u.array() / wt.array()).matrix();

    // calibrate each smoother's penalty for its df target under the
    // current weights
    std::vector<double> lambda(w.sterms.size(), 0.0);
    for (std::size_t j = 0; j < w.sterms.size(); ++j) {
      if (w.sterms[j].extra_df <= 0.0) continue;
      w.solvers[j].set_weights(wt);
      lambda[j] = w.solvers[j].lambda_for_edf(w.sterms[j].extra_df + 2.0);
    }

    const Vector sw = wt.array().sqrt();
    Eigen::ColPivHouseholderQR<Matrix> qr(sw.asDiagonal() * w.X);
    qr.setThreshold(1e-10);
    require_full_rank(qr, w.X.cols(), w.names, param_label(which));

    // Gauss-Seidel backfitting on the working response
    for (int inner = 0; inner < opt.max_inner; ++inner) {
      double max_change = 0.0;
      Vector sum_s = Vector::Zero(n);
      for (const auto& sj : st.s) sum_s += sj;

      const Vector r = z - sum_s;
      st.beta = qr.solve(sw.cwiseProduct(r));
      Vector eta_par_new = w.X * st.beta;
      max_change = (eta_par_new - st.eta_par).cwiseAbs().maxCoeff();
      st.eta_par = std::move(eta_par_new);

      for (std::size_t j = 0; j < w.sterms.size(); ++j) {
        if (w.sterms[j].extra_df <= 0.0) continue;
        const Vector partial = z - st.eta_par - (sum_s - st.s[j]);
        SmootherFit sf = w.solvers[j].fit(partial, lambda[j]);
        // re-attribute the affine component to the parametric part so the
        // smooth term is orthogonal to {1, x} under the working weights
        const auto [a, b] = wls_line(w.xcol[j], sf.fitted, wt);
        sf.fitted -= (a + b * w.xcol[j].array()).matrix();
        sf.values -= (a + b * sf.knots.array()).matrix();
        max_change = std::max(
            max_change, (sf.fitted - st.s[j]).cwiseAbs().maxCoeff());
        sum_s += sf.fitted - st.s[j];
        st.s[j] = sf.fitted;
        st.smooth[j] = std::move(sf);
      }
      if (max_change < opt.tol) break;
    }

    st.eta = st.eta_par;
    for (const auto& sj : st.s) st.eta += sj;

    // commit with step halving: never let the deviance increase
    for (int half = 0; half <= 30; ++half) {
      Vector cand;
      try {
        cand = apply_link_inverse(link, st.eta);
      } catch (const std::exception&) {
        blend_toward(st, base, 0.5);
        continue;
      }
      const double gd_new = (which == Param::Mu)
                                ? gd_of(cand, params.sigma)
                                : gd_of(params.mu, cand);
      if (lenient ? std::isfinite(gd_new) : gd_new <= gd_cur + 1e-9) {
        param_vec = std::move(cand);
        return gd_new;
      }
      blend_toward(st, base, 0.5);
    }
    st = base;
    param_vec = param_base;
    return gd_cur;
  }

  Vector initial_mu() const {
    if (opt.mu_start) {
      if (opt.mu_start->size() != n) {
        throw std::invalid_argument("mu_start has length " +
                                    std::to_string(opt.mu_start->size()) +
                                    ", expected " + std::to_string(n));
      }
      return *opt.mu_start;
    }
    if (spec.family == Family::LOGNO) {
      const Vector ly = y.array().log();
      return ((ly.array() + ly.mean()) / 2.0).matrix();
    }
    return ((y.array() + y.mean()) / 2.0).matrix();
  }

  Vector initial_sigma() const {
    if (opt.sigma_start) {
      if (opt.sigma_start->size() != n) {
        throw std::invalid_argument("sigma_start has length " +
                                    std::to_string(opt.sigma_start->size()) +
                                    ", expected " + std::to_string(n));
      }
      return *opt.sigma_start;
    }
    // method-of-moments dispersion, constant over rows, floored at 0.1
    const Vector base = (spec.family == Family::LOGNO)
                            ? Vector(y.array().log())
                            : y;
    const double mean = base.mean();
    const double var =
        (base.array() - mean).square().sum() / std::max<Index>(n - 1, 1);
    const double sd = std::sqrt(var);
    double s0 = 1.0;
    switch (spec.family) {
      case Family::NO:
      case Family::LOGNO:
        s0 = sd;
        break;
      case Family::GA:
        s0 = sd / mean;
        break;
      case Family::IG:
        s0 = sd / std::pow(mean, 1.5);
        break;
      case Family::WEI: {
        const double cv = sd / mean;
        s0 = cv > 0.0 ? std::pow(cv, -1.086) : 1.0;
        break;
      }
    }
    if (!std::isfinite(s0)) s0 = 1.0;
    return Vector::Constant(n, std::max(0.1, s0));
  }
};

SubmodelFit finalize_submodel(const Submodel& sm, const SubWork& w,
                              const StageState& st) {
  SubmodelFit out;
  out.link = sm.link;
  out.beta_names = w.names;
  out.beta = st.beta;
  out.parametric_terms = sm.parametric_terms;
  out.spline_terms = sm.spline_terms;
  out.smoother_fits = st.smooth;
  return out;
}

Vector assemble_eta(const SubmodelFit& sm, const Dataset& data) {
  const Index n = data.n;
  Vector eta = Vector::Constant(n, sm.beta[0]);
  Index c = 1;
  for (const auto& t : sm.parametric_terms) {
    eta += sm.beta[c++] * data.column(t);
  }
  for (std::size_t j = 0; j < sm.spline_terms.size(); ++j) {
    const Vector& x = data.column(sm.spline_terms[j].variable);
    eta += sm.beta[c++] * x;
    eta += predict_spline(sm.smoother_fits[j], x);
  }
  return eta;
}

void fill_inference(SubmodelFit& out, const SubWork& w, const Vector& wt,
                    const std::string& label) {
  const Index p = w.X.cols();
  const Vector sw = wt.array().sqrt();
  Eigen::ColPivHouseholderQR<Matrix> qr(sw.asDiagonal() * w.X);
  qr.setThreshold(1e-10);
  require_full_rank(qr, p, w.names, label);
  const Matrix rinv = qr.matrixR()
                          .topLeftCorner(p, p)
                          .triangularView<Eigen::Upper>()
                          .solve(Matrix::Identity(p, p));
  const Matrix perm = qr.colsPermutation();
  out.vcov = perm * (rinv * rinv.transpose()) * perm.transpose();
  out.se = out.vcov.diagonal().array().sqrt();
  out.z.resize(p);
  out.p.resize(p);
  for (Index j = 0; j < p; ++j) {
    out.z[j] = out.beta[j] == 0.0 ? 0.0 : out.beta[j] / out.se[j];
    out.p[j] = 2.0 * norm_cdf(-std::abs(out.z[j]));
  }
}

} // namespace

FittedModel fit(const ModelSpec& spec, const Dataset& data,
                const FitOptions& options) {
  if (data.n < 1) throw std::invalid_argument("dataset is empty");
  if (options.max_outer < 1 || options.max_inner < 1 ||
      !(options.tol > 0.0)) {
    throw std::invalid_argument("fit options must have positive iteration "
                                "caps and tolerance");
  }
  const Vector& y = data.column(spec.response);
  const auto& info = family_info(spec.family);
  for (Index i = 0; i < data.n; ++i) {
    if (!std::isfinite(y[i])) {
      throw std::invalid_argument("response '" + spec.response +
                                  "' is non-finite at row " +
                                  std::to_string(i + 1));
    }
    if (info.positive_support && y[i] <= 0.0) {
      throw std::domain_error("response '" + spec.response +
                              "' must be positive for family " + info.label +
                              " (row " + std::to_string(i + 1) + " is " +
                              std::to_string(y[i]) + ")");
    }
  }

  const double df_total = submodel_df(spec.mu) + submodel_df(spec.sigma);
  if (static_cast<double>(data.n) <= df_total) {
    throw std::invalid_argument(
        "need more observations than model degrees of freedom (n=" +
        std::to_string(data.n) + ", df=" + std::to_string(df_total) + ")");
  }

  Fitter f(spec, data, options);
  f.wmu = build_work(spec.mu, data, spec.response, "mu");
  f.wsg = build_work(spec.sigma, data, spec.response, "sigma");

  const Vector mu0 = f.initial_mu();
  const Vector sg0 = f.initial_sigma();
  validate_params(spec.family, {mu0, sg0});
  f.params.mu = mu0;
  f.params.sigma = sg0;
  f.init_state(f.wmu, f.smu, mu0, spec.mu.link);
  f.init_state(f.wsg, f.ssg, sg0, spec.sigma.link);

  double gd = f.gd_of(f.params.mu, f.params.sigma);
  if (!std::isfinite(gd)) {
    throw FitError("global deviance is non-finite at initialization");
  }

  FittedModel fm;
  fm.family = spec.family;
  fm.response = spec.response;
  fm.n = data.n;
  fm.df_total = df_total;
  fm.converged = false;

  const double tol_gd = options.tol * static_cast<double>(data.n);
  int outer = 0;
  for (outer = 1; outer <= options.max_outer; ++outer) {
    const double gd_cycle_start = gd;
    gd = f.run_stage(Param::Mu, gd, outer, outer == 1);
    f.gd_trace.push_back(gd);
    gd = f.run_stage(Param::Sigma, gd, outer, false);
    f.gd_trace.push_back(gd);
    if (std::abs(gd_cycle_start - gd) < tol_gd) {
      fm.converged = true;
      break;
    }
  }
  fm.iterations = std::min(outer, options.max_outer);

  fm.mu = finalize_submodel(spec.mu, f.wmu, f.smu);
  fm.sigma = finalize_submodel(spec.sigma, f.wsg, f.ssg);

  // canonical assembly so that predict() on the training data reproduces
  // the stored values exactly
  fm.mu.eta = assemble_eta(fm.mu, data);
  fm.sigma.eta = assemble_eta(fm.sigma, data);
  fm.mu.fitted_param = apply_link_inverse(spec.mu.link, fm.mu.eta);
  fm.sigma.fitted_param = apply_link_inverse(spec.sigma.link, fm.sigma.eta);
  f.params.mu = fm.mu.fitted_param;
  f.params.sigma = fm.sigma.fitted_param;

  // conditional (on smoothing df) inference from the weighted cross-product
  // of each parametric design at convergence
  {
    auto uw_mu = score_and_weight(spec.family, y, f.params, Param::Mu,
                                  spec.mu.link);
    fill_inference(fm.mu, f.wmu, uw_mu.second, "mu");
    auto uw_sg = score_and_weight(spec.family, y, f.params, Param::Sigma,
                                  spec.sigma.link);
    fill_inference(fm.sigma, f.wsg, uw_sg.second, "sigma");
  }

  fm.global_deviance = global_deviance(fm, data);
  fm.gd_trace = std::move(f.gd_trace);

  // per-term df ledger
  auto ledger_for = [&fm](const char* label, const Submodel& sm) {
    fm.df_ledger.push_back({label, "(Intercept)", 1.0});
    for (const auto& t : sm.parametric_terms) {
      fm.df_ledger.push_back({label, t, 1.0});
    }
    for (const auto& t : sm.spline_terms) {
      fm.df_ledger.push_back({label, "cs(" + t.variable + ")",
                              1.0 + t.extra_df});
    }
  };
  ledger_for("mu", spec.mu);
  ledger_for("sigma", spec.sigma);
  return fm;
}

double global_deviance(const FittedModel& fm, const Dataset& data) {
  const Vector& y = data.column(fm.response);
  const Vector mu = apply_link_inverse(fm.mu.link, assemble_eta(fm.mu, data));
  const Vector sigma =
      apply_link_inverse(fm.sigma.link, assemble_eta(fm.sigma, data));
  double ll = 0.0;
  for (Index i = 0; i < data.n; ++i) {
    ll += log_density(fm.family, y[i], mu[i], sigma[i]);
  }
  return -2.0 * ll;
}

double penalized_loglik(const FittedModel& fm, const Dataset& data) {
  double penalty = 0.0;
  for (const auto* sm : {&fm.mu, &fm.sigma}) {
    for (const auto& sf : sm->smoother_fits) {
      if (sf.lambda > 0.0) penalty += sf.lambda * spline_roughness(sf);
    }
  }
  return -0.5 * global_deviance(fm, data) - 0.5 * penalty;
}

Vector predict(const FittedModel& fm, const Dataset& new_data, Param which) {
  const SubmodelFit& sm = (which == Param::Mu) ? fm.mu : fm.sigma;
  return apply_link_inverse(sm.link, assemble_eta(sm, new_data));
}

std::vector<CoefficientRow> standard_errors(const FittedModel& fm) {
  if (!fm.converged) {
    throw FitError("standard errors require a converged fit");
  }
  std::vector<CoefficientRow> rows;
  auto emit = [&rows](const char* label, const SubmodelFit& sm) {
    for (Index j = 0; j < sm.beta.size(); ++j) {
      rows.push_back({label, sm.beta_names[j], sm.beta[j], sm.se[j], sm.z[j],
                      sm.p[j]});
    }
  };
  emit("mu", fm.mu);
  emit("sigma", fm.sigma);
  return rows;
}

double model_df_total(const ModelSpec& spec) {
  return submodel_df(spec.mu) + submodel_df(spec.sigma);
}

} // namespace gamlss
