// Command-line front end: CSV in, tables / JSON / SVG out.
//
// Subcommands
//   fit       fit one distributional regression model from a formula
//   compare   fit or audit a list of models and rank them
//   diagnose  residual diagnostics for a saved model
//   simulate  draw a synthetic hedonic-pricing dataset
//   predict   evaluate a saved model on new rows
//
// Exit codes: 0 success, 1 input/parse/fit errors (nothing on stdout),
// 2 the fit ran out of iterations (outputs are still written).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gamlss/baselines.hpp"
#include "gamlss/dataset.hpp"
#include "gamlss/diagnostics.hpp"
#include "gamlss/error.hpp"
#include "gamlss/family.hpp"
#include "gamlss/formula.hpp"
#include "gamlss/links.hpp"
#include "gamlss/model.hpp"
#include "gamlss/model_json.hpp"
#include "gamlss/simulate.hpp"
#include "gamlss/svg.hpp"
#include "gamlss/types.hpp"

namespace fs = std::filesystem;
using gamlss::Dataset;
using gamlss::Family;
using gamlss::FittedModel;
using gamlss::Index;
using gamlss::LinkId;
using gamlss::Matrix;
using gamlss::Param;
using gamlss::Vector;
using ordered_json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// formatting helpers
// ---------------------------------------------------------------------------

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string fmt_p(double p) {
  if (p < 0.0001) return "<0.0001";
  return fmt("%.4f", p);
}

std::string fmt_full(double v) { return fmt("%.17g", v); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw gamlss::SchemaError("cannot open '" + path.string() +
                              "' for writing");
  }
  os << content;
  os.flush();
  if (!os) {
    throw gamlss::SchemaError("failed while writing '" + path.string() + "'");
  }
}

// ---------------------------------------------------------------------------
// data loading policy
// ---------------------------------------------------------------------------

// Loads any numeric CSV; when the eight raw hedonic columns are all present
// the usual derived columns (dummies, logs, FRVN) are added so formulas can
// reference them directly.
Dataset load_data(const std::string& path) {
  Dataset d = gamlss::load_csv(path, gamlss::SchemaSpec{});
  static const char* kBase[] = {"YR", "STR", "NI", "AR", "ST", "UP", "FR",
                                "VN"};
  bool hedonic = true;
  for (const char* c : kBase) {
    if (!d.has(c)) {
      hedonic = false;
      break;
    }
  }
  if (hedonic) d = gamlss::derive_variables(d);
  return d;
}

std::vector<std::string> model_columns(const FittedModel& fm) {
  std::vector<std::string> cols;
  auto add = [&](const gamlss::SubmodelFit& sm) {
    for (const auto& t : sm.parametric_terms) cols.push_back(t);
    for (const auto& t : sm.spline_terms) cols.push_back(t.variable);
  };
  add(fm.mu);
  add(fm.sigma);
  return cols;
}

// ---------------------------------------------------------------------------
// shared output builders
// ---------------------------------------------------------------------------

std::string coefficient_table(const FittedModel& fm) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-22s %12s %12s %9s %10s\n",
                "parameter", "term", "estimate", "std.error", "z", "p");
  out += line;
  out += std::string(79, '-');
  out += "\n";
  auto emit = [&](const char* label, const gamlss::SubmodelFit& sm) {
    for (Index j = 0; j < sm.beta.size(); ++j) {
      std::snprintf(line, sizeof line, "%-9s %-22s %12.4f %12.4f %9.4f %10s\n",
                    label, sm.beta_names[static_cast<std::size_t>(j)].c_str(),
                    sm.beta[j], sm.se[j], sm.z[j], fmt_p(sm.p[j]).c_str());
      out += line;
    }
    for (std::size_t k = 0; k < sm.spline_terms.size(); ++k) {
      const auto& term = sm.spline_terms[k];
      std::snprintf(line, sizeof line,
                    "%-9s %-22s smooth, df %.2f, lambda %.6g\n", label,
                    ("cs(" + term.variable + ")").c_str(), 1.0 + term.extra_df,
                    sm.smoother_fits[k].lambda);
      out += line;
    }
  };
  emit("mu", fm.mu);
  emit("sigma", fm.sigma);
  return out;
}

std::string criteria_block(const FittedModel& fm, std::optional<double> r2) {
  const gamlss::CriterionReport c = gamlss::criteria(fm);
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "family            %s\n",
                gamlss::family_name(fm.family).c_str());
  out += line;
  std::snprintf(line, sizeof line, "n                 %lld\n",
                static_cast<long long>(c.n));
  out += line;
  std::snprintf(line, sizeof line, "converged         %s (%d iterations)\n",
                fm.converged ? "yes" : "NO", fm.iterations);
  out += line;
  std::snprintf(line, sizeof line, "global deviance   %.2f\n", c.gd);
  out += line;
  std::snprintf(line, sizeof line, "df                %.2f\n", c.df_total);
  out += line;
  std::snprintf(line, sizeof line, "AIC               %.2f\n", c.aic);
  out += line;
  std::snprintf(line, sizeof line, "BIC               %.2f\n", c.bic);
  out += line;
  if (r2) {
    std::snprintf(line, sizeof line, "pseudo-R2 (corr)  %.4f\n", *r2);
    out += line;
  } else {
    out += "pseudo-R2 (corr)  n/a\n";
  }
  return out;
}

std::string residuals_csv(const FittedModel& fm, const Dataset& data,
                          const gamlss::ResidualSet& rs) {
  const Vector mu = gamlss::predict(fm, data, Param::Mu);
  const Vector sigma = gamlss::predict(fm, data, Param::Sigma);
  std::string out = "row,fitted_mu,fitted_sigma,u,residual\n";
  for (Index i = 0; i < rs.r.size(); ++i) {
    out += std::to_string(i + 1) + "," + fmt_full(mu[i]) + "," +
           fmt_full(sigma[i]) + "," + fmt_full(rs.u[i]) + "," +
           fmt_full(rs.r[i]) + "\n";
  }
  return out;
}

std::string worm_svg_text(const std::vector<gamlss::WormPoint>& pts,
                          const std::string& title) {
  gamlss::SvgPlot plot;
  plot.title = title;
  plot.x_label = "theoretical normal quantile";
  plot.y_label = "deviation";
  gamlss::SvgSeries zero, lower, upper, dots;
  zero.color = "#cccccc";
  zero.width = 1.0;
  zero.x = {pts.front().z, pts.back().z};
  zero.y = {0.0, 0.0};
  lower.color = "#999999";
  lower.width = 1.0;
  upper = lower;
  dots.style = gamlss::SvgSeries::Style::Points;
  for (const auto& w : pts) {
    lower.x.push_back(w.z);
    lower.y.push_back(w.lower);
    upper.x.push_back(w.z);
    upper.y.push_back(w.upper);
    dots.x.push_back(w.z);
    dots.y.push_back(w.deviation);
  }
  plot.series = {zero, lower, upper, dots};
  return gamlss::render_svg(plot);
}

std::string residual_index_svg(const gamlss::ResidualSet& rs) {
  gamlss::SvgPlot plot;
  plot.title = "quantile residuals by observation";
  plot.x_label = "observation";
  plot.y_label = "quantile residual";
  gamlss::SvgSeries zero, dots;
  zero.color = "#cccccc";
  zero.width = 1.0;
  zero.x = {1.0, static_cast<double>(rs.r.size())};
  zero.y = {0.0, 0.0};
  dots.style = gamlss::SvgSeries::Style::Points;
  for (Index i = 0; i < rs.r.size(); ++i) {
    dots.x.push_back(static_cast<double>(i + 1));
    dots.y.push_back(rs.r[i]);
  }
  plot.series = {zero, dots};
  return gamlss::render_svg(plot);
}

// Pseudo-R2 on the original response scale. For a log() response the fitted
// values are exponentiated and correlated with the raw column when it is
// available; a constant fitted vector (intercept-only model) yields nullopt.
std::optional<double> response_scale_r2(const gamlss::FormulaAst& ast,
                                        const Dataset& data,
                                        const Vector& fitted_model_scale) {
  Vector y = data.column(ast.response_column());
  Vector yhat = fitted_model_scale;
  if (ast.log_response && data.has(ast.response)) {
    y = data.column(ast.response);
    yhat = yhat.array().exp();
  }
  try {
    return gamlss::pseudo_r2_corr(y, yhat);
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

struct FitArgs {
  std::string data_path;
  std::string formula;
  std::string family = "NO";
  std::string mu_link;
  std::string sigma_link;
  std::string out_dir;
  int max_outer = 50;
  double tol = 1e-6;
};

int cmd_fit(const FitArgs& a) {
  Dataset data = load_data(a.data_path);
  const gamlss::FormulaAst ast = gamlss::parse_formula(a.formula);
  gamlss::ensure_log_columns(data, gamlss::formula_columns(ast));
  const Family family = gamlss::family_from_name(a.family);
  const LinkId mu_link = a.mu_link.empty()
                             ? gamlss::family_info(family).default_mu_link
                             : gamlss::link_from_name(a.mu_link);
  const LinkId sigma_link =
      a.sigma_link.empty() ? gamlss::family_info(family).default_sigma_link
                           : gamlss::link_from_name(a.sigma_link);
  const gamlss::BuiltSpec built =
      gamlss::build_spec(ast, family, mu_link, sigma_link, data);

  gamlss::FitOptions opt;
  opt.max_outer = a.max_outer;
  opt.tol = a.tol;
  const FittedModel fm = gamlss::fit(built.spec, data, opt);

  const gamlss::ResidualSet rs = gamlss::quantile_residuals(fm, data);
  std::optional<double> r2;
  try {
    r2 = gamlss::pseudo_r2_corr(data.column(built.spec.response),
                                fm.mu.fitted_param);
  } catch (const std::invalid_argument&) {
    r2 = std::nullopt;
  }

  const std::string table = coefficient_table(fm);
  const std::string crit = criteria_block(fm, r2);

  fs::create_directories(a.out_dir);
  const fs::path out(a.out_dir);
  write_file(out / "coefficients.txt", table);
  write_file(out / "criteria.txt", crit);
  gamlss::save_model((out / "model.json").string(), fm);
  write_file(out / "residuals.csv", residuals_csv(fm, data, rs));
  write_file(out / "worm.svg",
             worm_svg_text(gamlss::worm_plot_data(rs), "worm plot"));

  std::string console;
  for (const auto& w : built.warnings) console += "warning: " + w + "\n";
  console += table;
  console += "\n";
  console += crit;
  std::fputs(console.c_str(), stdout);
  return fm.converged ? 0 : 2;
}

// ---------------------------------------------------------------------------
// predict
// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model_path;
  std::string data_path;
  std::string which = "mu";
  std::string out_path;
};

int cmd_predict(const PredictArgs& a) {
  const FittedModel fm = gamlss::load_model(a.model_path);
  Dataset data = load_data(a.data_path);
  gamlss::ensure_log_columns(data, model_columns(fm));
  Param which;
  if (a.which == "mu") {
    which = Param::Mu;
  } else if (a.which == "sigma") {
    which = Param::Sigma;
  } else {
    throw std::invalid_argument("--which must be 'mu' or 'sigma', got '" +
                                a.which + "'");
  }
  const Vector pred = gamlss::predict(fm, data, which);
  std::string csv = "row,prediction\n";
  for (Index i = 0; i < pred.size(); ++i) {
    csv += std::to_string(i + 1) + "," + fmt_full(pred[i]) + "\n";
  }
  write_file(a.out_path, csv);
  std::printf("wrote %lld predictions (%s) -> %s\n",
              static_cast<long long>(pred.size()), a.which.c_str(),
              a.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::uint64_t seed = 0;
  bool seed_given = false;
  Index n = 0;
  std::string truth_path;
  std::string out_path;
};

std::uint64_t resolve_seed(const SimulateArgs& a) {
  if (a.seed_given) return a.seed;
  if (const char* env = std::getenv("GAMLSS_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0') {
      throw std::invalid_argument(
          std::string("GAMLSS_SEED is not a valid unsigned integer: '") + env +
          "'");
    }
    return static_cast<std::uint64_t>(v);
  }
  throw std::invalid_argument(
      "no seed: pass --seed or set the GAMLSS_SEED environment variable");
}

int cmd_simulate(const SimulateArgs& a) {
  const std::uint64_t seed = resolve_seed(a);
  gamlss::TruthParams truth = a.truth_path.empty()
                                  ? gamlss::TruthParams::defaults()
                                  : gamlss::load_truth(a.truth_path);
  const Dataset d = gamlss::simulate_hedonic(seed, a.n, truth);
  gamlss::write_csv(a.out_path, d);
  std::printf("simulated %lld observations (seed %llu) -> %s\n",
              static_cast<long long>(d.n),
              static_cast<unsigned long long>(seed), a.out_path.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose
// ---------------------------------------------------------------------------

struct DiagnoseArgs {
  std::string model_path;
  std::string data_path;
  std::string out_dir;
  std::string worm_by;
  int bins = 4;
};

std::string sanitize_name(const std::string& s) {
  std::string out;
  for (char c : s) {
    out += (std::isalnum(static_cast<unsigned char>(c)) != 0) ? c : '_';
  }
  return out;
}

std::string diagnostics_text(const gamlss::DiagnosticsReport& rep) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "n                    %lld\n",
                static_cast<long long>(rep.crit.n));
  out += line;
  std::snprintf(line, sizeof line, "global deviance      %.2f\n",
                rep.crit.gd);
  out += line;
  std::snprintf(line, sizeof line, "df                   %.2f\n",
                rep.crit.df_total);
  out += line;
  std::snprintf(line, sizeof line, "AIC                  %.2f\n",
                rep.crit.aic);
  out += line;
  std::snprintf(line, sizeof line, "BIC                  %.2f\n",
                rep.crit.bic);
  out += line;
  out += "\nquantile residuals (standard normal when the model is right)\n";
  std::snprintf(line, sizeof line, "  mean               %.4f\n",
                rep.resid_mean);
  out += line;
  std::snprintf(line, sizeof line, "  variance           %.4f\n",
                rep.resid_var);
  out += line;
  std::snprintf(line, sizeof line, "  skewness           %.4f\n",
                rep.resid_skewness);
  out += line;
  std::snprintf(line, sizeof line, "  kurtosis           %.4f\n",
                rep.resid_kurtosis);
  out += line;
  std::snprintf(line, sizeof line, "  clamped            %d\n", rep.clamped);
  out += line;
  std::snprintf(line, sizeof line, "  KS statistic       %.4f (p %s)\n",
                rep.ks.stat, fmt_p(rep.ks.p).c_str());
  out += line;
  out += "\nfit quality\n";
  std::snprintf(line, sizeof line, "  pseudo-R2 (corr)   %.4f\n",
                rep.r2_corr);
  out += line;
  std::snprintf(line, sizeof line, "  McFadden R2        %.4f\n",
                rep.mcfadden);
  out += line;
  std::snprintf(line, sizeof line, "  Cox-Snell R2       %.4f\n",
                rep.coxsnell);
  out += line;
  std::snprintf(line, sizeof line, "  null deviance      %.2f%s\n",
                rep.null_gd,
                rep.null_converged ? "" : " (null fit did not converge)");
  out += line;
  return out;
}

int cmd_diagnose(const DiagnoseArgs& a) {
  const FittedModel fm = gamlss::load_model(a.model_path);
  Dataset data = load_data(a.data_path);
  std::vector<std::string> needed = model_columns(fm);
  needed.push_back(fm.response);
  if (!a.worm_by.empty()) needed.push_back(a.worm_by);
  gamlss::ensure_log_columns(data, needed);

  const gamlss::DiagnosticsReport rep = gamlss::diagnose_model(fm, data);
  const gamlss::ResidualSet rs = gamlss::quantile_residuals(fm, data);
  const std::string text = diagnostics_text(rep);

  fs::create_directories(a.out_dir);
  const fs::path out(a.out_dir);
  write_file(out / "diagnostics.json", gamlss::diagnostics_json(rep));
  write_file(out / "diagnostics.txt", text);
  write_file(out / "residuals.csv", residuals_csv(fm, data, rs));
  write_file(out / "residual_index.svg", residual_index_svg(rs));
  write_file(out / "worm.svg",
             worm_svg_text(gamlss::worm_plot_data(rs), "worm plot"));

  if (!a.worm_by.empty()) {
    if (!data.has(a.worm_by)) {
      throw gamlss::SchemaError("worm-by variable '" + a.worm_by +
                                "' is not a column of the data");
    }
    const auto panels =
        gamlss::grouped_worm_plot(rs, data.column(a.worm_by), a.bins);
    for (std::size_t k = 0; k < panels.size(); ++k) {
      char title[160];
      std::snprintf(title, sizeof title, "worm plot: %s in [%.4g, %.4g]",
                    a.worm_by.c_str(), panels[k].lo, panels[k].hi);
      write_file(out / ("worm_by_" + sanitize_name(a.worm_by) + "_bin" +
                        std::to_string(k + 1) + ".svg"),
                 worm_svg_text(panels[k].points, title));
    }
  }

  std::fputs(text.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareArgs {
  std::string data_path;
  std::string spec_path;
  std::string out_dir;
};

struct CompareRow {
  std::string name;
  std::string cls;
  std::string family_label = "-";
  std::string scale = "?";
  std::string formula_text;
  double gd = 0.0;
  double df = 0.0;
  double aic = 0.0;
  double bic = 0.0;
  std::optional<double> r2;
  bool fitted = false;
  bool converged = true;
  // audit of externally reported rows
  std::vector<std::string> audit;
  // nesting metadata (gamlss rows only)
  bool is_gamlss = false;
  Family family = Family::NO;
  LinkId mu_link = LinkId::Identity;
  LinkId sigma_link = LinkId::Identity;
  gamlss::FormulaAst ast;
  std::size_t input_order = 0;
  char group = 'A';
};

Matrix design_matrix(const Dataset& d, const std::vector<std::string>& cols) {
  Matrix X(d.n, static_cast<Index>(cols.size()) + 1);
  X.col(0).setOnes();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    X.col(static_cast<Index>(j) + 1) = d.column(cols[j]);
  }
  return X;
}

std::vector<std::string> design_names(const std::vector<std::string>& cols) {
  std::vector<std::string> names = {"(Intercept)"};
  names.insert(names.end(), cols.begin(), cols.end());
  return names;
}

// Parametric column list for the least-squares classes; cs() terms are not
// allowed there.
std::vector<std::string> parametric_columns(const gamlss::FormulaAst& ast,
                                            const std::string& cls) {
  std::vector<std::string> cols;
  for (const auto& t : ast.mu_terms) {
    if (t.is_spline) {
      throw std::invalid_argument("model class '" + cls +
                                  "' does not support cs() terms");
    }
    cols.push_back(t.column());
  }
  if (ast.has_sigma_part && !ast.sigma_terms.empty()) {
    throw std::invalid_argument("model class '" + cls +
                                "' has no dispersion submodel");
  }
  return cols;
}

void audit_reported(CompareRow& row, Index n_reported) {
  char line[256];
  const double df_aic = (row.aic - row.gd) / 2.0;
  row.df = df_aic;
  if (df_aic < -1e-9) {
    std::snprintf(line, sizeof line,
                  "impossible: AIC (%.2f) is below GD (%.2f); AIC = GD + "
                  "2*df cannot fall below GD",
                  row.aic, row.gd);
    row.audit.push_back(line);
    return;
  }
  if (n_reported <= 1) {
    row.audit.push_back(
        "cannot check BIC: the comparison spec has no top-level sample size "
        "'n'");
    return;
  }
  const double bic_implied = row.gd + std::log(static_cast<double>(
                                          n_reported)) * df_aic;
  if (std::abs(bic_implied - row.bic) > 0.75) {
    std::snprintf(line, sizeof line,
                  "inconsistent: AIC implies df %.1f, but then BIC should be "
                  "%.2f (reported %.2f)",
                  df_aic, bic_implied, row.bic);
    row.audit.push_back(line);
    return;
  }
  std::snprintf(line, sizeof line,
                "self-consistent: AIC implies df %.1f; GD + ln(n)*df = %.2f "
                "matches reported BIC %.2f",
                df_aic, bic_implied, row.bic);
  row.audit.push_back(line);
}

// True when every mu and sigma term of `small` appears in `big` (canonical
// text, spline df included) and `big` has strictly more of them.
bool terms_nested(const gamlss::FormulaAst& small,
                  const gamlss::FormulaAst& big) {
  auto texts = [](const std::vector<gamlss::FormulaTerm>& ts) {
    std::set<std::string> s;
    for (const auto& t : ts) s.insert(t.text());
    return s;
  };
  const auto small_mu = texts(small.mu_terms);
  const auto big_mu = texts(big.mu_terms);
  const auto small_sigma = texts(small.sigma_terms);
  const auto big_sigma = texts(big.sigma_terms);
  const bool subset =
      std::includes(big_mu.begin(), big_mu.end(), small_mu.begin(),
                    small_mu.end()) &&
      std::includes(big_sigma.begin(), big_sigma.end(), small_sigma.begin(),
                    small_sigma.end());
  const bool strictly_smaller =
      small_mu.size() + small_sigma.size() < big_mu.size() + big_sigma.size();
  return subset && strictly_smaller;
}

int cmd_compare(const CompareArgs& a) {
  // --- read the comparison spec ---
  std::ifstream is(a.spec_path, std::ios::binary);
  if (!is) {
    throw gamlss::SchemaError("cannot open comparison spec '" + a.spec_path +
                              "'");
  }
  std::string spec_text((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());
  ordered_json doc;
  try {
    doc = ordered_json::parse(spec_text);
  } catch (const nlohmann::json::exception& e) {
    throw gamlss::SchemaError(std::string("comparison spec does not parse: ") +
                              e.what());
  }
  if (!doc.is_object() || doc.value("format_version", 0) != 1) {
    throw gamlss::SchemaError(
        "comparison spec must be an object with format_version 1");
  }
  if (!doc.contains("models") || !doc["models"].is_array() ||
      doc["models"].empty()) {
    throw gamlss::SchemaError(
        "comparison spec needs a non-empty 'models' array");
  }
  const Index n_reported = doc.value("n", static_cast<Index>(0));

  Dataset data = load_data(a.data_path);

  std::vector<CompareRow> rows;
  std::string warn_text;
  bool any_unconverged = false;

  std::size_t idx = 0;
  for (const auto& m : doc["models"]) {
    CompareRow row;
    row.input_order = idx++;
    if (!m.is_object() || !m.contains("class")) {
      throw gamlss::SchemaError(
          "each comparison model needs a 'class' field");
    }
    row.cls = m["class"].get<std::string>();
    row.name = m.value("name", row.cls + " #" + std::to_string(row.input_order
                                                              + 1));

    if (row.cls == "reported") {
      if (!m.contains("gd") || !m.contains("aic") || !m.contains("bic")) {
        throw gamlss::SchemaError("reported model '" + row.name +
                                  "' needs gd, aic and bic");
      }
      row.gd = m["gd"].get<double>();
      row.aic = m["aic"].get<double>();
      row.bic = m["bic"].get<double>();
      row.scale = m.value("scale", std::string("?"));
      row.family_label = m.value("family", std::string("-"));
      row.formula_text = m.value("formula", std::string(""));
      audit_reported(row, n_reported);
      rows.push_back(std::move(row));
      continue;
    }

    if (!m.contains("formula")) {
      throw gamlss::SchemaError("model '" + row.name + "' needs a formula");
    }
    const gamlss::FormulaAst ast =
        gamlss::parse_formula(m["formula"].get<std::string>());
    gamlss::ensure_log_columns(data, gamlss::formula_columns(ast));
    row.formula_text = ast.text();
    row.fitted = true;

    if (row.cls == "gamlss") {
      const Family family =
          gamlss::family_from_name(m.value("family", std::string("NO")));
      LinkId mu_link = gamlss::family_info(family).default_mu_link;
      LinkId sigma_link = gamlss::family_info(family).default_sigma_link;
      if (m.contains("links")) {
        const auto& links = m["links"];
        if (links.contains("mu")) {
          mu_link = gamlss::link_from_name(links["mu"].get<std::string>());
        }
        if (links.contains("sigma")) {
          sigma_link =
              gamlss::link_from_name(links["sigma"].get<std::string>());
        }
      }
      const gamlss::BuiltSpec built =
          gamlss::build_spec(ast, family, mu_link, sigma_link, data);
      for (const auto& w : built.warnings) {
        warn_text += "warning [" + row.name + "]: " + w + "\n";
      }
      const FittedModel fm = gamlss::fit(built.spec, data);
      row.gd = fm.global_deviance;
      row.df = fm.df_total;
      const gamlss::CriterionReport c = gamlss::criteria(fm);
      row.aic = c.aic;
      row.bic = c.bic;
      row.converged = fm.converged;
      if (!fm.converged) any_unconverged = true;
      row.r2 = response_scale_r2(ast, data, fm.mu.fitted_param);
      row.scale = ast.response_column();
      row.family_label = gamlss::family_name(family);
      row.is_gamlss = true;
      row.family = family;
      row.mu_link = mu_link;
      row.sigma_link = sigma_link;
      row.ast = ast;
    } else if (row.cls == "cnlrm") {
      const bool box_cox = m.value("box_cox", false);
      const std::vector<std::string> cols = parametric_columns(ast, row.cls);
      const Matrix X = design_matrix(data, cols);
      row.family_label = "normal";
      if (box_cox) {
        if (ast.log_response) {
          throw std::invalid_argument(
              "box_cox cannot be combined with a log() response; model '" +
              row.name + "'");
        }
        const Vector y = data.column(ast.response);
        const auto [lambda_hat, profile] = gamlss::box_cox_profile(
            y, X, gamlss::box_cox_default_grid());
        (void)profile;
        row.gd = -2.0 * gamlss::box_cox_loglik(y, X, lambda_hat);
        row.df = static_cast<double>(X.cols()) + 2.0; // sigma and lambda
        const Vector z =
            lambda_hat == 0.0
                ? Vector(y.array().log())
                : Vector((y.array().pow(lambda_hat) - 1.0) / lambda_hat);
        const gamlss::OlsFit ols = gamlss::ols_fit(X, z, design_names(cols));
        Vector yhat(y.size());
        for (Index i = 0; i < y.size(); ++i) {
          yhat[i] = lambda_hat == 0.0
                        ? std::exp(ols.fitted[i])
                        : std::pow(std::max(lambda_hat * ols.fitted[i] + 1.0,
                                            1e-12),
                                   1.0 / lambda_hat);
        }
        try {
          row.r2 = gamlss::pseudo_r2_corr(y, yhat);
        } catch (const std::invalid_argument&) {
        }
        row.scale = "boxcox(" + ast.response + ")";
        char note[96];
        std::snprintf(note, sizeof note, "box-cox lambda %.3f", lambda_hat);
        row.family_label = note;
      } else {
        const Vector y = data.column(ast.response_column());
        const gamlss::OlsFit ols = gamlss::ols_fit(X, y, design_names(cols));
        row.gd = -2.0 * ols.loglik;
        row.df = static_cast<double>(ols.p) + 1.0; // residual variance
        row.r2 = response_scale_r2(ast, data, ols.fitted);
        row.scale = ast.response_column();
      }
      row.aic = row.gd + 2.0 * row.df;
      row.bic =
          row.gd + std::log(static_cast<double>(data.n)) * row.df;
    } else if (row.cls == "glm") {
      const std::string fam = m.value("family", std::string("GA"));
      if (fam != "GA") {
        throw std::invalid_argument(
            "glm class supports only the GA family with log link; model '" +
            row.name + "'");
      }
      const std::vector<std::string> cols = parametric_columns(ast, row.cls);
      const Matrix X = design_matrix(data, cols);
      const Vector y = data.column(ast.response_column());
      const gamlss::GlmFit glm =
          gamlss::glm_fit_gamma_log(X, y, design_names(cols));
      row.gd = -2.0 * glm.loglik;
      row.df = static_cast<double>(glm.rank) + 1.0; // dispersion
      row.aic = row.gd + 2.0 * row.df;
      row.bic = row.gd + std::log(static_cast<double>(data.n)) * row.df;
      try {
        row.r2 = gamlss::pseudo_r2_corr(y, glm.mu_hat);
      } catch (const std::invalid_argument&) {
      }
      row.scale = ast.response_column();
      row.family_label = "GA (glm)";
    } else {
      throw gamlss::SchemaError(
          "unknown model class '" + row.cls +
          "' (expected gamlss, cnlrm, glm or reported)");
    }
    rows.push_back(std::move(row));
  }

  // --- ranking: fitted rows by pseudo-R2 (descending), reported rows last ---
  std::stable_sort(rows.begin(), rows.end(),
                   [](const CompareRow& a, const CompareRow& b) {
                     if (a.fitted != b.fitted) return a.fitted;
                     if (!a.fitted) return false;
                     const double ra =
                         a.r2 ? *a.r2 : -std::numeric_limits<double>::infinity();
                     const double rb =
                         b.r2 ? *b.r2 : -std::numeric_limits<double>::infinity();
                     return ra > rb;
                   });

  // --- response-scale groups: criteria comparable only within a group ---
  std::map<std::string, char> group_of;
  for (auto& row : rows) {
    auto it = group_of.find(row.scale);
    if (it == group_of.end()) {
      const char g = static_cast<char>('A' + group_of.size());
      it = group_of.emplace(row.scale, g).first;
    }
    row.group = it->second;
  }
  const bool multi_scale = group_of.size() > 1;

  // --- table ---
  std::size_t name_w = 5, scale_w = 5, family_w = 6;
  for (const auto& row : rows) {
    name_w = std::max(name_w, row.name.size());
    scale_w = std::max(scale_w, row.scale.size());
    family_w = std::max(family_w, row.family_label.size());
  }
  std::string text = warn_text;
  char line[512];
  std::snprintf(line, sizeof line,
                "%-*s %-9s %-*s %-*s %-3s %10s %7s %10s %10s %9s %5s\n",
                static_cast<int>(name_w), "model", "class",
                static_cast<int>(family_w), "family",
                static_cast<int>(scale_w), "scale", "grp", "GD", "df", "AIC",
                "BIC", "R2", "conv");
  text += line;
  text += std::string(name_w + family_w + scale_w + 73, '-') + "\n";
  for (const auto& row : rows) {
    std::snprintf(
        line, sizeof line,
        "%-*s %-9s %-*s %-*s %-3c %10.2f %7.2f %10.2f %10.2f %9s %5s\n",
        static_cast<int>(name_w), row.name.c_str(), row.cls.c_str(),
        static_cast<int>(family_w), row.family_label.c_str(),
        static_cast<int>(scale_w), row.scale.c_str(), row.group, row.gd,
        row.df, row.aic, row.bic,
        row.r2 ? fmt("%.4f", *row.r2).c_str() : "-",
        row.fitted ? (row.converged ? "yes" : "NO") : "-");
    text += line;
  }
  if (multi_scale) {
    text += "\nGD/AIC/BIC are comparable only within a scale group:\n";
    std::vector<std::pair<char, std::string>> legend;
    for (const auto& [scale, g] : group_of) legend.emplace_back(g, scale);
    std::sort(legend.begin(), legend.end());
    for (const auto& [g, scale] : legend) {
      std::snprintf(line, sizeof line, "  %c = %s\n", g, scale.c_str());
      text += line;
    }
    text +=
        "pseudo-R2 is computed on the original response scale and is "
        "comparable across groups.\n";
  }

  // --- audit of reported rows ---
  bool any_reported = false;
  for (const auto& row : rows) {
    if (row.cls != "reported") continue;
    if (!any_reported) {
      text += "\naudit of reported criteria:\n";
      any_reported = true;
    }
    for (const auto& f : row.audit) {
      text += "  " + row.name + ": " + f + "\n";
    }
  }

  // --- likelihood-ratio tests for nested gamlss pairs ---
  struct LrLine {
    std::string small, big;
    gamlss::LrResult res;
  };
  std::vector<LrLine> lr_lines;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows.size(); ++j) {
      if (i == j) continue;
      const CompareRow& s = rows[i];
      const CompareRow& b = rows[j];
      if (!s.is_gamlss || !b.is_gamlss) continue;
      if (s.family != b.family || s.mu_link != b.mu_link ||
          s.sigma_link != b.sigma_link)
        continue;
      if (s.ast.response_column() != b.ast.response_column()) continue;
      if (!(s.df < b.df)) continue;
      if (!terms_nested(s.ast, b.ast)) continue;
      lr_lines.push_back({s.name, b.name, gamlss::lr_test(s.gd, b.gd, s.df,
                                                          b.df)});
    }
  }
  std::stable_sort(lr_lines.begin(), lr_lines.end(),
                   [](const LrLine& x, const LrLine& y) {
                     if (x.small != y.small) return x.small < y.small;
                     return x.big < y.big;
                   });
  if (!lr_lines.empty()) {
    text += "\nlikelihood-ratio tests (nested pairs):\n";
    for (const auto& t : lr_lines) {
      std::snprintf(line, sizeof line,
                    "  %s vs %s: lambda %.3f on %.2f df, p %s\n",
                    t.small.c_str(), t.big.c_str(), t.res.lambda, t.res.df,
                    fmt_p(t.res.p).c_str());
      text += line;
    }
  }

  // --- optional file outputs ---
  if (!a.out_dir.empty()) {
    ordered_json out_doc;
    out_doc["format_version"] = 1;
    out_doc["n"] = data.n;
    ordered_json jrows = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json r;
      r["name"] = row.name;
      r["class"] = row.cls;
      r["family"] = row.family_label;
      r["scale"] = row.scale;
      r["scale_group"] = std::string(1, row.group);
      r["gd"] = row.gd;
      r["df"] = row.df;
      r["aic"] = row.aic;
      r["bic"] = row.bic;
      if (row.r2) r["pseudo_r2"] = *row.r2;
      if (row.fitted) r["converged"] = row.converged;
      if (!row.formula_text.empty()) r["formula"] = row.formula_text;
      if (!row.audit.empty()) r["audit"] = row.audit;
      jrows.push_back(std::move(r));
    }
    out_doc["models"] = std::move(jrows);
    ordered_json jlr = ordered_json::array();
    for (const auto& t : lr_lines) {
      ordered_json r;
      r["smaller"] = t.small;
      r["larger"] = t.big;
      r["lambda"] = t.res.lambda;
      r["df"] = t.res.df;
      r["p"] = t.res.p;
      jlr.push_back(std::move(r));
    }
    out_doc["lr_tests"] = std::move(jlr);
    fs::create_directories(a.out_dir);
    const fs::path out(a.out_dir);
    write_file(out / "compare.txt", text);
    write_file(out / "compare.json", out_doc.dump(2) + "\n");
  }

  std::fputs(text.c_str(), stdout);
  return any_unconverged ? 2 : 0;
}

} // namespace

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{
      "gamlss: distributional regression (location and dispersion submodels, "
      "parametric and cubic-spline terms) for hedonic price data"};
  app.require_subcommand(1);

  FitArgs fit_args;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "fit one model from a formula");
  fit_cmd->add_option("--data", fit_args.data_path, "input CSV")->required();
  fit_cmd
      ->add_option("--formula", fit_args.formula,
                   "e.g. \"log(UP) ~ log(AR) + cs(LAT, df=10) | sigma: "
                   "log(AR)\"")
      ->required();
  fit_cmd->add_option("--family", fit_args.family,
                      "NO, LOGNO, GA, IG or WEI (default NO)");
  fit_cmd->add_option("--mu-link", fit_args.mu_link,
                      "log, identity or inverse (default: family default)");
  fit_cmd->add_option("--sigma-link", fit_args.sigma_link,
                      "log, identity or inverse (default: family default)");
  fit_cmd->add_option("--out", fit_args.out_dir, "output directory")
      ->required();
  fit_cmd->add_option("--max-outer", fit_args.max_outer,
                      "outer iteration cap (default 50)");
  fit_cmd->add_option("--tol", fit_args.tol,
                      "deviance convergence tolerance (default 1e-6)");

  CompareArgs cmp_args;
  CLI::App* cmp_cmd = app.add_subcommand(
      "compare", "fit or audit a list of models and rank them");
  cmp_cmd->add_option("--data", cmp_args.data_path, "input CSV")->required();
  cmp_cmd->add_option("--spec", cmp_args.spec_path, "comparison spec JSON")
      ->required();
  cmp_cmd->add_option("--out", cmp_args.out_dir,
                      "output directory for compare.txt / compare.json");

  DiagnoseArgs diag_args;
  CLI::App* diag_cmd = app.add_subcommand(
      "diagnose", "residual diagnostics for a saved model");
  diag_cmd->add_option("--model", diag_args.model_path, "model.json path")
      ->required();
  diag_cmd->add_option("--data", diag_args.data_path, "input CSV")->required();
  diag_cmd->add_option("--out", diag_args.out_dir, "output directory")
      ->required();
  diag_cmd->add_option("--worm-by", diag_args.worm_by,
                       "covariate for binned worm plots");
  diag_cmd->add_option("--bins", diag_args.bins,
                       "number of covariate bins (default 4)");

  SimulateArgs sim_args;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "draw a synthetic hedonic-pricing dataset");
  CLI::Option* seed_opt =
      sim_cmd->add_option("--seed", sim_args.seed,
                          "RNG seed (falls back to GAMLSS_SEED)");
  sim_cmd->add_option("--n", sim_args.n, "number of observations")
      ->required()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--truth", sim_args.truth_path,
                      "truth-parameter JSON (default: built-in values)");
  sim_cmd->add_option("--out", sim_args.out_path, "output CSV")->required();

  PredictArgs pred_args;
  CLI::App* pred_cmd =
      app.add_subcommand("predict", "evaluate a saved model on new rows");
  pred_cmd->add_option("--model", pred_args.model_path, "model.json path")
      ->required();
  pred_cmd->add_option("--data", pred_args.data_path, "input CSV")->required();
  pred_cmd->add_option("--which", pred_args.which,
                       "parameter to predict: mu or sigma (default mu)");
  pred_cmd->add_option("--out", pred_args.out_path, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);
  sim_args.seed_given = seed_opt->count() > 0;

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit_args);
    if (cmp_cmd->parsed()) return cmd_compare(cmp_args);
    if (diag_cmd->parsed()) return cmd_diagnose(diag_args);
    if (sim_cmd->parsed()) return cmd_simulate(sim_args);
    if (pred_cmd->parsed()) return cmd_predict(pred_args);
  } catch (const gamlss::FormulaError& e) {
    std::fprintf(stderr, "formula error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
