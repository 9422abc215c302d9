#include "gamlss/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "gamlss/error.hpp"
#include "gamlss/special.hpp"

namespace gamlss {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

double Rng::uniform() {
  // 53-bit mantissa, offset to keep the draw strictly inside (0, 1).
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0)) {
    throw std::domain_error("gamma draw needs positive shape and scale");
  }
  if (shape < 1.0) {
    // Boost a shape+1 draw back down.
    const double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v * scale;
    }
  }
}

double Rng::inverse_gaussian(double mu, double lambda) {
  if (!(mu > 0.0) || !(lambda > 0.0)) {
    throw std::domain_error("inverse-gaussian draw needs positive parameters");
  }
  const double nu = normal();
  const double y = nu * nu;
  const double x = mu + mu * mu * y / (2.0 * lambda) -
                   mu / (2.0 * lambda) *
                       std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  const double u = uniform();
  if (u <= mu / (mu + x)) return x;
  return mu * mu / x;
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const int span = hi - lo + 1;
  return lo + static_cast<int>(uniform() * span) % span;
}

int Rng::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("categorical: negative weight");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("categorical: zero total weight");
  double u = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u <= 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

double Rng::draw(Family family, double mu, double sigma) {
  switch (family) {
    case Family::NO:
      return mu + sigma * normal();
    case Family::LOGNO:
      return std::exp(mu + sigma * normal());
    case Family::GA:
      return gamma(1.0 / (sigma * sigma), sigma * sigma * mu);
    case Family::IG:
      return inverse_gaussian(mu, 1.0 / (sigma * sigma));
    case Family::WEI:
      return mu * std::pow(-std::log(1.0 - uniform()), 1.0 / sigma);
  }
  throw std::logic_error("unknown family");
}

namespace {

// The generator's covariate boxes (fixed; smooth shapes standardize on them).
constexpr double kLatLo = 701500.0, kLatHi = 714600.0;
constexpr double kLonLo = 8769000.0, kLonHi = 8798000.0;
constexpr double kArLo = 48.0, kArHi = 91780.0;
constexpr double kFrLo = 2.6, kFrHi = 516.0;

double unit(double v, double lo, double hi) { return (v - lo) / (hi - lo); }

constexpr double kPi = 3.14159265358979323846;

// Fixed smooth shapes on [0,1], bounded and roughly centered.
double shape_lat(double t) { return std::sin(2.0 * kPi * t); }
double shape_lon(double t) { return std::cos(kPi * t); }
double shape_log_ar(double t) { return std::sin(kPi * t) + 0.5 * (t - 0.5); }
double shape_sigma_log_ar(double t) { return std::cos(2.0 * kPi * t); }

} // namespace

TruthParams TruthParams::defaults() {
  TruthParams t;
  t.mu_linear = {
      {"YR06", -0.05}, {"YR07", 0.10},  {"STR1", 0.25}, {"STR2", 0.40},
      {"NIO", 0.15},   {"NIT", 0.30},   {"SZ", 0.20},   {"TO", 0.12},
      {"PA", 0.08},    {"SI", -0.10},   {"log(FRVN)", 0.03},
  };
  return t;
}

std::string TruthParams::to_json() const {
  nlohmann::ordered_json j;
  j["format_version"] = format_version;
  j["family"] = family_name(family);
  j["mu"]["intercept"] = mu_intercept;
  j["mu"]["linear"] = mu_linear;
  j["mu"]["amp_lat"] = mu_amp_lat;
  j["mu"]["amp_lon"] = mu_amp_lon;
  j["mu"]["amp_log_ar"] = mu_amp_log_ar;
  j["sigma"]["intercept"] = sigma_intercept;
  j["sigma"]["st"] = sigma_st;
  j["sigma"]["amp_log_ar"] = sigma_amp_log_ar;
  return j.dump(2) + "\n";
}

TruthParams TruthParams::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("truth JSON parse error: ") + e.what());
  }
  TruthParams t;
  if (!j.contains("format_version") || !j["format_version"].is_number_integer()) {
    throw std::invalid_argument("truth JSON missing integer format_version");
  }
  t.format_version = j["format_version"].get<int>();
  if (t.format_version != 1) {
    throw std::invalid_argument("unsupported truth format_version " +
                                std::to_string(t.format_version));
  }
  if (j.contains("family")) t.family = family_from_name(j["family"].get<std::string>());
  const auto& mu = j.at("mu");
  t.mu_intercept = mu.at("intercept").get<double>();
  if (mu.contains("linear")) {
    t.mu_linear = mu["linear"].get<std::map<std::string, double>>();
  }
  t.mu_amp_lat = mu.value("amp_lat", 0.0);
  t.mu_amp_lon = mu.value("amp_lon", 0.0);
  t.mu_amp_log_ar = mu.value("amp_log_ar", 0.0);
  const auto& sg = j.at("sigma");
  t.sigma_intercept = sg.at("intercept").get<double>();
  t.sigma_st = sg.value("st", 0.0);
  t.sigma_amp_log_ar = sg.value("amp_log_ar", 0.0);
  return t;
}

void save_truth(const std::string& path, const TruthParams& truth) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  out << truth.to_json();
}

TruthParams load_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open truth file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return TruthParams::from_json(ss.str());
}

namespace {

const std::vector<std::string> kLinearColumns = {
    "YR06", "YR07",      "STR1", "STR2", "NIO", "NIT", "SZ",
    "TO",   "PA",        "SI",   "VN",   "UC",  "ST",  "log(FRVN)",
    "FRVN", "log(ST)"};

void check_truth(const TruthParams& truth) {
  for (const auto& [name, coef] : truth.mu_linear) {
    if (std::find(kLinearColumns.begin(), kLinearColumns.end(), name) ==
        kLinearColumns.end()) {
      throw std::invalid_argument("truth: unknown linear column '" + name + "'");
    }
    if (!std::isfinite(coef)) {
      throw std::invalid_argument("truth: non-finite coefficient on '" + name + "'");
    }
  }
}

} // namespace

Vector truth_eta_mu(const TruthParams& truth, const Dataset& derived) {
  check_truth(truth);
  const Index n = derived.n;
  Vector eta = Vector::Constant(n, truth.mu_intercept);
  for (const auto& [name, coef] : truth.mu_linear) {
    eta += coef * derived.column(name);
  }
  const Vector& lat = derived.column("LAT");
  const Vector& lon = derived.column("LON");
  const Vector& logar = derived.column("log(AR)");
  const double la_lo = std::log(kArLo), la_hi = std::log(kArHi);
  for (Index i = 0; i < n; ++i) {
    eta[i] += truth.mu_amp_lat * shape_lat(unit(lat[i], kLatLo, kLatHi));
    eta[i] += truth.mu_amp_lon * shape_lon(unit(lon[i], kLonLo, kLonHi));
    eta[i] += truth.mu_amp_log_ar * shape_log_ar(unit(logar[i], la_lo, la_hi));
  }
  return eta;
}

Vector truth_eta_sigma(const TruthParams& truth, const Dataset& derived) {
  const Index n = derived.n;
  Vector eta = Vector::Constant(n, truth.sigma_intercept);
  const Vector& st = derived.column("ST");
  const Vector& logar = derived.column("log(AR)");
  const double la_lo = std::log(kArLo), la_hi = std::log(kArHi);
  for (Index i = 0; i < n; ++i) {
    eta[i] += truth.sigma_st * st[i];
    eta[i] += truth.sigma_amp_log_ar *
              shape_sigma_log_ar(unit(logar[i], la_lo, la_hi));
  }
  return eta;
}

Dataset simulate_hedonic(std::uint64_t seed, Index n, const TruthParams& truth) {
  if (n < 50) {
    throw std::invalid_argument("simulate_hedonic: n must be at least 50");
  }
  check_truth(truth);
  Rng rng(seed);

  Dataset ds;
  ds.n = n;
  ds.provenance = "simulate(seed=" + std::to_string(seed) +
                  ",n=" + std::to_string(n) + ")";
  Vector up(n), ar(n), fr(n), lat(n), lon(n), uc(n), st(n);
  Vector to(n), pa(n), si(n), vn(n), sz(n), str(n), ni(n), yr(n);

  auto clamp = [](double v, double lo, double hi) {
    return v < lo ? lo : (v > hi ? hi : v);
  };
  const std::vector<double> str_w = {0.5, 0.3, 0.2};
  const std::vector<double> ni_w = {0.45, 0.35, 0.2};
  const std::vector<double> yr_w = {0.4, 0.3, 0.3};

  // Covariates drawn row-wise in a fixed order, then the response, so the
  // stream layout is stable under any later change to a single marginal.
  for (Index i = 0; i < n; ++i) {
    lat[i] = kLatLo + (kLatHi - kLatLo) * rng.uniform();
    lon[i] = kLonLo + (kLonHi - kLonLo) * rng.uniform();
    ar[i] = clamp(std::exp(6.2 + 1.1 * rng.normal()), kArLo, kArHi);
    fr[i] = clamp(std::exp(3.1 + 0.55 * rng.normal()), kFrLo, kFrHi);
    uc[i] = 3.0 + 0.5 * rng.uniform_int(0, 6);
    st[i] = rng.uniform_int(1, 18);
    to[i] = rng.uniform() < 0.5 ? 1.0 : 0.0;
    pa[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
    si[i] = rng.uniform() < 0.2 ? 1.0 : 0.0;
    vn[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    sz[i] = rng.uniform() < 0.25 ? 1.0 : 0.0;
    str[i] = rng.categorical(str_w);
    ni[i] = rng.categorical(ni_w);
    yr[i] = 2005.0 + rng.categorical(yr_w);
  }

  ds.set_column("UP", Vector::Ones(n)); // placeholder until eta is known
  ds.set_column("AR", ar);
  ds.set_column("FR", fr);
  ds.set_column("LAT", lat);
  ds.set_column("LON", lon);
  ds.set_column("UC", uc);
  ds.set_column("ST", st);
  ds.set_column("TO", to);
  ds.set_column("PA", pa);
  ds.set_column("SI", si);
  ds.set_column("VN", vn);
  ds.set_column("SZ", sz);
  ds.set_column("STR", str);
  ds.set_column("NI", ni);
  ds.set_column("YR", yr);

  const Dataset derived = derive_variables(ds);
  const Vector eta_mu = truth_eta_mu(truth, derived);
  const Vector eta_sigma = truth_eta_sigma(truth, derived);
  for (Index i = 0; i < n; ++i) {
    const double mu = std::exp(eta_mu[i]);
    const double sigma = std::exp(eta_sigma[i]);
    up[i] = rng.draw(truth.family, mu, sigma);
  }
  ds.set_column("UP", up);
  validate_schema(ds, SchemaSpec::hedonic());
  return ds;
}

} // namespace gamlss
