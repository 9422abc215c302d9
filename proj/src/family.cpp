#include "gamlss/family.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "gamlss/error.hpp"
#include "gamlss/special.hpp"

namespace gamlss {

namespace {

constexpr double kLnSqrt2Pi = 0.91893853320467274178;
// Expected Weibull shape information constant: pi^2/6 + (1 - EulerGamma)^2.
constexpr double kWeiShapeInfo = 1.8236806608528793;
constexpr double kWeightLo = 1e-10;
constexpr double kWeightHi = 1e10;

const FamilyDescriptor kFamilies[] = {
    {Family::NO, "NO", 2, LinkId::Identity, LinkId::Log, false, false},
    {Family::LOGNO, "LOGNO", 2, LinkId::Identity, LinkId::Log, true, false},
    {Family::GA, "GA", 2, LinkId::Log, LinkId::Log, true, true},
    {Family::IG, "IG", 2, LinkId::Log, LinkId::Log, true, true},
    {Family::WEI, "WEI", 2, LinkId::Log, LinkId::Log, true, true},
};

[[noreturn]] void domain_fail(const char* op, Family f, const char* arg,
                              double value) {
  std::ostringstream os;
  os << op << "(" << family_info(f).label << "): argument '" << arg
     << "' out of domain (got " << value << ")";
  throw std::domain_error(os.str());
}

void check_point(const char* op, Family f, double y, double mu, double sigma) {
  const FamilyDescriptor& d = family_info(f);
  if (!std::isfinite(y) || (d.positive_support && y <= 0.0))
    domain_fail(op, f, "y", y);
  if (!std::isfinite(mu) || (d.mu_positive && mu <= 0.0))
    domain_fail(op, f, "mu", mu);
  if (!std::isfinite(sigma) || sigma <= 0.0) domain_fail(op, f, "sigma", sigma);
}

double clamp_weight(double w) {
  if (w < kWeightLo) return kWeightLo;
  if (w > kWeightHi) return kWeightHi;
  return w;
}

} // namespace

const FamilyDescriptor& family_info(Family f) {
  return kFamilies[static_cast<int>(f)];
}

const std::string& family_name(Family f) { return family_info(f).label; }

Family family_from_name(const std::string& name) {
  for (const FamilyDescriptor& d : kFamilies)
    if (d.label == name) return d.name;
  throw std::invalid_argument("unknown family '" + name + "'");
}

void validate_params(Family f, const ParamVector& p) {
  const FamilyDescriptor& d = family_info(f);
  if (p.mu.size() != p.sigma.size())
    throw std::invalid_argument("ParamVector: mu and sigma lengths differ");
  for (Index i = 0; i < p.mu.size(); ++i) {
    if (!std::isfinite(p.mu[i]) || (d.mu_positive && p.mu[i] <= 0.0))
      domain_fail("validate_params", f, "mu", p.mu[i]);
    if (!std::isfinite(p.sigma[i]) || p.sigma[i] <= 0.0)
      domain_fail("validate_params", f, "sigma", p.sigma[i]);
  }
}

double log_density(Family f, double y, double mu, double sigma) {
  check_point("log_density", f, y, mu, sigma);
  switch (f) {
    case Family::NO: {
      const double z = (y - mu) / sigma;
      return -kLnSqrt2Pi - std::log(sigma) - 0.5 * z * z;
    }
    case Family::LOGNO: {
      const double z = (std::log(y) - mu) / sigma;
      return -std::log(y) - kLnSqrt2Pi - std::log(sigma) - 0.5 * z * z;
    }
    case Family::GA: {
      const double a = 1.0 / (sigma * sigma);
      return (a - 1.0) * std::log(y) - a * y / mu + a * std::log(a) -
             a * std::log(mu) - log_gamma(a);
    }
    case Family::IG: {
      const double r = y - mu;
      return -0.5 * (std::log(2.0 * 3.14159265358979323846) +
                     2.0 * std::log(sigma) + 3.0 * std::log(y)) -
             r * r / (2.0 * mu * mu * sigma * sigma * y);
    }
    case Family::WEI: {
      const double t = std::pow(y / mu, sigma);
      return std::log(sigma) - std::log(mu) +
             (sigma - 1.0) * (std::log(y) - std::log(mu)) - t;
    }
  }
  throw std::logic_error("log_density: unknown family");
}

double cdf(Family f, double y, double mu, double sigma) {
  check_point("cdf", f, y, mu, sigma);
  switch (f) {
    case Family::NO:
      return norm_cdf((y - mu) / sigma);
    case Family::LOGNO:
      return norm_cdf((std::log(y) - mu) / sigma);
    case Family::GA: {
      const double a = 1.0 / (sigma * sigma);
      return gamma_p(a, a * y / mu);
    }
    case Family::IG: {
      const double s = sigma * std::sqrt(y);
      const double z1 = (y / mu - 1.0) / s;
      const double z2 = -(y / mu + 1.0) / s;
      // Second term computed in log space: exp(2/(sigma^2 mu)) overflows.
      const double tail =
          std::exp(2.0 / (sigma * sigma * mu) + log_norm_cdf(z2));
      const double v = norm_cdf(z1) + tail;
      return v < 1.0 ? v : 1.0;
    }
    case Family::WEI:
      return -std::expm1(-std::pow(y / mu, sigma));
  }
  throw std::logic_error("cdf: unknown family");
}

namespace {

// d log f / d theta and the expected information -E[d2 log f / d theta2]
// for one observation.
void score_info(Family f, double y, double mu, double sigma, Param which,
                double* score, double* info) {
  const double s2 = sigma * sigma;
  switch (f) {
    case Family::NO:
      if (which == Param::Mu) {
        *score = (y - mu) / s2;
        *info = 1.0 / s2;
      } else {
        const double r = y - mu;
        *score = (r * r - s2) / (s2 * sigma);
        *info = 2.0 / s2;
      }
      return;
    case Family::LOGNO: {
      const double r = std::log(y) - mu;
      if (which == Param::Mu) {
        *score = r / s2;
        *info = 1.0 / s2;
      } else {
        *score = (r * r - s2) / (s2 * sigma);
        *info = 2.0 / s2;
      }
      return;
    }
    case Family::GA: {
      if (which == Param::Mu) {
        *score = (y - mu) / (s2 * mu * mu);
        *info = 1.0 / (s2 * mu * mu);
      } else {
        const double a = 1.0 / s2;
        *score = (2.0 / (s2 * sigma)) *
                 (y / mu - std::log(y) + std::log(mu) + std::log(s2) +
                  digamma(a) - 1.0);
        *info = (4.0 / (s2 * s2 * s2)) * trigamma(a) - 4.0 / (s2 * s2);
      }
      return;
    }
    case Family::IG: {
      if (which == Param::Mu) {
        *score = (y - mu) / (s2 * mu * mu * mu);
        *info = 1.0 / (s2 * mu * mu * mu);
      } else {
        const double r = y - mu;
        *score = -1.0 / sigma + r * r / (y * mu * mu * s2 * sigma);
        *info = 2.0 / s2;
      }
      return;
    }
    case Family::WEI: {
      const double t = std::pow(y / mu, sigma);
      if (which == Param::Mu) {
        *score = (sigma / mu) * (t - 1.0);
        *info = s2 / (mu * mu);
      } else {
        *score = 1.0 / sigma + std::log(y / mu) * (1.0 - t);
        *info = kWeiShapeInfo / s2;
      }
      return;
    }
  }
  throw std::logic_error("score_info: unknown family");
}

} // namespace

std::pair<Vector, Vector> score_and_weight(Family f, const Vector& y,
                                           const ParamVector& params,
                                           Param which, LinkId link) {
  const Index n = y.size();
  if (params.mu.size() != n || params.sigma.size() != n)
    throw std::invalid_argument("score_and_weight: length mismatch");
  validate_params(f, params);

  Vector u(n), w(n);
  for (Index i = 0; i < n; ++i) {
    const double theta = which == Param::Mu ? params.mu[i] : params.sigma[i];
    double score, info;
    score_info(f, y[i], params.mu[i], params.sigma[i], which, &score, &info);
    const double dtheta_deta = 1.0 / link_derivative(link, theta);
    u[i] = score * dtheta_deta;
    double wi = info * dtheta_deta * dtheta_deta;
    if (!std::isfinite(wi) || !(wi > 0.0)) wi = u[i] * u[i]; // squared-score fallback
    w[i] = clamp_weight(wi);
    if (!std::isfinite(u[i]) || !std::isfinite(w[i])) {
      std::ostringstream os;
      os << "score_and_weight(" << family_name(f)
         << "): non-finite intermediate at row " << i;
      throw FitError(os.str());
    }
  }
  return {std::move(u), std::move(w)};
}

} // namespace gamlss
