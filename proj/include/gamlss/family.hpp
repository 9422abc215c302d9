#pragma once

#include <string>
#include <utility>

#include "gamlss/links.hpp"
#include "gamlss/types.hpp"

namespace gamlss {

/// Two-parameter response distributions, mean-dispersion parameterization:
///   NO     y ~ Normal(mu, sigma^2), y and mu unrestricted
///   LOGNO  log y ~ Normal(mu, sigma^2), y > 0
///   GA     gamma with E y = mu, Var y = sigma^2 mu^2
///   IG     inverse Gaussian with E y = mu, Var y = sigma^2 mu^3
///   WEI    Weibull with scale mu and shape sigma, so F(mu) = 1 - e^{-1}
enum class Family { NO, LOGNO, GA, IG, WEI };

enum class Param { Mu, Sigma };

struct FamilyDescriptor {
  Family name;
  std::string label;
  int n_params; // always 2 for the shipped families
  LinkId default_mu_link;
  LinkId default_sigma_link;
  bool positive_support; // support is (0, inf) rather than all reals
  bool mu_positive;      // parameter space requires mu > 0
};

const FamilyDescriptor& family_info(Family f);
Family family_from_name(const std::string& name);
const std::string& family_name(Family f);

/// Location/dispersion parameter vectors for n observations.
struct ParamVector {
  Vector mu;
  Vector sigma;
};

/// Throws std::domain_error when any entry leaves the family's parameter
/// space or is non-finite.
void validate_params(Family f, const ParamVector& p);

/// log f(y | mu, sigma). Throws std::domain_error on out-of-support y or
/// invalid parameters, naming the offending argument.
double log_density(Family f, double y, double mu, double sigma);

/// F(y | mu, sigma), in [0, 1].
double cdf(Family f, double y, double mu, double sigma);

/// Score u = dl/deta and iterative weight w = -E[d2l/deta2] (expected
/// information through the link; clamped to [1e-10, 1e10]) for the chosen
/// parameter, evaluated rowwise. Throws FitError naming the row on
/// non-finite intermediates.
std::pair<Vector, Vector> score_and_weight(Family f, const Vector& y,
                                           const ParamVector& params,
                                           Param which, LinkId link);

} // namespace gamlss
