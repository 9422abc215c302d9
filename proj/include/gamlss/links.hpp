#pragma once

#include <string>

namespace gamlss {

/// Strictly monotone link functions relating a distribution parameter to
/// its additive predictor.
enum class LinkId { Log, Identity, Inverse };

/// eta = g(x)
double link_apply(LinkId link, double x);

/// x = g^{-1}(eta)
double link_inverse(LinkId link, double eta);

/// g'(x)
double link_derivative(LinkId link, double x);

const std::string& link_name(LinkId link);

/// Parses "log" / "identity" / "inverse"; throws std::invalid_argument
/// otherwise.
LinkId link_from_name(const std::string& name);

} // namespace gamlss
