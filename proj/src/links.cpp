#include "gamlss/links.hpp"

#include <cmath>
#include <stdexcept>

namespace gamlss {

double link_apply(LinkId link, double x) {
  switch (link) {
    case LinkId::Log:
      if (!(x > 0.0)) throw std::domain_error("log link: argument must be > 0");
      return std::log(x);
    case LinkId::Identity:
      return x;
    case LinkId::Inverse:
      if (x == 0.0) throw std::domain_error("inverse link: argument must be nonzero");
      return 1.0 / x;
  }
  throw std::logic_error("link_apply: unknown link");
}

double link_inverse(LinkId link, double eta) {
  switch (link) {
    case LinkId::Log:
      return std::exp(eta);
    case LinkId::Identity:
      return eta;
    case LinkId::Inverse:
      if (eta == 0.0) throw std::domain_error("inverse link: predictor must be nonzero");
      return 1.0 / eta;
  }
  throw std::logic_error("link_inverse: unknown link");
}

double link_derivative(LinkId link, double x) {
  switch (link) {
    case LinkId::Log:
      if (!(x > 0.0)) throw std::domain_error("log link: argument must be > 0");
      return 1.0 / x;
    case LinkId::Identity:
      return 1.0;
    case LinkId::Inverse:
      if (x == 0.0) throw std::domain_error("inverse link: argument must be nonzero");
      return -1.0 / (x * x);
  }
  throw std::logic_error("link_derivative: unknown link");
}

const std::string& link_name(LinkId link) {
  static const std::string names[] = {"log", "identity", "inverse"};
  return names[static_cast<int>(link)];
}

LinkId link_from_name(const std::string& name) {
  if (name == "log") return LinkId::Log;
  if (name == "identity") return LinkId::Identity;
  if (name == "inverse") return LinkId::Inverse;
  throw std::invalid_argument("unknown link '" + name + "'");
}

} // namespace gamlss
