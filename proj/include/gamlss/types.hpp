#pragma once

#include <Eigen/Dense>

namespace gamlss {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

} // namespace gamlss
