#pragma once

#include <Eigen/Dense>

namespace pqk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace pqk
