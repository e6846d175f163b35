#pragma once

#include <Eigen/Dense>

namespace flr {

using vec_t = Eigen::VectorXd;
using mat_t = Eigen::MatrixXd;

}  // namespace flr
