#pragma once

#include <Eigen/Dense>

namespace saddle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IVec = Eigen::VectorXi;

}  // namespace saddle
