#pragma once

#include <Eigen/Dense>
#include <complex>

namespace ltsp {

using Mat     = Eigen::MatrixXd;
using CMat    = Eigen::MatrixXcd;
using Vec     = Eigen::VectorXd;
using CVec    = Eigen::VectorXcd;
using Complex = std::complex<double>;

}  // namespace ltsp
