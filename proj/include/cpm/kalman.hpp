#pragma once
#include <Eigen/Dense>

namespace cpm {

// Log-likelihood of y (T x k) under
//   x_1 ~ N(0, I),  x_{t+1} = A x_t + v_t,  y_t = x_t + w_t,  v, w ~ N(0, I).
double kalman_loglik(const Eigen::MatrixXd& A, const Eigen::MatrixXd& y);

}  // namespace cpm
