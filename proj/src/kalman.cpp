#include "cpm/kalman.hpp"

#include <cmath>
#include <numbers>

namespace cpm {

double kalman_loglik(const Eigen::MatrixXd& A, const Eigen::MatrixXd& y) {
  const Eigen::Index k = y.cols();
  const Eigen::Index T = y.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(k, k);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd P = I;
  double ll = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    Eigen::MatrixXd S = P + I;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    Eigen::VectorXd innov = y.row(t).transpose() - m;
    Eigen::VectorXd w = llt.solve(innov);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
    ll += -0.5 * (k * std::log(2.0 * std::numbers::pi) + logdet + innov.dot(w));
    Eigen::MatrixXd K = llt.solve(P).transpose();
    m += K * innov;
    P = (I - K) * P;
    m = A * m;
    P = A * P * A.transpose() + I;
  }
  return ll;
}

}  // namespace cpm
