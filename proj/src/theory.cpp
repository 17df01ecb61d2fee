#include "cpm/theory.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cpm/diagnostics.hpp"

namespace cpm::theory {
namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * (std::numbers::sqrt2 / 2.0)); }

constexpr std::uint64_t tag_move = 1;
constexpr std::uint64_t tag_penalty = 2;
constexpr std::uint64_t tag_accept = 3;

}  // namespace

double rho_u(double kappa) {
  if (kappa < 0.0) throw std::invalid_argument("kappa must be nonnegative");
  return 2.0 * norm_cdf(-0.5 * kappa);
}

double rho_pm(double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be nonnegative");
  return 2.0 * norm_cdf(-sigma / std::numbers::sqrt2);
}

double rif_qstar(double kappa, IfExact if_ex) {
  const double rho = rho_u(kappa);
  if (if_ex.infinite) return 1.0 / rho;
  return ((1.0 + if_ex.value) / rho - 1.0) / if_ex.value;
}

double arct(double kappa, IfExact if_ex) {
  if (!(kappa > 0.0)) throw std::domain_error("computing-time bound diverges at kappa = 0");
  return std::sqrt(rif_qstar(kappa, if_ex) / (kappa * kappa * rho_u(kappa)));
}

double minimize_arct(IfExact if_ex) {
  constexpr double inv_phi = 0.6180339887498949;  // golden ratio conjugate
  double a = 0.1, b = 5.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = arct(c, if_ex), fd = arct(d, if_ex);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = arct(c, if_ex);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = arct(d, if_ex);
    }
  }
  return 0.5 * (a + b);
}

TheoryCurvePoint curve_point(double kappa, IfExact if_ex) {
  TheoryCurvePoint pt;
  pt.kappa = kappa;
  pt.rho_u = rho_u(kappa);
  pt.rif = rif_qstar(kappa, if_ex);
  pt.arct = arct(kappa, if_ex);
  pt.if_ex = if_ex;
  return pt;
}

PenaltyKernel::PenaltyKernel(double kappa, Eigen::MatrixXd sigma_bar,
                             Eigen::MatrixXd step_chol, bool independent)
    : kappa_(kappa), step_chol_(std::move(step_chol)), independent_(independent) {
  if (!(kappa > 0.0)) throw std::invalid_argument("kappa must be positive");
  target_llt_.compute(sigma_bar);
  if (target_llt_.info() != Eigen::Success) {
    throw std::invalid_argument("target covariance is not positive definite");
  }
  target_chol_ = target_llt_.matrixL();
}

bool PenaltyKernel::step(Eigen::VectorXd& theta, const RngStream& stream,
                         std::size_t iter) const {
  const auto d = theta.size();
  Eigen::VectorXd z(d);
  stream.sub(tag_move).at(iter).fill_normal(z.data(), static_cast<std::size_t>(d));
  Eigen::VectorXd prop =
      independent_ ? Eigen::VectorXd(target_chol_ * z) : Eigen::VectorXd(theta + step_chol_ * z);

  // exact log target ratio; the independence proposal's correction cancels it
  double log_ratio = 0.0;
  if (!independent_) {
    const double q_cur = theta.dot(target_llt_.solve(theta));
    const double q_prop = prop.dot(target_llt_.solve(prop));
    log_ratio = -0.5 * (q_prop - q_cur);
  }
  RngStream sp = stream.sub(tag_penalty).at(iter);
  const double w = -0.5 * kappa_ * kappa_ + kappa_ * sp.normal(0);
  const double ug = stream.sub(tag_accept).at(iter).u01(0);
  if (std::log(ug) < log_ratio + w) {
    theta = prop;
    return true;
  }
  return false;
}

double qstar_if(const ExactKernel& qex_step, double x0, double kappa, std::size_t n_iters,
                const RngStream& stream) {
  const double p_move = rho_u(kappa);
  std::vector<double> trace;
  trace.reserve(n_iters);
  double x = x0;
  for (std::size_t it = 0; it < n_iters; ++it) {
    const double coin = stream.sub(1).at(it).u01(0);
    if (coin < p_move) x = qex_step(x, stream.sub(2).at(it), it);
    trace.push_back(x);
  }
  return iact(trace);
}

}  // namespace cpm::theory
