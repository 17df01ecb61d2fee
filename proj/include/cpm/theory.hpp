#pragma once
// Acceptance and efficiency theory for chains whose log-acceptance carries an
// additive Gaussian noise penalty: the half-normal acceptance curve, relative
// inefficiency and its computing-time bound, plus reference simulators (the
// penalty kernel and the lazy bounding chain) validating the closed forms.
#include <Eigen/Dense>

#include <cstddef>
#include <functional>

#include "cpm/rng.hpp"

namespace cpm::theory {

// Inefficiency of the underlying exact chain; the limit case is a flag, never
// a floating-point infinity inside formulas.
struct IfExact {
  double value = 1.0;
  bool infinite = false;
  static IfExact finite(double v) { return {v, false}; }
  static IfExact limit() { return {0.0, true}; }
};

double rho_u(double kappa);   // 2 Phi(-kappa/2)
double rho_pm(double sigma);  // 2 Phi(-sigma/sqrt(2)), fresh-noise acceptance

// ((1 + IF)/rho_u - 1)/IF for finite IF, 1/rho_u in the limit
double rif_qstar(double kappa, IfExact if_ex);
// sqrt(rif / (kappa^2 rho_u)); throws for kappa = 0 where it diverges
double arct(double kappa, IfExact if_ex);
// golden-section minimizer of arct over [0.1, 5], tolerance 1e-4
double minimize_arct(IfExact if_ex);

struct TheoryCurvePoint {
  double kappa = 0.0;
  double rho_u = 0.0;
  double rif = 0.0;
  double arct = 0.0;
  IfExact if_ex;
};
TheoryCurvePoint curve_point(double kappa, IfExact if_ex);

// One step of the limiting penalty chain targeting N(0, sigma_bar): a
// random-walk (or independence) proposal accepted on the exact log-ratio
// perturbed by w ~ N(-kappa^2/2, kappa^2) drawn fresh each proposal.
class PenaltyKernel {
 public:
  PenaltyKernel(double kappa, Eigen::MatrixXd sigma_bar, Eigen::MatrixXd step_chol,
                bool independent = false);
  // updates theta in place; returns whether the proposal was accepted
  bool step(Eigen::VectorXd& theta, const RngStream& stream, std::size_t iter) const;

 private:
  double kappa_;
  Eigen::LLT<Eigen::MatrixXd> target_llt_;
  Eigen::MatrixXd target_chol_;
  Eigen::MatrixXd step_chol_;
  bool independent_;
};

// Advances the monitored scalar by one exact-kernel step.
using ExactKernel = std::function<double(double x, const RngStream& stream, std::size_t iter)>;

// Inefficiency of the lazy chain that takes an exact step with probability
// rho_u(kappa) and otherwise stays put, estimated from a simulated trace.
double qstar_if(const ExactKernel& qex_step, double x0, double kappa, std::size_t n_iters,
                const RngStream& stream);

}  // namespace cpm::theory
