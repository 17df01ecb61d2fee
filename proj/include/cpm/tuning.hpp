#pragma once
// Practical chain tuning: the N = ceil(beta T^alpha) scaling plan with its
// derived refresh rate, pilot posterior centre/curvature estimates, bisection
// of psi to a target stationary noise scale, and the computing-time curve
// CT(beta) = c0/beta + c1 beta fitted over a beta grid.
#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "cpm/models.hpp"
#include "cpm/rng.hpp"
#include "cpm/samplers.hpp"

namespace cpm {

struct ScalingPlan {
  std::size_t T = 0;
  double alpha = 0.5;  // k/(k + 1) for a k-dimensional state-space model
  double beta = 1.0;
  double psi = 1.0;
  Eigen::VectorXd theta_hat;  // pilot posterior centre; empty until fitted
  Eigen::MatrixXd sigma_bar;  // T x posterior covariance; empty until fitted

  std::size_t N() const;
  double delta() const;  // psi N / T
  double rho() const;    // exp(-delta)
};

struct CenterEstimate {
  Eigen::VectorXd theta_hat;
  Eigen::MatrixXd sigma_bar;
};

// Estimator for the model family: per-observation importance sampling for
// random-effects models, the sorted particle filter (with a pilot-calibrated
// sorting map at theta_pilot) for state-space models.
std::unique_ptr<LoglikFn> make_loglik_for(const Model& model, const Eigen::MatrixXd& y,
                                          std::size_t N, const Eigen::VectorXd& theta_pilot,
                                          const RngStream& pilot_stream);

// Posterior centre and curvature: conjugate closed form for the Gaussian
// random-effects model, grid plus golden-section on the exact posterior for
// other scalar models, otherwise moments of a short pilot chain started at
// theta0 with N_pilot particles.
CenterEstimate fit_center(const Model& model, const Eigen::MatrixXd& y,
                          const Eigen::VectorXd& theta0, std::size_t N_pilot,
                          const RngStream& stream);

// Variance of the stationary log-estimate increment R at fixed theta.
double measure_kappa_sq(const LoglikFn& loglik, const Eigen::VectorXd& theta_hat, double rho,
                        std::size_t n_samples, std::size_t burn_in, const RngStream& stream);

// Bisection on psi in [1e-4, 1e2] until the stationary noise scale at the
// plan's N is within tol of target_kappa; common random numbers across
// evaluations keep the empirical map monotone. Requires plan.theta_hat.
// Throws std::range_error when the bracket cannot reach the target.
double calibrate_psi(const Model& model, const Eigen::MatrixXd& y, const ScalingPlan& plan,
                     const RngStream& stream, double target_kappa = 1.4, double tol = 0.05,
                     std::size_t n_samples = 20000);

struct CTFit {
  double c0 = 0.0;
  double c1 = 0.0;
  double beta_hat = 0.0;       // sqrt(c0/c1), the analytic minimizer
  double residual_norm = 0.0;  // of the clamped fit
  bool clamped = false;        // a negative coefficient was clamped to zero
};

// Least squares of ct on (1/beta, beta); needs >= 3 points, positive
// measurements, and a nondegenerate grid.
CTFit fit_ct_curve(const std::vector<double>& beta_grid, const std::vector<double>& ct);

using Monitor = std::function<double(const Eigen::VectorXd&)>;

// N x IACT of h over a chain run at the plan's (N, rho), started from the
// fitted centre with a random-walk step scaled to the pilot curvature.
double measure_ct(const Model& model, const Eigen::MatrixXd& y, const ScalingPlan& plan,
                  const Monitor& h, std::size_t n_iters, std::size_t burn_in,
                  const RngStream& stream);

}  // namespace cpm
