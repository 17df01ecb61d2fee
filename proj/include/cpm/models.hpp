#pragma once
// Observation models. Two estimator-facing families:
//  - REModel: per-observation importance weights against latent effects
//  - StateSpaceModel: particle initialization/propagation for a filter
// All randomness is read from auxiliary panels laid out by AuxLayout; models
// never draw internally except in simulate()/pilot_states().
#include <Eigen/Dense>

#include <cstddef>
#include <string>

#include "cpm/aux.hpp"
#include "cpm/rng.hpp"

namespace cpm {

class Model {
 public:
  virtual ~Model() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t obs_dim() const = 0;
  // y is T x obs_dim
  virtual Eigen::MatrixXd simulate(const Eigen::VectorXd& theta, std::size_t T,
                                   const RngStream& stream) const = 0;
  virtual double prior_logdensity(const Eigen::VectorXd& theta) const = 0;
  virtual bool has_exact_loglik() const { return false; }
  virtual double exact_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) const;
};

// theta + step_chol * z, z standard normal from the stream's first cells
Eigen::VectorXd rw_propose(const Eigen::VectorXd& theta, const Eigen::MatrixXd& step_chol,
                           const RngStream& stream);

class REModel : public Model {
 public:
  virtual std::size_t coords_per_obs() const = 0;
  // lw[i] = log weight of sample i for observation t; u_panel holds N groups
  // of coords_per_obs() standard normals
  virtual void is_logweights(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                             std::size_t t, const double* u_panel, std::size_t N,
                             double* lw) const = 0;
};

class StateSpaceModel : public Model {
 public:
  virtual std::size_t state_dim() const = 0;
  virtual std::size_t coords_per_particle() const = 0;
  // Fill N states (row-major N x state_dim) from the first panel and weight
  // them against the first observation.
  virtual void init_particles(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                              const double* u_panel, std::size_t N, double* states,
                              double* lw) const = 0;
  // states_out[i] = transition(states_in[parent[i]]) driven by panel t_next,
  // weighted against observation t_next.
  virtual void propagate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                         std::size_t t_next, const double* u_panel,
                         const std::size_t* parent, const double* states_in,
                         std::size_t N, double* states_out, double* lw) const = 0;
  // Unconditional forward state draws (n_draws x state_dim), for calibrating
  // the sorting map.
  virtual Eigen::MatrixXd pilot_states(const Eigen::VectorXd& theta, std::size_t n_draws,
                                       const RngStream& stream) const = 0;
};

// Y_t = theta + U_t + eps_t with U, eps standard normal; exact likelihood is
// Gaussian with variance 2 per observation.
class GaussianREModel final : public REModel {
 public:
  explicit GaussianREModel(double prior_sd = 100.0) : prior_sd_(prior_sd) {}
  std::string name() const override { return "gaussian_re"; }
  std::size_t dim() const override { return 1; }
  std::size_t obs_dim() const override { return 1; }
  Eigen::MatrixXd simulate(const Eigen::VectorXd& theta, std::size_t T,
                           const RngStream& stream) const override;
  double prior_logdensity(const Eigen::VectorXd& theta) const override;
  bool has_exact_loglik() const override { return true; }
  double exact_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) const override;
  std::size_t coords_per_obs() const override { return 1; }
  void is_logweights(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y, std::size_t t,
                     const double* u_panel, std::size_t N, double* lw) const override;

  // gradient of the estimated log-likelihood in theta, and its exact limit
  double is_score(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                  const AuxBlock& u) const;
  double exact_score(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) const;

  double prior_sd() const { return prior_sd_; }

 private:
  double prior_sd_;
};

// X_1 ~ N(0,I); X_{t+1} = A(theta) X_t + V_t; Y_t = X_t + W_t; V, W ~ N(0,I).
// A(theta)_{ij} = theta^{|i-j|+1}. Exact likelihood via Kalman filter.
class LinearGaussianSSM final : public StateSpaceModel {
 public:
  explicit LinearGaussianSSM(std::size_t k) : k_(k) {}
  std::string name() const override { return "lgssm"; }
  std::size_t dim() const override { return 1; }
  std::size_t obs_dim() const override { return k_; }
  Eigen::MatrixXd simulate(const Eigen::VectorXd& theta, std::size_t T,
                           const RngStream& stream) const override;
  double prior_logdensity(const Eigen::VectorXd& theta) const override;
  bool has_exact_loglik() const override { return true; }
  double exact_loglik(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y) const override;
  std::size_t state_dim() const override { return k_; }
  std::size_t coords_per_particle() const override { return k_; }
  void init_particles(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                      const double* u_panel, std::size_t N, double* states,
                      double* lw) const override;
  void propagate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y, std::size_t t_next,
                 const double* u_panel, const std::size_t* parent, const double* states_in,
                 std::size_t N, double* states_out, double* lw) const override;
  Eigen::MatrixXd pilot_states(const Eigen::VectorXd& theta, std::size_t n_draws,
                               const RngStream& stream) const override;

  Eigen::MatrixXd transition_matrix(double theta) const;

 private:
  std::size_t k_;
};

// Stochastic volatility with Euler-discretized log-variance path.
// theta = (mu, upsilon, omega, chi). Per observation interval, `substeps`
// Euler steps of x = log sigma^2:
//   x += eps*(upsilon*(mu*e^{-x} - 1) - (omega^2/2) e^{-x}) + sqrt(eps)*omega*e^{-x/2}*eta
// Integrated variance uses right endpoints, the leverage integral left
// endpoints; Y ~ N(chi*gamma, (1-chi^2)*sigma2). Initial variance is drawn
// from the stationary Gamma(2*mu*upsilon/omega^2, rate 2*upsilon/omega^2).
// Panel layout per observation: coord 0 reserved for the initial draw (read
// only at t = 0), coords 1..substeps are the Euler innovations.
class HestonEulerModel final : public StateSpaceModel {
 public:
  explicit HestonEulerModel(std::size_t substeps = 10) : substeps_(substeps) {}
  std::string name() const override { return "heston"; }
  std::size_t dim() const override { return 4; }
  std::size_t obs_dim() const override { return 1; }
  Eigen::MatrixXd simulate(const Eigen::VectorXd& theta, std::size_t T,
                           const RngStream& stream) const override;
  double prior_logdensity(const Eigen::VectorXd& theta) const override;
  std::size_t state_dim() const override { return 1; }
  std::size_t coords_per_particle() const override { return substeps_ + 1; }
  void init_particles(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                      const double* u_panel, std::size_t N, double* states,
                      double* lw) const override;
  void propagate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y, std::size_t t_next,
                 const double* u_panel, const std::size_t* parent, const double* states_in,
                 std::size_t N, double* states_out, double* lw) const override;
  Eigen::MatrixXd pilot_states(const Eigen::VectorXd& theta, std::size_t n_draws,
                               const RngStream& stream) const override;

  std::size_t substeps() const { return substeps_; }
  double stationary_log_variance(const Eigen::VectorXd& theta, double z) const;

 private:
  std::size_t substeps_;
};

}  // namespace cpm
