#pragma once
// Chain and estimator diagnostics: integrated autocorrelation times, the
// log-estimate error samples (Z current, W proposed, R = W - Z) with their
// moment identities, the simulated-score error, and the slow/fast trace
// decomposition.
#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "cpm/models.hpp"
#include "cpm/samplers.hpp"

namespace cpm {

// Autocorrelation sum cutoff: paired initial-positive-sequence, or the first
// lag whose correlation drops below 2/sqrt(len).
enum class CutoffRule { initial_positive, noise_floor };

// 1 + 2 * sum of autocorrelations up to the cutoff. Throws on series shorter
// than 100 or with zero variance.
double iact(const std::vector<double>& series,
            CutoffRule rule = CutoffRule::initial_positive);

struct DiagnosticsSummary {
  double if_estimate = 1.0;
  double kappa_sq = 0.0;  // Var(R) at stationarity
  double sigma_sq = 0.0;  // Var(Z)
  double acc_rate = 0.0;
  double ess = 0.0;       // n / if_estimate
};

enum class ErrorMode {
  proposal_m,  // independent auxiliary draws (and one correlated partner each)
  stationary   // auxiliary-only MH chain at fixed theta
};

struct ErrorSamples {
  std::vector<double> z;  // current-state error log(p_hat / p)
  std::vector<double> w;  // proposed-state error
  std::vector<double> r;  // w - z
  double acc_rate = 0.0;  // stationary mode only
};

// Error of the log-likelihood estimate at fixed theta. log_p_exact is the
// oracle value at that theta. rho drives the correlated partner (proposal_m)
// or the chain proposals (stationary); n samples are recorded after burn_in.
ErrorSamples loglik_error_samples(const LoglikFn& loglik, const Eigen::VectorXd& theta,
                                  double log_p_exact, ErrorMode mode, double rho,
                                  std::size_t n, std::size_t burn_in,
                                  const RngStream& stream);

struct MomentCheck {
  double value = 0.0;    // mean + sign * var/2
  double stderr_ = 0.0;  // batch-means standard error, sqrt(n) batches
  double zscore = 0.0;
  bool flagged = false;  // |zscore| > 3
};

struct MomentReport {
  MomentCheck z_check;  // mean(Z) + Var(Z)/2 under m; sign flips at stationarity
  MomentCheck r_check;  // stationarity: mean(R) + Var(R)/2; fresh pairs: plain mean(R)
  double var_z = 0.0;
  double var_r = 0.0;
};

MomentReport clt_moment_checks(const std::vector<double>& z, const std::vector<double>& r,
                               ErrorMode z_mode = ErrorMode::proposal_m);

struct ScoreError {
  Eigen::VectorXd psi;  // gradient of log(p_hat / p) at theta_hat
};

// Difference between the estimated and exact score at theta_hat over the given
// auxiliary block. Requires a model with analytic gradients on both sides.
ScoreError score_error(const REModel& model, const Eigen::VectorXd& theta_hat,
                       const Eigen::MatrixXd& y, const AuxBlock& u);

struct SlowFast {
  std::vector<double> f_hat;  // theta_hat + (sigma_bar / T) * psi_n
  std::vector<double> g_hat;  // theta_n - f_hat_n
};

SlowFast slow_fast_decompose(const std::vector<double>& theta_trace,
                             const std::vector<double>& psi_trace, double theta_hat,
                             double sigma_bar, std::size_t T);

struct ScoreIfPoint {
  double psi_rate = 0.0;  // correlation decay rate, delta = psi * N / T
  std::size_t N = 0;
  double delta = 0.0;
  double rho = 0.0;
  double kappa_sq = 0.0;  // measured Var(R) along the chain
  double if_score = 0.0;  // IACT of the score-error trace
  double acc_rate = 0.0;
  double lower = 0.0;     // 1 / (delta * acc_rate)
  double upper = 0.0;     // 2 / (delta * acc_rate)
};

// Auxiliary-only chains at fixed theta_hat over a (psi, N) grid; measures the
// inefficiency of the score error against its 1/(delta*acc) and 2/(delta*acc)
// envelopes.
std::vector<ScoreIfPoint> score_if_vs_delta(const GaussianREModel& model,
                                            const Eigen::MatrixXd& y, double theta_hat,
                                            const std::vector<double>& psi_rates,
                                            const std::vector<std::size_t>& particle_counts,
                                            std::size_t n_iters, std::size_t burn_in,
                                            const RngStream& stream);

}  // namespace cpm
