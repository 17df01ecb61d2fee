#pragma once
// Metropolis-Hastings steps on theta (exact likelihood) and on the extended
// (theta, u) space (estimated likelihood with correlated or fresh auxiliary
// proposals). Per-iteration randomness is drawn from fixed sub-streams of the
// chain stream, so a step can be replayed from (state, iter) alone.
#include <Eigen/Dense>

#include <functional>
#include <memory>

#include "cpm/aux.hpp"
#include "cpm/estimators.hpp"
#include "cpm/models.hpp"

namespace cpm {

inline constexpr std::uint64_t tag_proposal = 1;
inline constexpr std::uint64_t tag_cn = 2;
inline constexpr std::uint64_t tag_accept = 3;
inline constexpr std::uint64_t tag_init = 4;

struct ChainState {
  Eigen::VectorXd theta;
  AuxBlock u;
  double log_est = 0.0;
  double log_prior = 0.0;
};

struct TraceRecord {
  std::size_t iter = 0;
  Eigen::VectorXd theta;
  bool accepted = false;
  double logp_cur = 0.0;
  double logp_prop = 0.0;
};

enum class ProposalKind { random_walk, autoregressive };

struct KernelConfig {
  Eigen::MatrixXd step_cov;  // random-walk covariance / AR innovation covariance
  ProposalKind proposal = ProposalKind::random_walk;
  Eigen::VectorXd ar_center;
  double ar_coeff = 0.0;
  CorrelationParam corr;
  std::size_t burn_in = 0;
  std::size_t n_iters = 0;
};

// Estimated log-likelihood as a function of (theta, u), with the layout the
// auxiliary block must carry.
class LoglikFn {
 public:
  virtual ~LoglikFn() = default;
  virtual const AuxLayout& layout() const = 0;
  virtual LoglikEstimate operator()(const Eigen::VectorXd& theta,
                                    const AuxBlock& u) const = 0;
};

std::unique_ptr<LoglikFn> make_is_loglik_fn(const REModel& model, const Eigen::MatrixXd& y,
                                            std::size_t N);
std::unique_ptr<LoglikFn> make_pf_loglik_fn(const StateSpaceModel& model,
                                            const Eigen::MatrixXd& y, PFEstimator est);

ChainState init_chain(const Model& model, const LoglikFn& loglik,
                      const Eigen::VectorXd& theta0, const RngStream& chain_stream);
ChainState init_chain_exact(const Model& model, const Eigen::MatrixXd& y,
                            const Eigen::VectorXd& theta0);

// One correlated pseudo-marginal step; state is updated in place on accept.
TraceRecord cpm_step(ChainState& state, const Model& model, const LoglikFn& loglik,
                     const KernelConfig& config, const RngStream& chain_stream,
                     std::size_t iter);
// Fresh-auxiliary special case (correlation forced to zero); bit-identical to
// cpm_step with corr.rho == 0.
TraceRecord pm_step(ChainState& state, const Model& model, const LoglikFn& loglik,
                    const KernelConfig& config, const RngStream& chain_stream,
                    std::size_t iter);
TraceRecord mh_exact_step(ChainState& state, const Model& model, const Eigen::MatrixXd& y,
                          const KernelConfig& config, const RngStream& chain_stream,
                          std::size_t iter);

struct ChainResult {
  Eigen::MatrixXd thetas;           // post-burn-in draws, n_iters x dim
  std::vector<double> log_ests;     // post-burn-in
  double acc_rate = 0.0;            // post-burn-in
};

using TraceSink = std::function<void(const TraceRecord&)>;

ChainResult run_chain_cpm(ChainState& state, const Model& model, const LoglikFn& loglik,
                          const KernelConfig& config, const RngStream& chain_stream,
                          const TraceSink& sink = {});
ChainResult run_chain_exact(ChainState& state, const Model& model, const Eigen::MatrixXd& y,
                            const KernelConfig& config, const RngStream& chain_stream,
                            const TraceSink& sink = {});

}  // namespace cpm
