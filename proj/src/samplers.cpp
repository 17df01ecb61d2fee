#include "cpm/samplers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

namespace cpm {
namespace {

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

class ISLoglikFn final : public LoglikFn {
 public:
  ISLoglikFn(const REModel& model, const Eigen::MatrixXd& y, std::size_t N)
      : model_(model), y_(y) {
    layout_ = ISEstimator{N}.layout(model, static_cast<std::size_t>(y.rows()));
  }
  const AuxLayout& layout() const override { return layout_; }
  LoglikEstimate operator()(const Eigen::VectorXd& theta, const AuxBlock& u) const override {
    return is_loglik(model_, theta, y_, u);
  }

 private:
  const REModel& model_;
  Eigen::MatrixXd y_;
  AuxLayout layout_;
};

class PFLoglikFn final : public LoglikFn {
 public:
  PFLoglikFn(const StateSpaceModel& model, const Eigen::MatrixXd& y, PFEstimator est)
      : model_(model), y_(y), est_(std::move(est)) {
    layout_ = est_.layout(model, static_cast<std::size_t>(y.rows()));
  }
  const AuxLayout& layout() const override { return layout_; }
  LoglikEstimate operator()(const Eigen::VectorXd& theta, const AuxBlock& u) const override {
    return pf_loglik(model_, est_, theta, y_, u);
  }

 private:
  const StateSpaceModel& model_;
  Eigen::MatrixXd y_;
  PFEstimator est_;
  AuxLayout layout_;
};

Eigen::VectorXd propose_theta(const Eigen::VectorXd& theta, const KernelConfig& config,
                              const RngStream& stream) {
  Eigen::LLT<Eigen::MatrixXd> llt(config.step_cov);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("step covariance not SPD");
  const Eigen::MatrixXd L = llt.matrixL();
  if (config.proposal == ProposalKind::random_walk) {
    return rw_propose(theta, L, stream);
  }
  const Eigen::VectorXd mean =
      config.ar_center + config.ar_coeff * (theta - config.ar_center);
  return rw_propose(mean, L, stream);
}

// log q(theta | prop) - log q(prop | theta); nonzero only for the
// autoregressive proposal
double proposal_log_ratio(const Eigen::VectorXd& theta, const Eigen::VectorXd& prop,
                          const KernelConfig& config) {
  if (config.proposal == ProposalKind::random_walk) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt(config.step_cov);
  const Eigen::VectorXd r_back =
      theta - config.ar_center - config.ar_coeff * (prop - config.ar_center);
  const Eigen::VectorXd r_fwd =
      prop - config.ar_center - config.ar_coeff * (theta - config.ar_center);
  const double q_back = r_back.dot(llt.solve(r_back));
  const double q_fwd = r_fwd.dot(llt.solve(r_fwd));
  return -0.5 * (q_back - q_fwd);
}

TraceRecord estimated_step(ChainState& state, const Model& model, const LoglikFn& loglik,
                           const KernelConfig& config, double rho,
                           const RngStream& chain_stream, std::size_t iter) {
  TraceRecord rec;
  rec.iter = iter;
  rec.logp_cur = state.log_est + state.log_prior;

  const RngStream s_prop = chain_stream.sub(tag_proposal).at(iter);
  const Eigen::VectorXd prop = propose_theta(state.theta, config, s_prop);
  const double lp = model.prior_logdensity(prop);
  if (!std::isfinite(lp)) {
    rec.theta = state.theta;
    rec.accepted = false;
    rec.logp_prop = NEG_INF;
    return rec;
  }

  const RngStream s_cn = chain_stream.sub(tag_cn).at(iter);
  thread_local AuxBlock u_prop;  // reused across iterations to avoid realloc
  cn_step(state.u, rho, s_cn, u_prop);

  double est_value;
  try {
    est_value = loglik(prop, u_prop).value;
  } catch (const degenerate_estimate&) {
    rec.theta = state.theta;
    rec.accepted = false;
    rec.logp_prop = NEG_INF;
    return rec;
  }

  rec.logp_prop = est_value + lp;
  const double log_alpha =
      rec.logp_prop - rec.logp_cur + proposal_log_ratio(state.theta, prop, config);
  const double ug = chain_stream.sub(tag_accept).at(iter).u01(0);
  if (std::log(ug) < log_alpha) {
    state.theta = prop;
    state.u.layout = u_prop.layout;
    state.u.u.swap(u_prop.u);
    state.log_est = est_value;
    state.log_prior = lp;
    rec.accepted = true;
  }
  rec.theta = state.theta;
  return rec;
}

}  // namespace

std::unique_ptr<LoglikFn> make_is_loglik_fn(const REModel& model, const Eigen::MatrixXd& y,
                                            std::size_t N) {
  return std::make_unique<ISLoglikFn>(model, y, N);
}

std::unique_ptr<LoglikFn> make_pf_loglik_fn(const StateSpaceModel& model,
                                            const Eigen::MatrixXd& y, PFEstimator est) {
  return std::make_unique<PFLoglikFn>(model, y, std::move(est));
}

ChainState init_chain(const Model& model, const LoglikFn& loglik,
                      const Eigen::VectorXd& theta0, const RngStream& chain_stream) {
  ChainState st;
  st.theta = theta0;
  st.log_prior = model.prior_logdensity(theta0);
  if (!std::isfinite(st.log_prior)) throw std::invalid_argument("theta0 outside prior support");
  st.u = sample_fresh(loglik.layout(), chain_stream.sub(tag_init));
  st.log_est = loglik(theta0, st.u).value;
  return st;
}

ChainState init_chain_exact(const Model& model, const Eigen::MatrixXd& y,
                            const Eigen::VectorXd& theta0) {
  ChainState st;
  st.theta = theta0;
  st.log_prior = model.prior_logdensity(theta0);
  if (!std::isfinite(st.log_prior)) throw std::invalid_argument("theta0 outside prior support");
  st.log_est = model.exact_loglik(theta0, y);
  return st;
}

TraceRecord cpm_step(ChainState& state, const Model& model, const LoglikFn& loglik,
                     const KernelConfig& config, const RngStream& chain_stream,
                     std::size_t iter) {
  return estimated_step(state, model, loglik, config, config.corr.rho, chain_stream, iter);
}

TraceRecord pm_step(ChainState& state, const Model& model, const LoglikFn& loglik,
                    const KernelConfig& config, const RngStream& chain_stream,
                    std::size_t iter) {
  return estimated_step(state, model, loglik, config, 0.0, chain_stream, iter);
}

TraceRecord mh_exact_step(ChainState& state, const Model& model, const Eigen::MatrixXd& y,
                          const KernelConfig& config, const RngStream& chain_stream,
                          std::size_t iter) {
  TraceRecord rec;
  rec.iter = iter;
  rec.logp_cur = state.log_est + state.log_prior;

  const RngStream s_prop = chain_stream.sub(tag_proposal).at(iter);
  const Eigen::VectorXd prop = propose_theta(state.theta, config, s_prop);
  const double lp = model.prior_logdensity(prop);
  if (!std::isfinite(lp)) {
    rec.theta = state.theta;
    rec.accepted = false;
    rec.logp_prop = NEG_INF;
    return rec;
  }
  const double ll = model.exact_loglik(prop, y);
  rec.logp_prop = ll + lp;
  const double log_alpha =
      rec.logp_prop - rec.logp_cur + proposal_log_ratio(state.theta, prop, config);
  const double ug = chain_stream.sub(tag_accept).at(iter).u01(0);
  if (std::log(ug) < log_alpha) {
    state.theta = prop;
    state.log_est = ll;
    state.log_prior = lp;
    rec.accepted = true;
  }
  rec.theta = state.theta;
  return rec;
}

namespace {

template <class StepFn>
ChainResult run_loop(ChainState& state, const KernelConfig& config, StepFn&& step,
                     const TraceSink& sink) {
  const std::size_t total = config.burn_in + config.n_iters;
  ChainResult res;
  res.thetas.resize(static_cast<Eigen::Index>(config.n_iters), state.theta.size());
  res.log_ests.resize(config.n_iters);
  std::size_t accepted = 0;
  for (std::size_t iter = 0; iter < total; ++iter) {
    TraceRecord rec = step(iter);
    if (sink) sink(rec);
    if (iter >= config.burn_in) {
      const std::size_t j = iter - config.burn_in;
      res.thetas.row(static_cast<Eigen::Index>(j)) = state.theta.transpose();
      res.log_ests[j] = state.log_est;
      accepted += rec.accepted ? 1 : 0;
    }
  }
  res.acc_rate = config.n_iters ? static_cast<double>(accepted) / config.n_iters : 0.0;
  return res;
}

}  // namespace

ChainResult run_chain_cpm(ChainState& state, const Model& model, const LoglikFn& loglik,
                          const KernelConfig& config, const RngStream& chain_stream,
                          const TraceSink& sink) {
  return run_loop(state, config,
                  [&](std::size_t iter) {
                    return cpm_step(state, model, loglik, config, chain_stream, iter);
                  },
                  sink);
}

ChainResult run_chain_exact(ChainState& state, const Model& model, const Eigen::MatrixXd& y,
                            const KernelConfig& config, const RngStream& chain_stream,
                            const TraceSink& sink) {
  return run_loop(state, config,
                  [&](std::size_t iter) {
                    return mh_exact_step(state, model, y, config, chain_stream, iter);
                  },
                  sink);
}

}  // namespace cpm
