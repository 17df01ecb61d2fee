#include "cpm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cpm/estimators.hpp"

namespace cpm {
namespace {

constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

double series_mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double series_var(const std::vector<double>& x) {
  const double m = series_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// biased autocovariance at lag k, precomputed mean
double autocov(const std::vector<double>& x, double mean, std::size_t k) {
  const std::size_t n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + k < n; ++i) s += (x[i] - mean) * (x[i + k] - mean);
  return s / static_cast<double>(n);
}

// Runs the auxiliary-only chain at fixed theta: correlated proposals on the
// block, accept on the estimate ratio. observe(u_post, z_pre, w, accepted)
// fires once per post-burn-in iteration; degenerate proposals count as
// rejections with w = -inf.
template <class Observer>
double run_u_chain(const LoglikFn& loglik, const Eigen::VectorXd& theta, double rho,
                   std::size_t n, std::size_t burn_in, const RngStream& stream,
                   Observer&& observe) {
  const AuxLayout& L = loglik.layout();
  AuxBlock u = sample_fresh(L, stream.sub(tag_init));
  double z = loglik(theta, u).value;
  AuxBlock u_prop{L, std::vector<double>(L.M())};
  std::size_t accepted = 0;
  const std::size_t total = burn_in + n;
  for (std::size_t it = 0; it < total; ++it) {
    cn_step(u, rho, stream.sub(tag_cn).at(it), u_prop);
    double w = NEG_INF;
    bool ok = true;
    try {
      w = loglik(theta, u_prop).value;
    } catch (const degenerate_estimate&) {
      ok = false;
    }
    bool acc = false;
    if (ok) {
      const double ug = stream.sub(tag_accept).at(it).u01(0);
      acc = std::log(ug) < w - z;
    }
    const double z_pre = z;
    if (acc) {
      u.u.swap(u_prop.u);
      z = w;
    }
    if (it >= burn_in) {
      accepted += acc ? 1 : 0;
      observe(u, z_pre, w, acc);
    }
  }
  return static_cast<double>(accepted) / static_cast<double>(n);
}

MomentCheck identity_check(const std::vector<double>& x, double sign) {
  const std::size_t n = x.size();
  const double mean = series_mean(x);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = x[i] + sign * 0.5 * (x[i] - mean) * (x[i] - mean);
  const double value = series_mean(g);

  const auto B = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  const std::size_t m = n / B;
  double bs = 0.0, bss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    double s = 0.0;
    for (std::size_t i = b * m; i < (b + 1) * m; ++i) s += g[i];
    s /= static_cast<double>(m);
    bs += s;
    bss += s * s;
  }
  const double bmean = bs / static_cast<double>(B);
  const double bvar = (bss / static_cast<double>(B) - bmean * bmean) /
                      static_cast<double>(B - 1) * static_cast<double>(B);
  MomentCheck c;
  c.value = value;
  c.stderr_ = std::sqrt(std::max(bvar / static_cast<double>(B), 0.0));
  c.zscore = c.stderr_ > 0.0 ? c.value / c.stderr_ : 0.0;
  c.flagged = std::fabs(c.zscore) > 3.0;
  return c;
}

}  // namespace

double iact(const std::vector<double>& series, CutoffRule rule) {
  const std::size_t n = series.size();
  if (n < 100) throw std::invalid_argument("IACT needs at least 100 points");
  const double mean = series_mean(series);
  const double g0 = autocov(series, mean, 0);
  if (!(g0 > 0.0) || !std::isfinite(g0)) {
    throw std::domain_error("IACT undefined for a constant series");
  }
  const std::size_t cap = n / 3;
  if (rule == CutoffRule::initial_positive) {
    double tau = -1.0;
    for (std::size_t m = 0;; ++m) {
      const std::size_t k0 = 2 * m, k1 = 2 * m + 1;
      if (k1 > cap) break;
      const double pair =
          (k0 == 0 ? g0 : autocov(series, mean, k0)) + autocov(series, mean, k1);
      if (pair <= 0.0) break;
      tau += 2.0 * pair / g0;
    }
    return tau;
  }
  const double floor_corr = 2.0 / std::sqrt(static_cast<double>(n));
  double sum = 0.0;
  for (std::size_t k = 1; k <= cap; ++k) {
    const double rk = autocov(series, mean, k) / g0;
    if (rk < floor_corr) break;
    sum += rk;
  }
  return 1.0 + 2.0 * sum;
}

ErrorSamples loglik_error_samples(const LoglikFn& loglik, const Eigen::VectorXd& theta,
                                  double log_p_exact, ErrorMode mode, double rho,
                                  std::size_t n, std::size_t burn_in,
                                  const RngStream& stream) {
  ErrorSamples out;
  out.z.reserve(n);
  out.w.reserve(n);
  out.r.reserve(n);
  if (mode == ErrorMode::proposal_m) {
    const AuxLayout& L = loglik.layout();
    std::size_t rep = 0;
    while (out.z.size() < n && rep < 2 * n + 100) {
      RngStream sr = stream.sub(rep++);
      try {
        AuxBlock u = sample_fresh(L, sr.sub(tag_init));
        const double z = loglik(theta, u).value - log_p_exact;
        AuxBlock uc = cn_step(u, rho, sr.sub(tag_cn));
        const double w = loglik(theta, uc).value - log_p_exact;
        out.z.push_back(z);
        out.w.push_back(w);
        out.r.push_back(w - z);
      } catch (const degenerate_estimate&) {
      }
    }
    return out;
  }
  out.acc_rate = run_u_chain(loglik, theta, rho, n, burn_in, stream,
                             [&](const AuxBlock&, double z_pre, double w, bool) {
                               if (!std::isfinite(w)) return;
                               out.z.push_back(z_pre - log_p_exact);
                               out.w.push_back(w - log_p_exact);
                               out.r.push_back(w - z_pre);
                             });
  return out;
}

MomentReport clt_moment_checks(const std::vector<double>& z, const std::vector<double>& r,
                               ErrorMode z_mode) {
  if (z.size() < 1000 || r.size() < 1000) {
    throw std::invalid_argument("moment checks need at least 1000 samples");
  }
  MomentReport rep;
  rep.z_check = identity_check(z, z_mode == ErrorMode::proposal_m ? 1.0 : -1.0);
  // a fresh proposal pair is exchangeable, so R is centred with no curvature term
  rep.r_check = identity_check(r, z_mode == ErrorMode::proposal_m ? 0.0 : 1.0);
  rep.var_z = series_var(z);
  rep.var_r = series_var(r);
  return rep;
}

ScoreError score_error(const REModel& model, const Eigen::VectorXd& theta_hat,
                       const Eigen::MatrixXd& y, const AuxBlock& u) {
  const auto* re = dynamic_cast<const GaussianREModel*>(&model);
  if (re == nullptr) throw std::logic_error("model lacks an analytic score pair");
  ScoreError err;
  err.psi.resize(1);
  err.psi[0] = re->is_score(theta_hat, y, u) - re->exact_score(theta_hat, y);
  return err;
}

SlowFast slow_fast_decompose(const std::vector<double>& theta_trace,
                             const std::vector<double>& psi_trace, double theta_hat,
                             double sigma_bar, std::size_t T) {
  if (theta_trace.size() != psi_trace.size()) {
    throw std::invalid_argument("trace lengths differ");
  }
  const double scale = sigma_bar / static_cast<double>(T);
  SlowFast sf;
  sf.f_hat.resize(theta_trace.size());
  sf.g_hat.resize(theta_trace.size());
  for (std::size_t i = 0; i < theta_trace.size(); ++i) {
    sf.f_hat[i] = theta_hat + scale * psi_trace[i];
    sf.g_hat[i] = theta_trace[i] - sf.f_hat[i];
  }
  return sf;
}

std::vector<ScoreIfPoint> score_if_vs_delta(const GaussianREModel& model,
                                            const Eigen::MatrixXd& y, double theta_hat,
                                            const std::vector<double>& psi_rates,
                                            const std::vector<std::size_t>& particle_counts,
                                            std::size_t n_iters, std::size_t burn_in,
                                            const RngStream& stream) {
  const auto T = static_cast<std::size_t>(y.rows());
  Eigen::VectorXd theta(1);
  theta << theta_hat;
  const double exact_sc = model.exact_score(theta, y);

  std::vector<ScoreIfPoint> out;
  std::uint64_t point = 0;
  for (double psi : psi_rates) {
    for (std::size_t N : particle_counts) {
      ScoreIfPoint pt;
      pt.psi_rate = psi;
      pt.N = N;
      pt.delta = psi * static_cast<double>(N) / static_cast<double>(T);
      pt.rho = std::exp(-pt.delta);
      auto fn = make_is_loglik_fn(model, y, N);
      std::vector<double> score_trace, r_samples;
      score_trace.reserve(n_iters);
      pt.acc_rate = run_u_chain(
          *fn, theta, pt.rho, n_iters, burn_in, stream.sub(point++),
          [&](const AuxBlock& u, double z_pre, double w, bool) {
            score_trace.push_back(model.is_score(theta, y, u) - exact_sc);
            if (std::isfinite(w)) r_samples.push_back(w - z_pre);
          });
      pt.if_score = iact(score_trace);
      pt.kappa_sq = r_samples.size() > 1 ? series_var(r_samples) : 0.0;
      const double denom = pt.delta * pt.acc_rate;
      pt.lower = denom > 0.0 ? 1.0 / denom : std::numeric_limits<double>::infinity();
      pt.upper = denom > 0.0 ? 2.0 / denom : std::numeric_limits<double>::infinity();
      out.push_back(std::move(pt));
    }
  }
  return out;
}

}  // namespace cpm
