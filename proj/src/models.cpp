#include "cpm/models.hpp"

#include <boost/math/distributions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "cpm/kalman.hpp"
#include "cpm/kernels.hpp"

namespace cpm {
namespace {

constexpr double LOG_2PI = 1.8378770664093454836;
constexpr double NEG_INF = -std::numeric_limits<double>::infinity();

double norm_cdf(double z) { return 0.5 * std::erfc(-z * (std::numbers::sqrt2 / 2.0)); }

double lognormal_logpdf(double x, double mu, double sd) {
  if (!(x > 0.0)) return NEG_INF;
  const double lx = std::log(x);
  const double d = (lx - mu) / sd;
  return -lx - std::log(sd) - 0.5 * LOG_2PI - 0.5 * d * d;
}

// keeps the log-variance path away from overflow so weights stay finite
double clamp_logvar(double x) { return std::min(std::max(x, -60.0), 60.0); }

}  // namespace

double Model::exact_loglik(const Eigen::VectorXd&, const Eigen::MatrixXd&) const {
  throw std::logic_error("model has no exact likelihood");
}

Eigen::VectorXd rw_propose(const Eigen::VectorXd& theta, const Eigen::MatrixXd& step_chol,
                           const RngStream& stream) {
  Eigen::VectorXd z(theta.size());
  stream.fill_normal(z.data(), static_cast<std::size_t>(z.size()));
  return theta + step_chol * z;
}

// --- GaussianREModel --------------------------------------------------------

Eigen::MatrixXd GaussianREModel::simulate(const Eigen::VectorXd& theta, std::size_t T,
                                          const RngStream& stream) const {
  Eigen::MatrixXd y(T, 1);
  std::vector<double> z(T);
  stream.fill_normal(z.data(), T);
  const double sd = std::numbers::sqrt2;
  for (std::size_t t = 0; t < T; ++t) y(static_cast<Eigen::Index>(t), 0) = theta[0] + sd * z[t];
  return y;
}

double GaussianREModel::prior_logdensity(const Eigen::VectorXd& theta) const {
  const double s2 = prior_sd_ * prior_sd_;
  return -0.5 * (LOG_2PI + std::log(s2)) - 0.5 * theta[0] * theta[0] / s2;
}

double GaussianREModel::exact_loglik(const Eigen::VectorXd& theta,
                                     const Eigen::MatrixXd& y) const {
  const double c = -0.5 * (LOG_2PI + std::log(2.0));
  double ll = 0.0;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    const double d = y(t, 0) - theta[0];
    ll += c - 0.25 * d * d;
  }
  return ll;
}

void GaussianREModel::is_logweights(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                                    std::size_t t, const double* u_panel, std::size_t N,
                                    double* lw) const {
  const double c = -0.5 * LOG_2PI;
  const double r = y(static_cast<Eigen::Index>(t), 0) - theta[0];
  for (std::size_t i = 0; i < N; ++i) {
    const double d = r - u_panel[i];
    lw[i] = c - 0.5 * d * d;
  }
}

double GaussianREModel::is_score(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                                 const AuxBlock& u) const {
  const AuxLayout& L = u.layout;
  double total = 0.0;
  for (std::size_t t = 0; t < L.T; ++t) {
    const double* up = u.panel(t);
    const double r = y(static_cast<Eigen::Index>(t), 0) - theta[0];
    double m = 0.0;
    for (std::size_t i = 0; i < L.N; ++i) {
      const double d = r - up[i];
      const double lw = -0.5 * d * d;
      if (i == 0 || lw > m) m = lw;
    }
    double sw = 0.0, swd = 0.0;
    for (std::size_t i = 0; i < L.N; ++i) {
      const double d = r - up[i];
      const double w = std::exp(-0.5 * d * d - m);
      sw += w;
      swd += w * d;
    }
    total += swd / sw;
  }
  return total;
}

double GaussianREModel::exact_score(const Eigen::VectorXd& theta,
                                    const Eigen::MatrixXd& y) const {
  double s = 0.0;
  for (Eigen::Index t = 0; t < y.rows(); ++t) s += 0.5 * (y(t, 0) - theta[0]);
  return s;
}

// --- LinearGaussianSSM ------------------------------------------------------

Eigen::MatrixXd LinearGaussianSSM::transition_matrix(double theta) const {
  const std::size_t k = k_;
  std::vector<double> pw(k + 1);
  pw[0] = 1.0;
  for (std::size_t m = 1; m <= k; ++m) pw[m] = pw[m - 1] * theta;
  Eigen::MatrixXd A(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t d = i > j ? i - j : j - i;
      A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pw[d] * theta;
    }
  }
  return A;
}

Eigen::MatrixXd LinearGaussianSSM::simulate(const Eigen::VectorXd& theta, std::size_t T,
                                            const RngStream& stream) const {
  const Eigen::MatrixXd A = transition_matrix(theta[0]);
  const auto k = static_cast<Eigen::Index>(k_);
  Eigen::MatrixXd y(T, k);
  Eigen::VectorXd x(k);
  std::vector<double> buf(k_);
  std::uint64_t idx = 0;
  stream.fill_normal(x.data(), k_, idx);
  idx += k_;
  for (std::size_t t = 0; t < T; ++t) {
    stream.fill_normal(buf.data(), k_, idx);
    idx += k_;
    for (Eigen::Index c = 0; c < k; ++c) y(static_cast<Eigen::Index>(t), c) = x[c] + buf[static_cast<std::size_t>(c)];
    stream.fill_normal(buf.data(), k_, idx);
    idx += k_;
    x = (A * x).eval();
    for (Eigen::Index c = 0; c < k; ++c) x[c] += buf[static_cast<std::size_t>(c)];
  }
  return y;
}

double LinearGaussianSSM::prior_logdensity(const Eigen::VectorXd& theta) const {
  return std::abs(theta[0]) < 1.0 ? -std::log(2.0) : NEG_INF;
}

double LinearGaussianSSM::exact_loglik(const Eigen::VectorXd& theta,
                                       const Eigen::MatrixXd& y) const {
  return kalman_loglik(transition_matrix(theta[0]), y);
}

void LinearGaussianSSM::init_particles(const Eigen::VectorXd&, const Eigen::MatrixXd& y,
                                       const double* u_panel, std::size_t N, double* states,
                                       double* lw) const {
  const std::size_t k = k_;
  const double c0 = -0.5 * static_cast<double>(k) * LOG_2PI;
  for (std::size_t i = 0; i < N; ++i) {
    const double* u = u_panel + i * k;
    double ss = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      states[i * k + c] = u[c];
      const double d = y(0, static_cast<Eigen::Index>(c)) - u[c];
      ss += d * d;
    }
    lw[i] = c0 - 0.5 * ss;
  }
}

void LinearGaussianSSM::propagate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                                  std::size_t t_next, const double* u_panel,
                                  const std::size_t* parent, const double* states_in,
                                  std::size_t N, double* states_out, double* lw) const {
  const std::size_t k = k_;
  const Eigen::MatrixXd A = transition_matrix(theta[0]);
  const double c0 = -0.5 * static_cast<double>(k) * LOG_2PI;
  const auto ty = static_cast<Eigen::Index>(t_next);
  for (std::size_t i = 0; i < N; ++i) {
    const double* xp = states_in + parent[i] * k;
    const double* u = u_panel + i * k;
    double ss = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        s += A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * xp[c];
      }
      s += u[r];
      states_out[i * k + r] = s;
      const double d = y(ty, static_cast<Eigen::Index>(r)) - s;
      ss += d * d;
    }
    lw[i] = c0 - 0.5 * ss;
  }
}

Eigen::MatrixXd LinearGaussianSSM::pilot_states(const Eigen::VectorXd& theta,
                                                std::size_t n_draws,
                                                const RngStream& stream) const {
  const Eigen::MatrixXd A = transition_matrix(theta[0]);
  const auto k = static_cast<Eigen::Index>(k_);
  Eigen::MatrixXd out(n_draws, k);
  Eigen::VectorXd x(k);
  std::vector<double> buf(k_);
  std::uint64_t idx = 0;
  stream.fill_normal(x.data(), k_, idx);
  idx += k_;
  for (std::size_t d = 0; d < n_draws; ++d) {
    out.row(static_cast<Eigen::Index>(d)) = x.transpose();
    stream.fill_normal(buf.data(), k_, idx);
    idx += k_;
    x = (A * x).eval();
    for (Eigen::Index c = 0; c < k; ++c) x[c] += buf[static_cast<std::size_t>(c)];
  }
  return out;
}

// --- HestonEulerModel -------------------------------------------------------

namespace {

struct HestonTheta {
  double mu, up, om, chi;
  bool valid;
};

HestonTheta unpack_heston(const Eigen::VectorXd& theta) {
  HestonTheta h{theta[0], theta[1], theta[2], theta[3], true};
  h.valid = h.mu > 0.0 && h.up > 0.0 && h.om > 0.0 && std::abs(h.chi) < 1.0;
  return h;
}

// One observation interval for a block of particles. x holds the entry
// log-variance per particle and is updated in place to the exit value; lw
// receives the observation log-weights.
void heston_interval(const HestonTheta& th, std::size_t I, double y_t,
                     const double* u_panel, std::size_t p, std::size_t N, double* x,
                     double* lw) {
  thread_local std::vector<double> neg, en, sig2, gam, var, logvar;
  neg.resize(N);
  en.resize(N);
  sig2.assign(N, 0.0);
  gam.assign(N, 0.0);
  var.resize(N);
  logvar.resize(N);
  const double eps = 1.0 / static_cast<double>(I);
  const double sqrte = std::sqrt(eps);
  const double half_om2 = 0.5 * th.om * th.om;
  for (std::size_t sub = 0; sub < I; ++sub) {
    for (std::size_t i = 0; i < N; ++i) neg[i] = -x[i];
    kern::exp_batch(en.data(), neg.data(), N);
    if (sub >= 1) {
      for (std::size_t i = 0; i < N; ++i) sig2[i] += 1.0 / en[i];
    }
    for (std::size_t i = 0; i < N; ++i) {
      const double e = en[i];
      const double root = std::sqrt(e);
      const double eta = u_panel[i * p + 1 + sub];
      gam[i] += eta / root;
      const double xn = x[i] + eps * (th.up * (th.mu * e - 1.0) - half_om2 * e) +
                        sqrte * th.om * root * eta;
      x[i] = clamp_logvar(xn);
    }
  }
  for (std::size_t i = 0; i < N; ++i) neg[i] = -x[i];
  kern::exp_batch(en.data(), neg.data(), N);
  for (std::size_t i = 0; i < N; ++i) {
    sig2[i] += 1.0 / en[i];
    var[i] = (1.0 - th.chi * th.chi) * (eps * sig2[i]);
  }
  kern::log_batch(logvar.data(), var.data(), N);
  for (std::size_t i = 0; i < N; ++i) {
    const double d = y_t - th.chi * (sqrte * gam[i]);
    lw[i] = -0.5 * (LOG_2PI + logvar[i]) - 0.5 * d * d / var[i];
  }
}

}  // namespace

double HestonEulerModel::stationary_log_variance(const Eigen::VectorXd& theta, double z) const {
  const HestonTheta th = unpack_heston(theta);
  if (!th.valid) throw std::invalid_argument("invalid volatility parameters");
  boost::math::gamma_distribution<double> g(2.0 * th.mu * th.up / (th.om * th.om),
                                            th.om * th.om / (2.0 * th.up));
  return clamp_logvar(std::log(boost::math::quantile(g, norm_cdf(z))));
}

Eigen::MatrixXd HestonEulerModel::simulate(const Eigen::VectorXd& theta, std::size_t T,
                                           const RngStream& stream) const {
  const HestonTheta th = unpack_heston(theta);
  if (!th.valid) throw std::invalid_argument("invalid volatility parameters");
  const std::size_t I = substeps_;
  const double eps = 1.0 / static_cast<double>(I);
  const double sqrte = std::sqrt(eps);
  const double half_om2 = 0.5 * th.om * th.om;
  Eigen::MatrixXd y(T, 1);
  double x = stationary_log_variance(theta, stream.normal(0));
  std::uint64_t idx = 1;
  for (std::size_t s = 0; s < T; ++s) {
    double sig2 = 0.0, gam = 0.0;
    for (std::size_t sub = 0; sub < I; ++sub) {
      const double e = kern::exp1(-x);
      if (sub >= 1) sig2 += 1.0 / e;
      const double root = std::sqrt(e);
      const double eta = stream.normal(idx++);
      gam += eta / root;
      x = clamp_logvar(x + eps * (th.up * (th.mu * e - 1.0) - half_om2 * e) +
                       sqrte * th.om * root * eta);
    }
    sig2 += 1.0 / kern::exp1(-x);
    sig2 *= eps;
    gam *= sqrte;
    const double z = stream.normal(idx++);
    y(static_cast<Eigen::Index>(s), 0) =
        th.chi * gam + std::sqrt((1.0 - th.chi * th.chi) * sig2) * z;
  }
  return y;
}

double HestonEulerModel::prior_logdensity(const Eigen::VectorXd& theta) const {
  const double chi = theta[3];
  double lp = lognormal_logpdf(theta[0], 0.0, 1.5);
  lp += lognormal_logpdf(theta[1], -3.0, 1.5);
  lp += lognormal_logpdf(theta[2], -2.0, 1.0);
  lp += std::abs(chi) < 1.0 ? -std::log(2.0) : NEG_INF;
  return lp;
}

void HestonEulerModel::init_particles(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                                      const double* u_panel, std::size_t N, double* states,
                                      double* lw) const {
  const HestonTheta th = unpack_heston(theta);
  if (!th.valid) {
    std::fill(lw, lw + N, NEG_INF);
    std::fill(states, states + N, 0.0);
    return;
  }
  const std::size_t p = substeps_ + 1;
  boost::math::gamma_distribution<double> g(2.0 * th.mu * th.up / (th.om * th.om),
                                            th.om * th.om / (2.0 * th.up));
  for (std::size_t i = 0; i < N; ++i) {
    states[i] = clamp_logvar(std::log(boost::math::quantile(g, norm_cdf(u_panel[i * p]))));
  }
  heston_interval(th, substeps_, y(0, 0), u_panel, p, N, states, lw);
}

void HestonEulerModel::propagate(const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                                 std::size_t t_next, const double* u_panel,
                                 const std::size_t* parent, const double* states_in,
                                 std::size_t N, double* states_out, double* lw) const {
  const HestonTheta th = unpack_heston(theta);
  if (!th.valid) {
    std::fill(lw, lw + N, NEG_INF);
    std::fill(states_out, states_out + N, 0.0);
    return;
  }
  const std::size_t p = substeps_ + 1;
  for (std::size_t i = 0; i < N; ++i) states_out[i] = states_in[parent[i]];
  heston_interval(th, substeps_, y(static_cast<Eigen::Index>(t_next), 0), u_panel, p, N,
                  states_out, lw);
}

Eigen::MatrixXd HestonEulerModel::pilot_states(const Eigen::VectorXd& theta,
                                               std::size_t n_draws,
                                               const RngStream& stream) const {
  const HestonTheta th = unpack_heston(theta);
  if (!th.valid) throw std::invalid_argument("invalid volatility parameters");
  const std::size_t I = substeps_;
  const double eps = 1.0 / static_cast<double>(I);
  const double sqrte = std::sqrt(eps);
  const double half_om2 = 0.5 * th.om * th.om;
  Eigen::MatrixXd out(n_draws, 1);
  double x = stationary_log_variance(theta, stream.normal(0));
  std::uint64_t idx = 1;
  for (std::size_t d = 0; d < n_draws; ++d) {
    for (std::size_t sub = 0; sub < I; ++sub) {
      const double e = kern::exp1(-x);
      const double root = std::sqrt(e);
      const double eta = stream.normal(idx++);
      x = clamp_logvar(x + eps * (th.up * (th.mu * e - 1.0) - half_om2 * e) +
                       sqrte * th.om * root * eta);
    }
    out(static_cast<Eigen::Index>(d), 0) = x;
  }
  return out;
}

}  // namespace cpm
