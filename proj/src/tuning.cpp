#include "cpm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cpm/diagnostics.hpp"
#include "cpm/estimators.hpp"

namespace cpm {
namespace {

double series_var(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  m /= static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

// log posterior for exact-likelihood models
double log_post(const Model& model, const Eigen::MatrixXd& y, double th) {
  Eigen::VectorXd t(1);
  t << th;
  const double lp = model.prior_logdensity(t);
  if (!std::isfinite(lp)) return -std::numeric_limits<double>::infinity();
  return lp + model.exact_loglik(t, y);
}

}  // namespace

std::size_t ScalingPlan::N() const {
  const double raw = beta * std::pow(static_cast<double>(T), alpha);
  const auto n = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::max<std::size_t>(n, 1);
}

double ScalingPlan::delta() const {
  return psi * static_cast<double>(N()) / static_cast<double>(T);
}

double ScalingPlan::rho() const { return std::exp(-delta()); }

std::unique_ptr<LoglikFn> make_loglik_for(const Model& model, const Eigen::MatrixXd& y,
                                          std::size_t N, const Eigen::VectorXd& theta_pilot,
                                          const RngStream& pilot_stream) {
  if (const auto* re = dynamic_cast<const REModel*>(&model)) {
    return make_is_loglik_fn(*re, y, N);
  }
  if (const auto* ssm = dynamic_cast<const StateSpaceModel*>(&model)) {
    auto est = PFEstimator::with_pilot(*ssm, theta_pilot, N, pilot_stream);
    return make_pf_loglik_fn(*ssm, y, std::move(est));
  }
  throw std::invalid_argument("model has no likelihood estimator");
}

CenterEstimate fit_center(const Model& model, const Eigen::MatrixXd& y,
                          const Eigen::VectorXd& theta0, std::size_t N_pilot,
                          const RngStream& stream) {
  const auto T = static_cast<double>(y.rows());
  CenterEstimate est;

  if (const auto* re = dynamic_cast<const GaussianREModel*>(&model)) {
    const double v = 1.0 / (T / 2.0 + 1.0 / (re->prior_sd() * re->prior_sd()));
    est.theta_hat.resize(1);
    est.theta_hat << v * y.col(0).sum() / 2.0;
    est.sigma_bar = Eigen::MatrixXd::Constant(1, 1, T * v);
    return est;
  }

  if (model.has_exact_loglik() && model.dim() == 1) {
    // coarse admissible grid, then golden-section refinement
    const int n_grid = 81;
    double best = 0.0, best_val = -std::numeric_limits<double>::infinity();
    double step = 0.0;
    for (int i = 0; i < n_grid; ++i) {
      const double th = -0.999 + 1.998 * static_cast<double>(i) / (n_grid - 1);
      if (i == 1) step = th + 0.999;
      const double val = log_post(model, y, th);
      if (val > best_val) {
        best_val = val;
        best = th;
      }
    }
    if (!std::isfinite(best_val)) throw std::invalid_argument("no admissible centre found");
    constexpr double inv_phi = 0.6180339887498949;
    double a = best - step, b = best + step;
    double c = b - inv_phi * (b - a), d = a + inv_phi * (b - a);
    double fc = log_post(model, y, c), fd = log_post(model, y, d);
    while (b - a > 1e-7) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = log_post(model, y, c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = log_post(model, y, d);
      }
    }
    const double mode = 0.5 * (a + b);
    const double h = 1e-4;
    const double d2 = (log_post(model, y, mode + h) - 2.0 * log_post(model, y, mode) +
                       log_post(model, y, mode - h)) /
                      (h * h);
    const double var = d2 < 0.0 ? -1.0 / d2 : 0.01;
    est.theta_hat.resize(1);
    est.theta_hat << mode;
    est.sigma_bar = Eigen::MatrixXd::Constant(1, 1, T * var);
    return est;
  }

  // short pilot chain started at theta0
  const auto dim = static_cast<Eigen::Index>(model.dim());
  if (theta0.size() != dim) throw std::invalid_argument("pilot start has the wrong dimension");
  auto fn = make_loglik_for(model, y, N_pilot, theta0, stream.sub(5));
  KernelConfig cfg;
  Eigen::VectorXd sd = (0.05 * theta0.array().abs() + 0.02).matrix();
  cfg.step_cov = sd.array().square().matrix().asDiagonal();
  cfg.corr.rho = std::exp(-0.5 * static_cast<double>(N_pilot) / T);
  cfg.burn_in = 600;
  cfg.n_iters = 3000;
  ChainState state = init_chain(model, *fn, theta0, stream);
  const ChainResult res = run_chain_cpm(state, model, *fn, cfg, stream);
  est.theta_hat = res.thetas.colwise().mean();
  Eigen::MatrixXd centered = res.thetas.rowwise() - est.theta_hat.transpose();
  Eigen::MatrixXd cov = centered.transpose() * centered /
                        static_cast<double>(res.thetas.rows() - 1);
  cov.diagonal().array() += 1e-10;
  est.sigma_bar = T * cov;
  return est;
}

double measure_kappa_sq(const LoglikFn& loglik, const Eigen::VectorXd& theta_hat, double rho,
                        std::size_t n_samples, std::size_t burn_in, const RngStream& stream) {
  const ErrorSamples es = loglik_error_samples(loglik, theta_hat, 0.0, ErrorMode::stationary,
                                               rho, n_samples, burn_in, stream);
  if (es.r.size() < 2) throw std::domain_error("no usable stationary increments");
  return series_var(es.r);
}

double calibrate_psi(const Model& model, const Eigen::MatrixXd& y, const ScalingPlan& plan,
                     const RngStream& stream, double target_kappa, double tol,
                     std::size_t n_samples) {
  if (plan.theta_hat.size() == 0) throw std::invalid_argument("plan lacks a fitted centre");
  const std::size_t N = plan.N();
  const auto T = static_cast<double>(plan.T);
  auto fn = make_loglik_for(model, y, N, plan.theta_hat, stream.sub(9));
  // common random numbers across evaluations keep the map monotone in psi
  const auto kappa_at = [&](double psi) {
    const double delta = psi * static_cast<double>(N) / T;
    const double rho = std::exp(-delta);
    const auto burn = static_cast<std::size_t>(
        std::clamp(3.0 / std::max(delta, 0.01), 200.0, 2000.0));
    return std::sqrt(
        measure_kappa_sq(*fn, plan.theta_hat, rho, n_samples, burn, stream.sub(7)));
  };

  double lo = 1e-4, hi = 1e2;
  const double k_lo = kappa_at(lo);
  if (std::fabs(k_lo - target_kappa) <= tol) return lo;
  if (k_lo > target_kappa) {
    throw std::range_error("noise scale exceeds the target at the smallest psi");
  }
  const double k_hi = kappa_at(hi);
  if (std::fabs(k_hi - target_kappa) <= tol) return hi;
  if (k_hi < target_kappa) {
    throw std::range_error("noise scale cannot reach the target at the largest psi");
  }
  for (int it = 0; it < 40; ++it) {
    const double mid = std::sqrt(lo * hi);
    const double k = kappa_at(mid);
    if (std::fabs(k - target_kappa) <= tol) return mid;
    (k < target_kappa ? lo : hi) = mid;
  }
  throw std::range_error("failed to localize the target noise scale");
}

CTFit fit_ct_curve(const std::vector<double>& beta_grid, const std::vector<double>& ct) {
  const std::size_t n = beta_grid.size();
  if (n < 3 || ct.size() != n) {
    throw std::invalid_argument("need at least 3 matching grid points");
  }
  double a11 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(beta_grid[i] > 0.0) || !(ct[i] > 0.0)) {
      throw std::invalid_argument("grid and measurements must be positive");
    }
    const double ib = 1.0 / beta_grid[i];
    a11 += ib * ib;
    a22 += beta_grid[i] * beta_grid[i];
    b1 += ct[i] * ib;
    b2 += ct[i] * beta_grid[i];
  }
  const double a12 = static_cast<double>(n);
  const double det = a11 * a22 - a12 * a12;
  if (!(det > 1e-12 * a11 * a22)) throw std::invalid_argument("degenerate beta grid");

  CTFit fit;
  fit.c0 = (b1 * a22 - b2 * a12) / det;
  fit.c1 = (a11 * b2 - a12 * b1) / det;
  if (fit.c0 < 0.0) {
    fit.c0 = 0.0;
    fit.clamped = true;
  }
  if (fit.c1 < 0.0) {
    fit.c1 = 0.0;
    fit.clamped = true;
  }
  if (fit.c1 > 0.0) {
    fit.beta_hat = std::sqrt(fit.c0 / fit.c1);
  } else {
    fit.beta_hat = fit.c0 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ct[i] - fit.c0 / beta_grid[i] - fit.c1 * beta_grid[i];
    rss += r * r;
  }
  fit.residual_norm = std::sqrt(rss);
  return fit;
}

double measure_ct(const Model& model, const Eigen::MatrixXd& y, const ScalingPlan& plan,
                  const Monitor& h, std::size_t n_iters, std::size_t burn_in,
                  const RngStream& stream) {
  if (plan.theta_hat.size() == 0 || plan.sigma_bar.size() == 0) {
    throw std::invalid_argument("plan lacks a fitted centre");
  }
  const std::size_t N = plan.N();
  auto fn = make_loglik_for(model, y, N, plan.theta_hat, stream.sub(11));
  KernelConfig cfg;
  const auto d = static_cast<double>(model.dim());
  cfg.step_cov = (5.76 / d) * plan.sigma_bar / static_cast<double>(plan.T);
  cfg.corr.rho = plan.rho();
  ChainState state = init_chain(model, *fn, plan.theta_hat, stream);
  std::vector<double> trace;
  trace.reserve(n_iters);
  for (std::size_t it = 0; it < burn_in + n_iters; ++it) {
    cpm_step(state, model, *fn, cfg, stream, it);
    if (it >= burn_in) trace.push_back(h(state.theta));
  }
  return static_cast<double>(N) * iact(trace);
}

}  // namespace cpm
