// Acceptance gate: eight end-to-end criteria, one verdict line each. Every
// stream is pinned, so a verdict is reproducible bit for bit. Run with the
// criterion number as the only argument, or no argument for all eight.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include <Eigen/Dense>

#include "cpm/diagnostics.hpp"
#include "cpm/estimators.hpp"
#include "cpm/models.hpp"
#include "cpm/samplers.hpp"
#include "cpm/theory.hpp"
#include "cpm/tuning.hpp"

using namespace cpm;
using clk = std::chrono::steady_clock;

namespace {

double elapsed(clk::time_point since) {
  return std::chrono::duration<double>(clk::now() - since).count();
}

double mean_of(const std::vector<double>& x) {
  double m = 0.0;
  for (double v : x) m += v;
  return m / static_cast<double>(x.size());
}

double var_of(const std::vector<double>& x) {
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / (static_cast<double>(x.size()) - 1.0);
}

std::vector<double> column_of(const Eigen::MatrixXd& m, Eigen::Index c) {
  std::vector<double> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)] = m(r, c);
  return out;
}

// conjugate posterior N(vb, v) for observations y_t ~ N(theta, 2), prior sd 100
void re_posterior(const Eigen::MatrixXd& y, double& post_mean, double& post_var) {
  const auto T = static_cast<double>(y.rows());
  post_var = 1.0 / (T / 2.0 + 1e-4);
  post_mean = post_var * y.col(0).sum() / 2.0;
}

// ---------------------------------------------------------------------------
// 1. Minimizers of the acceptance-ratio computing-time curve. The limit-case
// acceptance rate and relative inefficiency are asserted at their
// formula-consistent values 0.452 / 2.21; the printed 0.43 / 2.20 pair is
// incompatible with the printed kappa* = 1.50 and arct = 1.47.
bool criterion1() {
  const double k_if1 = theory::minimize_arct(theory::IfExact::finite(1.0));
  const double k_inf = theory::minimize_arct(theory::IfExact::limit());
  const double r1 = theory::rho_u(k_if1);
  const double rif1 = theory::rif_qstar(k_if1, theory::IfExact::finite(1.0));
  const double a1 = theory::arct(k_if1, theory::IfExact::finite(1.0));
  const double r2 = theory::rho_u(k_inf);
  const double rif2 = theory::rif_qstar(k_inf, theory::IfExact::limit());
  const double a2 = theory::arct(k_inf, theory::IfExact::limit());
  const bool ok = std::abs(k_if1 - 1.35) <= 0.01 && std::abs(r1 - 0.50) <= 0.01 &&
                  std::abs(rif1 - 2.99) <= 0.01 && std::abs(a1 - 1.81) <= 0.01 &&
                  std::abs(k_inf - 1.50) <= 0.01 && std::abs(r2 - 0.452) <= 0.01 &&
                  std::abs(rif2 - 2.21) <= 0.01 && std::abs(a2 - 1.47) <= 0.01;
  std::printf("criterion 1: %s  optima IF=1 (%.4f, %.4f, %.4f, %.4f) limit (%.4f, %.4f, %.4f, %.4f)\n",
              ok ? "PASS" : "FAIL", k_if1, r1, rif1, a1, k_inf, r2, rif2, a2);
  return ok;
}

// ---------------------------------------------------------------------------
// 2. Particle-filter unbiasedness against the Kalman oracle, with the oracle
// itself validated against the brute-force joint Gaussian density at T=4.
bool criterion2() {
  const auto t0 = clk::now();
  LinearGaussianSSM model(2);
  Eigen::VectorXd th(1);
  th << 0.4;

  // brute force: x1 ~ N(0,I), x_{t+1} = A x_t + N(0,I), y_t = x_t + N(0,I)
  const Eigen::MatrixXd y4 = model.simulate(th, 4, RngStream::root(11));
  const Eigen::MatrixXd A = model.transition_matrix(th[0]);
  const Eigen::Index k = A.rows(), Tb = 4;
  std::vector<Eigen::MatrixXd> P(static_cast<std::size_t>(Tb));
  P[0] = Eigen::MatrixXd::Identity(k, k);
  for (std::size_t t = 1; t < P.size(); ++t)
    P[t] = A * P[t - 1] * A.transpose() + Eigen::MatrixXd::Identity(k, k);
  Eigen::MatrixXd S(Tb * k, Tb * k);
  for (Eigen::Index t = 0; t < Tb; ++t)
    for (Eigen::Index s = 0; s < Tb; ++s) {
      Eigen::MatrixXd c = P[static_cast<std::size_t>(std::min(t, s))];
      for (Eigen::Index d = 0; d < std::abs(t - s); ++d) c = A * c;
      if (t < s) c = c.transpose().eval();
      if (t == s) c += Eigen::MatrixXd::Identity(k, k);
      S.block(t * k, s * k, k, k) = c;
    }
  Eigen::VectorXd yv(Tb * k);
  for (Eigen::Index t = 0; t < Tb; ++t) yv.segment(t * k, k) = y4.row(t).transpose();
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  const Eigen::MatrixXd L = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
  const double quad = yv.dot(llt.solve(yv));
  const double brute =
      -0.5 * (static_cast<double>(Tb * k) * std::log(2.0 * M_PI) + logdet + quad);
  const double kal = model.exact_loglik(th, y4);
  const bool oracle_ok = std::abs(brute - kal) < 1e-9;

  // 1e4 fresh-draw replicates of p_hat / p at T=50, N=64
  const std::size_t T = 50, N = 64, reps = 10000;
  const Eigen::MatrixXd y = model.simulate(th, T, RngStream::root(12));
  const double lp = model.exact_loglik(th, y);
  const PFEstimator est = PFEstimator::with_pilot(model, th, N, RngStream::root(13));
  const auto fn = make_pf_loglik_fn(model, y, est);
  std::vector<double> ratio(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const AuxBlock u = sample_fresh(fn->layout(), RngStream::root(14).sub(r));
    ratio[r] = std::exp((*fn)(th, u).value - lp);
  }
  const double m = mean_of(ratio);
  const double se = std::sqrt(var_of(ratio) / static_cast<double>(reps));
  const bool ok = oracle_ok && std::abs(m - 1.0) < 3.0 * se;
  std::printf(
      "criterion 2: %s  oracle gap %.2e, mean(p_hat/p)=%.4f (se %.4f, %zu reps) [%.0f s]\n",
      ok ? "PASS" : "FAIL", std::abs(brute - kal), m, se, reps, elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 3. Moment identities of the log-estimate error at the pinned design
// (T=2048, N=28, rho=0.9925): stationary R has mean = -Var(R)/2 and
// Var(R) in [1.3, 2.5]; fresh Z has mean = -Var(Z)/2.
bool criterion3() {
  const auto t0 = clk::now();
  GaussianREModel model;
  Eigen::VectorXd truth(1);
  truth << 0.5;
  const Eigen::MatrixXd y =
      model.simulate(truth, 8192, RngStream::root(9)).topRows(2048);
  double pm = 0.0, pv = 0.0;
  re_posterior(y, pm, pv);
  Eigen::VectorXd th(1);
  th << pm;
  const auto fn = make_is_loglik_fn(model, y, 28);
  const double lp = model.exact_loglik(th, y);

  const ErrorSamples st = loglik_error_samples(*fn, th, lp, ErrorMode::stationary, 0.9925,
                                               2500, 300, RngStream::root(9).sub(31));
  const MomentReport rs = clt_moment_checks(st.z, st.r, ErrorMode::stationary);
  const ErrorSamples fr = loglik_error_samples(*fn, th, lp, ErrorMode::proposal_m, 0.0, 2000,
                                               0, RngStream::root(9).sub(32));
  const MomentReport rf = clt_moment_checks(fr.z, fr.r, ErrorMode::proposal_m);
  const bool ok = std::abs(rs.r_check.zscore) < 3.0 && rs.var_r >= 1.3 && rs.var_r <= 2.5 &&
                  std::abs(rf.z_check.zscore) < 3.0;
  std::printf(
      "criterion 3: %s  stationary R z=%+.2f Var(R)=%.3f; fresh Z z=%+.2f Var(Z)=%.1f [%.0f s]\n",
      ok ? "PASS" : "FAIL", rs.r_check.zscore, rs.var_r, rf.z_check.zscore, rf.var_z,
      elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 4. Computing time of the correlated chain at N=35 against the fresh-noise
// chain at N=5000 on the same T=8192 panel; the ratio must reach 20x.
bool criterion4() {
  const auto t0 = clk::now();
  GaussianREModel model;
  Eigen::VectorXd truth(1);
  truth << 0.5;
  const Eigen::MatrixXd y = model.simulate(truth, 8192, RngStream::root(9));
  double pm = 0.0, pv = 0.0;
  re_posterior(y, pm, pv);
  Eigen::VectorXd th(1);
  th << pm;

  const auto fn35 = make_is_loglik_fn(model, y, 35);
  const double k2 = measure_kappa_sq(*fn35, th, 0.9963, 1200, 200, RngStream::root(9).sub(40));

  KernelConfig kc;
  kc.step_cov = Eigen::MatrixXd::Constant(1, 1, 5.76 * pv);
  kc.corr.rho = 0.9963;
  kc.burn_in = 2000;
  kc.n_iters = 20000;
  const RngStream cs = RngStream::root(9).sub(41);
  ChainState state = init_chain(model, *fn35, th, cs);
  const ChainResult cpm_res = run_chain_cpm(state, model, *fn35, kc, cs);
  const double if_cpm = iact(column_of(cpm_res.thetas, 0));
  const double ct_cpm = 35.0 * if_cpm;

  const auto fn5000 = make_is_loglik_fn(model, y, 5000);
  kc.corr.rho = 0.0;
  kc.burn_in = 100;
  kc.n_iters = 800;
  const RngStream ps = RngStream::root(9).sub(42);
  ChainState pstate = init_chain(model, *fn5000, th, ps);
  const ChainResult pm_res = run_chain_cpm(pstate, model, *fn5000, kc, ps);
  const double if_pm = iact(column_of(pm_res.thetas, 0));
  const double ct_pm = 5000.0 * if_pm;

  const bool ok = ct_pm >= 20.0 * ct_cpm;
  std::printf(
      "criterion 4: %s  CPM N=35 kappa=%.2f CT=%.0f (IF %.1f, acc %.2f) vs PM N=5000 CT=%.0f "
      "(IF %.1f, acc %.2f), ratio %.0fx [%.0f s]\n",
      ok ? "PASS" : "FAIL", std::sqrt(k2), ct_cpm, if_cpm, cpm_res.acc_rate, ct_pm, if_pm,
      pm_res.acc_rate, ct_pm / ct_cpm, elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 5. Root-T particle scaling: psi calibrated once at T=1024, then applied at
// T in {1024, 2048, 4096} with N = ceil(0.62 sqrt(T)). kappa^2 must stay in a
// factor 1.5 band, IF below 100, and Var(Z) must grow like sqrt(T).
bool criterion5() {
  const auto t0 = clk::now();
  GaussianREModel model;
  Eigen::VectorXd truth(1);
  truth << 0.5;
  const Eigen::MatrixXd y_all = model.simulate(truth, 8192, RngStream::root(9));
  const double beta = 0.62;

  ScalingPlan plan{1024, 0.5, beta, 1.0, {}, {}};
  {
    const CenterEstimate ce = fit_center(model, y_all.topRows(1024), truth, plan.N(),
                                         RngStream::root(9).sub(50));
    plan.theta_hat = ce.theta_hat;
    plan.sigma_bar = ce.sigma_bar;
  }
  const double psi = calibrate_psi(model, y_all.topRows(1024), plan, RngStream::root(9).sub(51),
                                   1.4, 0.05, 4000);

  const std::size_t Ts[3] = {1024, 2048, 4096};
  double k2s[3] = {0, 0, 0}, ifs[3] = {0, 0, 0}, vzs[3] = {0, 0, 0};
  for (int i = 0; i < 3; ++i) {
    const std::size_t T = Ts[i];
    const Eigen::MatrixXd y = y_all.topRows(static_cast<Eigen::Index>(T));
    double pm = 0.0, pv = 0.0;
    re_posterior(y, pm, pv);
    Eigen::VectorXd th(1);
    th << pm;
    const auto N = static_cast<std::size_t>(
        std::ceil(beta * std::sqrt(static_cast<double>(T)) - 1e-9));
    const double rho = std::exp(-psi * static_cast<double>(N) / static_cast<double>(T));
    const auto fn = make_is_loglik_fn(model, y, N);
    k2s[i] = measure_kappa_sq(*fn, th, rho, 3000, 300, RngStream::root(9).sub(52 + i));

    KernelConfig kc;
    kc.step_cov = Eigen::MatrixXd::Constant(1, 1, 5.76 * pv);
    kc.corr.rho = rho;
    kc.burn_in = 600;
    kc.n_iters = 6000;
    const RngStream cs = RngStream::root(9).sub(56 + i);
    ChainState state = init_chain(model, *fn, th, cs);
    const ChainResult res = run_chain_cpm(state, model, *fn, kc, cs);
    ifs[i] = iact(column_of(res.thetas, 0));

    // Var(Z) as the sum of per-observation log-mean-weight variances over
    // fresh panels; observations are independent, so the sum is exact.
    const std::size_t reps = 60;
    const AuxLayout layout{T, N, model.coords_per_obs(), false};
    Eigen::MatrixXd per(reps, static_cast<Eigen::Index>(T));
    for (std::size_t r = 0; r < reps; ++r) {
      const AuxBlock u = sample_fresh(layout, RngStream::root(9).sub(60 + i).sub(r));
      const LoglikEstimate est = is_loglik(model, th, y, u);
      for (std::size_t t = 0; t < T; ++t)
        per(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = est.per_obs[t];
    }
    double vz = 0.0;
    for (Eigen::Index t = 0; t < per.cols(); ++t) vz += var_of(column_of(per, t));
    vzs[i] = vz;
  }

  const double band = std::max({k2s[0], k2s[1], k2s[2]}) / std::min({k2s[0], k2s[1], k2s[2]});
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < 3; ++i) {
    const double x = std::log(static_cast<double>(Ts[i])), yy = std::log(vzs[i]);
    sx += x;
    sy += yy;
    sxx += x * x;
    sxy += x * yy;
  }
  const double slope = (3.0 * sxy - sx * sy) / (3.0 * sxx - sx * sx);
  const bool ok = band <= 1.5 && ifs[0] < 100.0 && ifs[1] < 100.0 && ifs[2] < 100.0 &&
                  std::abs(slope - 0.5) <= 0.2;
  std::printf(
      "criterion 5: %s  psi=%.3f kappa_sq (%.2f, %.2f, %.2f) band %.2f; IF (%.1f, %.1f, %.1f); "
      "Var(Z) (%.1f, %.1f, %.1f) slope %.2f [%.0f s]\n",
      ok ? "PASS" : "FAIL", psi, k2s[0], k2s[1], k2s[2], band, ifs[0], ifs[1], ifs[2], vzs[0],
      vzs[1], vzs[2], slope, elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 6. State-space design row T=100, N=18, delta=0.0216 (k=2 panel): measured
// kappa^2 in [1.5, 4.5], implied correlated acceptance within 0.1 of 0.42,
// implied fresh-noise acceptance below 0.05.
bool criterion6() {
  const auto t0 = clk::now();
  LinearGaussianSSM model(2);
  Eigen::VectorXd truth(1);
  truth << 0.4;
  const std::size_t T = 100, N = 18;
  const double rho = std::exp(-0.0216);
  const Eigen::MatrixXd y = model.simulate(truth, T, RngStream::root(9).sub(100));
  const CenterEstimate ce = fit_center(model, y, truth, N, RngStream::root(9).sub(200));
  const auto fn = make_loglik_for(model, y, N, ce.theta_hat, RngStream::root(9).sub(300));
  const double k2 =
      measure_kappa_sq(*fn, ce.theta_hat, rho, 1000, 200, RngStream::root(9).sub(400));
  const ErrorSamples es = loglik_error_samples(*fn, ce.theta_hat, 0.0, ErrorMode::proposal_m,
                                               0.0, 64, 0, RngStream::root(9).sub(500));
  const double s2 = var_of(es.z);
  const double acc_cpm = theory::rho_u(std::sqrt(k2));
  const double acc_pm = theory::rho_pm(std::sqrt(s2));
  const bool ok =
      k2 >= 1.5 && k2 <= 4.5 && std::abs(acc_cpm - 0.42) <= 0.1 && acc_pm < 0.05;
  std::printf(
      "criterion 6: %s  kappa_sq=%.2f rho_u(kappa)=%.3f; sigma_sq=%.1f rho_pm(sigma)=%.2e "
      "[%.0f s]\n",
      ok ? "PASS" : "FAIL", k2, acc_cpm, s2, acc_pm, elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Oracle property suite: AR(1) IACT, reversibility and invariance of the
// autoregressive auxiliary kernel, conjugate-posterior KS for the correlated
// chain, score error against finite differences, cost-curve recovery.
bool criterion7() {
  const auto t0 = clk::now();
  bool ok = true;

  // (a) IACT of AR(1), a=0.9: (1+a)/(1-a) = 19 within 10%
  {
    const std::size_t n = 1000000;
    std::vector<double> x(n);
    const RngStream s = RngStream::root(71);
    double cur = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cur = 0.9 * cur + s.normal(i);
      x[i] = cur;
    }
    const double tau = iact(x);
    ok &= std::abs(tau - 19.0) <= 1.9;
    std::printf("  7a iact(ar1 0.9) = %.2f\n", tau);
  }

  // (b) the correlated auxiliary kernel preserves m and is m-reversible
  {
    const std::size_t n = 200000;
    const double rho = 0.7;
    const AuxLayout lay{1, 1, 1, false};
    std::vector<double> us(n), vs(n), uv(n), sym(n);
    for (std::size_t i = 0; i < n; ++i) {
      const AuxBlock u = sample_fresh(lay, RngStream::root(72).sub(2 * i));
      const AuxBlock v = cn_step(u, rho, RngStream::root(72).sub(2 * i + 1));
      us[i] = u.u[0];
      vs[i] = v.u[0];
      uv[i] = us[i] * vs[i];
      sym[i] = us[i] * us[i] * us[i] * vs[i] - us[i] * vs[i] * vs[i] * vs[i];
    }
    const double rn = std::sqrt(static_cast<double>(n));
    const double zm = mean_of(vs) / (1.0 / rn);
    const double zv = (var_of(vs) - 1.0) / (std::sqrt(2.0) / rn);
    const double zc = (mean_of(uv) - rho) / std::sqrt(var_of(uv) / static_cast<double>(n));
    const double zs = mean_of(sym) / std::sqrt(var_of(sym) / static_cast<double>(n));
    ok &= std::abs(zm) < 3.0 && std::abs(zv) < 3.0 && std::abs(zc) < 3.0 && std::abs(zs) < 3.0;
    std::printf("  7b kernel z-scores: mean %+.2f var %+.2f corr %+.2f sym %+.2f\n", zm, zv,
                zc, zs);
  }

  // (c) correlated chain leaves the conjugate posterior invariant (KS at 1%)
  {
    GaussianREModel model;
    Eigen::VectorXd truth(1);
    truth << 0.5;
    const std::size_t T = 128, N = 16;
    const Eigen::MatrixXd y = model.simulate(truth, T, RngStream::root(73));
    double pm = 0.0, pv = 0.0;
    re_posterior(y, pm, pv);
    Eigen::VectorXd th(1);
    th << pm;
    const auto fn = make_is_loglik_fn(model, y, N);
    KernelConfig kc;
    kc.step_cov = Eigen::MatrixXd::Constant(1, 1, 5.76 * pv);
    kc.corr.rho = std::exp(-0.5 * static_cast<double>(N) / static_cast<double>(T));
    kc.burn_in = 2000;
    kc.n_iters = 60000;
    const RngStream cs = RngStream::root(73).sub(1);
    ChainState state = init_chain(model, *fn, th, cs);
    const ChainResult res = run_chain_cpm(state, model, *fn, kc, cs);
    const std::vector<double> trace = column_of(res.thetas, 0);
    const auto stride = static_cast<std::size_t>(std::ceil(2.0 * iact(trace)));
    std::vector<double> thin;
    for (std::size_t i = 0; i < trace.size(); i += stride)
      thin.push_back((trace[i] - pm) / std::sqrt(pv));
    std::sort(thin.begin(), thin.end());
    const auto nn = static_cast<double>(thin.size());
    double ks = 0.0;
    for (std::size_t i = 0; i < thin.size(); ++i) {
      const double f = 0.5 * std::erfc(-thin[i] / std::sqrt(2.0));
      ks = std::max(ks, std::max(std::abs(f - static_cast<double>(i) / nn),
                                 std::abs(static_cast<double>(i + 1) / nn - f)));
    }
    ok &= ks * std::sqrt(nn) < 1.628;  // 1% two-sided critical value
    std::printf("  7c ks sqrt(n)*D = %.3f (n=%zu, stride %zu)\n", ks * std::sqrt(nn),
                thin.size(), stride);
  }

  // (d) analytic score error matches central finite differences
  {
    GaussianREModel model;
    Eigen::VectorXd truth(1);
    truth << 0.5;
    const std::size_t T = 64, N = 8;
    const Eigen::MatrixXd y = model.simulate(truth, T, RngStream::root(74));
    double pm = 0.0, pv = 0.0;
    re_posterior(y, pm, pv);
    Eigen::VectorXd th(1);
    th << pm;
    const AuxLayout lay{T, N, model.coords_per_obs(), false};
    const AuxBlock u = sample_fresh(lay, RngStream::root(75));
    const double psi_an = score_error(model, th, y, u).psi[0];
    const double h = 1e-6;
    auto gap = [&](double tv) {
      Eigen::VectorXd tt(1);
      tt << tv;
      return is_loglik(model, tt, y, u).value - model.exact_loglik(tt, y);
    };
    const double psi_fd = (gap(pm + h) - gap(pm - h)) / (2.0 * h);
    const double rel = std::abs(psi_an - psi_fd) / std::max(1.0, std::abs(psi_fd));
    ok &= rel < 1e-5;
    std::printf("  7d score error %.6f vs fd %.6f (rel %.1e)\n", psi_an, psi_fd, rel);
  }

  // (e) noiseless cost-curve regression recovers the generating constants
  {
    const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0};
    std::vector<double> ct;
    for (double b : grid) ct.push_back(4.0 / b + b);
    const CTFit fit = fit_ct_curve(grid, ct);
    ok &= std::abs(fit.c0 - 4.0) < 1e-9 && std::abs(fit.c1 - 1.0) < 1e-9 &&
          std::abs(fit.beta_hat - 2.0) < 1e-9;
    std::printf("  7e ct fit (%.12f, %.12f, beta %.12f)\n", fit.c0, fit.c1, fit.beta_hat);
  }

  std::printf("criterion 7: %s  oracle property suite [%.0f s]\n", ok ? "PASS" : "FAIL",
              elapsed(t0));
  return ok;
}

// ---------------------------------------------------------------------------
// 8. Stochastic-volatility pipeline on a synthetic panel: T=500 from
// (mu, upsilon, omega, chi) = (1, 0.05, 0.2, -0.6), correlated chain at
// N=34; posterior means within 3 posterior sds of truth and the stationary
// noise increment passing its mean = -Var/2 check.
bool criterion8() {
  const auto t0 = clk::now();
  HestonEulerModel model(10);
  Eigen::VectorXd truth(4);
  truth << 1.0, 0.05, 0.2, -0.6;
  const std::size_t T = 500, N = 34;
  const double psi = 0.35;
  const double rho = std::exp(-psi * static_cast<double>(N) / static_cast<double>(T));
  const Eigen::MatrixXd y = model.simulate(truth, T, RngStream::root(21));
  const CenterEstimate ce = fit_center(model, y, truth, N, RngStream::root(21).sub(2));
  const auto fn = make_loglik_for(model, y, N, ce.theta_hat, RngStream::root(21).sub(3));

  const ErrorSamples es = loglik_error_samples(*fn, ce.theta_hat, 0.0, ErrorMode::stationary,
                                               rho, 2000, 300, RngStream::root(21).sub(5));
  const MomentReport rep = clt_moment_checks(es.z, es.r, ErrorMode::stationary);

  KernelConfig kc;
  kc.step_cov = 0.64 * (5.76 / 4.0) * ce.sigma_bar / static_cast<double>(T);
  kc.corr.rho = rho;
  kc.burn_in = 1000;
  kc.n_iters = 24000;
  const RngStream cs = RngStream::root(21).sub(7);
  ChainState state = init_chain(model, *fn, ce.theta_hat, cs);
  const ChainResult res = run_chain_cpm(state, model, *fn, kc, cs);

  bool within = true;
  double dev[4] = {0, 0, 0, 0};
  for (int c = 0; c < 4; ++c) {
    const std::vector<double> col = column_of(res.thetas, c);
    const double m = mean_of(col);
    const double sd = std::sqrt(var_of(col));
    dev[c] = (m - truth[c]) / sd;
    within &= std::abs(dev[c]) < 3.0;
  }
  const bool ok = within && !rep.r_check.flagged;
  std::printf(
      "criterion 8: %s  deviations/sd (%+.2f, %+.2f, %+.2f, %+.2f), kappa_sq=%.2f R z=%+.2f, "
      "acc %.2f [%.0f s]\n",
      ok ? "PASS" : "FAIL", dev[0], dev[1], dev[2], dev[3], rep.var_r, rep.r_check.zscore,
      res.acc_rate, elapsed(t0));
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  bool (*criteria[8])() = {criterion1, criterion2, criterion3, criterion4,
                           criterion5, criterion6, criterion7, criterion8};
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > 8) {
      std::fprintf(stderr, "usage: %s [1-8]\n", argv[0]);
      return 2;
    }
    return criteria[n - 1]() ? 0 : 1;
  }
  int failures = 0;
  for (auto* c : criteria) failures += c() ? 0 : 1;
  return failures;
}
