#include "cpm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "cpm/kernels.hpp"

namespace cpm {
namespace {

double norm_cdf(double z) { return 0.5 * std::erfc(-z * (std::numbers::sqrt2 / 2.0)); }

double quartile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

degenerate_estimate::degenerate_estimate(std::size_t t)
    : std::runtime_error("degenerate likelihood estimate at observation " + std::to_string(t)),
      t_(t) {}

LoglikEstimate is_loglik(const REModel& model, const Eigen::VectorXd& theta,
                         const Eigen::MatrixXd& y, const AuxBlock& u) {
  const AuxLayout& L = u.layout;
  if (L.pf || L.p != model.coords_per_obs() ||
      L.T != static_cast<std::size_t>(y.rows())) {
    throw std::invalid_argument("auxiliary layout does not match model/data");
  }
  LoglikEstimate est;
  est.per_obs.resize(L.T);
  std::vector<double> lw(L.N);
  for (std::size_t t = 0; t < L.T; ++t) {
    model.is_logweights(theta, y, t, u.panel(t), L.N, lw.data());
    const double m = kern::lse_mean(lw.data(), L.N);
    if (!std::isfinite(m)) throw degenerate_estimate(t);
    est.per_obs[t] = m;
    est.value += m;
  }
  return est;
}

void sorted_systematic_resample(const double* lw_sorted, std::size_t N, double u_normal,
                                std::vector<std::size_t>& anc) {
  anc.resize(N);
  double m = lw_sorted[0];
  for (std::size_t j = 1; j < N; ++j) m = std::max(m, lw_sorted[j]);
  thread_local std::vector<double> w;
  w.resize(N);
  double W = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    w[j] = std::exp(lw_sorted[j] - m);
    W += w[j];
  }
  const double phi = norm_cdf(u_normal);
  const double invN = 1.0 / static_cast<double>(N);
  std::size_t a = 0;
  double csum = w[0];
  for (std::size_t j = 0; j < N; ++j) {
    const double target = (static_cast<double>(j) + phi) * invN * W;
    while (csum < target && a + 1 < N) {
      ++a;
      csum += w[a];
    }
    anc[j] = a;
  }
}

PFEstimator PFEstimator::with_pilot(const StateSpaceModel& model, const Eigen::VectorXd& theta,
                                    std::size_t N, const RngStream& pilot_stream,
                                    std::size_t n_pilot, int order) {
  const Eigen::MatrixXd draws = model.pilot_states(theta, n_pilot, pilot_stream);
  const std::size_t k = model.state_dim();
  PFEstimator est;
  est.N = N;
  est.map.order = order;
  est.map.loc.resize(k);
  est.map.scale.resize(k);
  std::vector<double> axis(n_pilot);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t i = 0; i < n_pilot; ++i) {
      axis[i] = draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(a));
    }
    std::sort(axis.begin(), axis.end());
    est.map.loc[a] = quartile_sorted(axis, 0.5);
    const double iqr = quartile_sorted(axis, 0.75) - quartile_sorted(axis, 0.25);
    est.map.scale[a] = std::max(3.0 * iqr, 1e-6);
  }
  return est;
}

LoglikEstimate pf_loglik(const StateSpaceModel& model, const PFEstimator& est,
                         const Eigen::VectorXd& theta, const Eigen::MatrixXd& y,
                         const AuxBlock& u) {
  const AuxLayout& L = u.layout;
  const std::size_t N = L.N;
  const std::size_t k = model.state_dim();
  if (!L.pf || L.p != model.coords_per_particle() || N != est.N ||
      L.T != static_cast<std::size_t>(y.rows())) {
    throw std::invalid_argument("auxiliary layout does not match model/data");
  }
  LoglikEstimate out;
  out.per_obs.resize(L.T);
  thread_local std::vector<double> cur, next, lw, lw_sorted;
  thread_local std::vector<std::size_t> perm, anc, parent;
  cur.resize(N * k);
  next.resize(N * k);
  lw.resize(N);
  lw_sorted.resize(N);
  parent.resize(N);

  model.init_particles(theta, y, u.panel(0), N, cur.data(), lw.data());
  for (std::size_t t = 0; t < L.T; ++t) {
    // invalid weights imply invalid states; bail before they reach the sort
    for (std::size_t j = 0; j < N; ++j) {
      if (std::isnan(lw[j])) throw degenerate_estimate(t);
    }
    double m;
    if (t + 1 < L.T) {
      // canonical (sorted) summation order, so relabeling the first panel's
      // samples cannot perturb the estimate
      if (t == 0) {
        sort_lexicographic(cur.data(), N, k, perm);
      } else {
        sort_by_key(cur.data(), N, k, est.map, perm);
      }
      for (std::size_t j = 0; j < N; ++j) lw_sorted[j] = lw[perm[j]];
      m = kern::lse_mean(lw_sorted.data(), N);
    } else {
      m = kern::lse_mean(lw.data(), N);
    }
    if (!std::isfinite(m)) throw degenerate_estimate(t);
    out.per_obs[t] = m;
    out.value += m;
    if (t + 1 < L.T) {
      sorted_systematic_resample(lw_sorted.data(), N, u.resample(t), anc);
      for (std::size_t j = 0; j < N; ++j) parent[j] = perm[anc[j]];
      model.propagate(theta, y, t + 1, u.panel(t + 1), parent.data(), cur.data(), N,
                      next.data(), lw.data());
      cur.swap(next);
    }
  }
  return out;
}

}  // namespace cpm
