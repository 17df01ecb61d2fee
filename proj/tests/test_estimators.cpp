#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "cpm/estimators.hpp"
#include "cpm/kernels.hpp"
#include "cpm/models.hpp"

using cpm::AuxBlock;
using cpm::AuxLayout;
using cpm::GaussianREModel;
using cpm::HestonEulerModel;
using cpm::ISEstimator;
using cpm::LinearGaussianSSM;
using cpm::PFEstimator;
using cpm::RngStream;

namespace {

constexpr double LOG_2PI = 1.8378770664093454836;

Eigen::VectorXd vec1(double a) {
  Eigen::VectorXd v(1);
  v << a;
  return v;
}

struct IsaGuard {
  cpm::kern::Isa saved;
  IsaGuard() : saved(cpm::kern::active()) {}
  ~IsaGuard() { cpm::kern::force(saved); }
};

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("importance sampling single draw equals its weight") {
  GaussianREModel model;
  ISEstimator est{1};
  Eigen::MatrixXd y(1, 1);
  y << 1.3;
  AuxBlock u = cpm::sample_fresh(est.layout(model, 1), RngStream::root(2));
  const double d = 1.3 - 0.5 - u.u[0];
  const double want = -0.5 * LOG_2PI - 0.5 * d * d;
  auto ll = cpm::is_loglik(model, vec1(0.5), y, u);
  CHECK(ll.value == doctest::Approx(want).epsilon(1e-14));
  REQUIRE(ll.per_obs.size() == 1);
  CHECK(ll.per_obs[0] == ll.value);
}

TEST_CASE("importance sampling estimate is identical across kernel backends") {
  GaussianREModel model;
  ISEstimator est{32};
  Eigen::MatrixXd y = model.simulate(vec1(0.5), 64, RngStream::root(7));
  AuxBlock u = cpm::sample_fresh(est.layout(model, 64), RngStream::root(8));

  IsaGuard guard;
  cpm::kern::force(cpm::kern::Isa::scalar);
  auto a = cpm::is_loglik(model, vec1(0.5), y, u);
  auto a2 = cpm::is_loglik(model, vec1(0.5), y, u);
  CHECK(std::memcmp(&a.value, &a2.value, sizeof(double)) == 0);
  if (cpm::kern::avx2_available()) {
    cpm::kern::force(cpm::kern::Isa::avx2);
    auto b = cpm::is_loglik(model, vec1(0.5), y, u);
    CHECK(std::memcmp(&a.value, &b.value, sizeof(double)) == 0);
    REQUIRE(a.per_obs.size() == b.per_obs.size());
    CHECK(std::memcmp(a.per_obs.data(), b.per_obs.data(),
                      sizeof(double) * a.per_obs.size()) == 0);
  }
}

TEST_CASE("importance sampling estimator is unbiased for the likelihood") {
  GaussianREModel model;
  ISEstimator est{8};
  Eigen::MatrixXd y(3, 1);
  y << 0.9, 0.1, 1.4;
  const Eigen::VectorXd theta = vec1(0.5);
  const double exact = model.exact_loglik(theta, y);
  const AuxLayout L = est.layout(model, 3);
  RngStream s = RngStream::root(13);
  const int R = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < R; ++r) {
    AuxBlock u = cpm::sample_fresh(L, s.sub(static_cast<std::uint64_t>(r)));
    const double ratio = std::exp(cpm::is_loglik(model, theta, y, u).value - exact);
    sum += ratio;
    sumsq += ratio * ratio;
  }
  const double mean = sum / R;
  const double se = std::sqrt((sumsq / R - mean * mean) / R);
  CHECK(std::fabs(mean - 1.0) < 3.5 * se);
  CHECK(se < 0.01);
}

TEST_CASE("layout mismatch is rejected") {
  GaussianREModel model;
  Eigen::MatrixXd y(4, 1);
  y.setZero();
  AuxBlock u = cpm::sample_fresh({3, 8, 1, false}, RngStream::root(1));
  CHECK_THROWS_AS(cpm::is_loglik(model, vec1(0.0), y, u), std::invalid_argument);
}

TEST_CASE("degenerate weights raise instead of returning minus infinity") {
  GaussianREModel model;
  ISEstimator est{4};
  Eigen::MatrixXd y(2, 1);
  y << 0.0, 1e200;  // squared residual overflows at t = 1
  AuxBlock u = cpm::sample_fresh(est.layout(model, 2), RngStream::root(3));
  try {
    cpm::is_loglik(model, vec1(0.0), y, u);
    FAIL("expected degenerate_estimate");
  } catch (const cpm::degenerate_estimate& e) {
    CHECK(e.t() == 1);
  }

  HestonEulerModel heston(4);
  Eigen::VectorXd bad(4);
  bad << -1.0, 0.05, 0.2, 0.0;  // invalid mean reversion level
  PFEstimator pf{3, {}};
  pf.map.loc = {0.0};
  pf.map.scale = {1.0};
  Eigen::MatrixXd yh(2, 1);
  yh.setZero();
  AuxBlock uh = cpm::sample_fresh(pf.layout(heston, 2), RngStream::root(4));
  try {
    cpm::pf_loglik(heston, pf, bad, yh, uh);
    FAIL("expected degenerate_estimate");
  } catch (const cpm::degenerate_estimate& e) {
    CHECK(e.t() == 0);
  }
}

TEST_CASE("sorted systematic resampling unit cases") {
  std::vector<std::size_t> anc;

  // equal weights keep ancestry diagonal for any offset
  {
    const double lw[4] = {-1.0, -1.0, -1.0, -1.0};
    cpm::sorted_systematic_resample(lw, 4, 0.7, anc);
    REQUIRE(anc.size() == 4);
    for (std::size_t j = 0; j < 4; ++j) CHECK(anc[j] == j);
  }

  // point mass sends everyone to the heavy particle
  {
    const double lw[3] = {0.0, -1e9, -1e9};
    cpm::sorted_systematic_resample(lw, 3, -1.2, anc);
    for (std::size_t j = 0; j < 3; ++j) CHECK(anc[j] == 0);
  }

  // hand-traced case: weights (0.5, 0.3, 0.2), offset 1/2
  {
    const double lw[3] = {std::log(0.5), std::log(0.3), std::log(0.2)};
    cpm::sorted_systematic_resample(lw, 3, 0.0, anc);  // Phi(0) = 1/2
    CHECK(anc[0] == 0);
    CHECK(anc[1] == 0);
    CHECK(anc[2] == 2);
  }

  // ancestry counts are proportional to weights on average
  {
    const double w[3] = {0.6, 0.3, 0.1};
    const double lw[3] = {std::log(w[0]), std::log(w[1]), std::log(w[2])};
    double counts[3] = {0, 0, 0};
    RngStream s = RngStream::root(77);
    const int R = 20000;
    for (int r = 0; r < R; ++r) {
      cpm::sorted_systematic_resample(lw, 3, s.normal(static_cast<std::uint64_t>(r)), anc);
      for (std::size_t j = 0; j + 1 < anc.size(); ++j) CHECK(anc[j] <= anc[j + 1]);
      for (std::size_t a : anc) counts[a] += 1.0;
    }
    for (int i = 0; i < 3; ++i) {
      CHECK(std::fabs(counts[i] / (3.0 * R) - w[i]) < 0.01);
    }
  }
}

TEST_CASE("single-particle filter reduces to a plugged-in path") {
  LinearGaussianSSM model(1);
  PFEstimator est{1, {}};
  est.map.loc = {0.0};
  est.map.scale = {1.0};
  Eigen::MatrixXd y(2, 1);
  y << 0.8, -0.4;
  const Eigen::VectorXd theta = vec1(0.4);
  AuxBlock u = cpm::sample_fresh(est.layout(model, 2), RngStream::root(10));
  REQUIRE(u.u.size() == 3);  // two state cells plus one resampling cell

  const double x0 = u.u[0];
  const double x1 = 0.4 * x0 + u.u[1];
  const double lw0 = -0.5 * LOG_2PI - 0.5 * (0.8 - x0) * (0.8 - x0);
  const double lw1 = -0.5 * LOG_2PI - 0.5 * (-0.4 - x1) * (-0.4 - x1);
  auto ll = cpm::pf_loglik(model, est, theta, y, u);
  CHECK(ll.value == doctest::Approx(lw0 + lw1).epsilon(1e-13));
  REQUIRE(ll.per_obs.size() == 2);
  CHECK(ll.per_obs[0] == doctest::Approx(lw0).epsilon(1e-13));
  CHECK(ll.per_obs[1] == doctest::Approx(lw1).epsilon(1e-13));
}

TEST_CASE("relabelling first-panel particles leaves the estimate bit-identical") {
  LinearGaussianSSM model(2);
  PFEstimator est = PFEstimator::with_pilot(model, vec1(0.4), 5, RngStream::root(21));
  Eigen::MatrixXd y = model.simulate(vec1(0.4), 3, RngStream::root(22));
  const AuxLayout L = est.layout(model, 3);
  AuxBlock u = cpm::sample_fresh(L, RngStream::root(23));
  const auto base = cpm::pf_loglik(model, est, vec1(0.4), y, u);

  // rotate the five particle groups of the first panel
  AuxBlock v = u;
  const std::size_t p = L.p;
  for (std::size_t i = 0; i < 5; ++i) {
    const std::size_t src = (i + 2) % 5;
    for (std::size_t c = 0; c < p; ++c) v.u[i * p + c] = u.u[src * p + c];
  }
  const auto swapped = cpm::pf_loglik(model, est, vec1(0.4), y, v);
  CHECK(std::memcmp(&base.value, &swapped.value, sizeof(double)) == 0);
  CHECK(std::memcmp(base.per_obs.data(), swapped.per_obs.data(),
                    sizeof(double) * base.per_obs.size()) == 0);
}

TEST_CASE("particle filter is unbiased against the exact filter") {
  LinearGaussianSSM model(2);
  PFEstimator est = PFEstimator::with_pilot(model, vec1(0.4), 8, RngStream::root(31));
  Eigen::MatrixXd y = model.simulate(vec1(0.4), 4, RngStream::root(32));
  const Eigen::VectorXd theta = vec1(0.4);
  const double exact = model.exact_loglik(theta, y);
  const AuxLayout L = est.layout(model, 4);
  RngStream s = RngStream::root(33);
  const int R = 20000;
  double sum = 0.0, sumsq = 0.0;
  for (int r = 0; r < R; ++r) {
    AuxBlock u = cpm::sample_fresh(L, s.sub(static_cast<std::uint64_t>(r)));
    const double ratio = std::exp(cpm::pf_loglik(model, est, theta, y, u).value - exact);
    sum += ratio;
    sumsq += ratio * ratio;
  }
  const double mean = sum / R;
  const double se = std::sqrt((sumsq / R - mean * mean) / R);
  CHECK(std::fabs(mean - 1.0) < 3.5 * se);
  CHECK(se < 0.02);
}

TEST_CASE("correlated blocks move the estimate far less than fresh blocks") {
  LinearGaussianSSM model(1);
  PFEstimator est = PFEstimator::with_pilot(model, vec1(0.4), 16, RngStream::root(51));
  Eigen::MatrixXd y = model.simulate(vec1(0.4), 256, RngStream::root(52));
  const Eigen::VectorXd theta = vec1(0.4);
  const AuxLayout L = est.layout(model, 256);
  RngStream s = RngStream::root(53);
  std::vector<double> corr_moves, fresh_moves;
  for (int r = 0; r < 50; ++r) {
    RngStream sr = s.sub(static_cast<std::uint64_t>(r));
    AuxBlock u = cpm::sample_fresh(L, sr.sub(1));
    AuxBlock uc = cpm::cn_step(u, 0.9999, sr.sub(2));
    AuxBlock uf = cpm::sample_fresh(L, sr.sub(3));
    const double base = cpm::pf_loglik(model, est, theta, y, u).value;
    corr_moves.push_back(std::fabs(cpm::pf_loglik(model, est, theta, y, uc).value - base));
    fresh_moves.push_back(std::fabs(cpm::pf_loglik(model, est, theta, y, uf).value - base));
  }
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  CHECK(median(corr_moves) * 10.0 < median(fresh_moves));
}

TEST_CASE("pilot calibration produces a sane sorting map") {
  LinearGaussianSSM model(2);
  PFEstimator est = PFEstimator::with_pilot(model, vec1(0.4), 8, RngStream::root(61));
  CHECK(est.N == 8);
  REQUIRE(est.map.dims() == 2);
  for (std::size_t a = 0; a < 2; ++a) {
    CHECK(std::fabs(est.map.loc[a]) < 0.3);   // stationary median near zero
    CHECK(est.map.scale[a] > 1.0);            // 3 * IQR of a roughly unit normal
    CHECK(est.map.scale[a] < 10.0);
  }
  CHECK(est.map.order == 16);
}

}  // TEST_SUITE
