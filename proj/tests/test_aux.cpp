#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "cpm/aux.hpp"

using cpm::AuxBlock;
using cpm::AuxLayout;
using cpm::CorrelationParam;
using cpm::RngStream;

TEST_SUITE("aux") {

TEST_CASE("layout sizes and indexing") {
  AuxLayout is{5, 3, 2, false};
  CHECK(is.M() == 30);
  CHECK(is.panel() == 6);
  CHECK(is.cell(0, 0, 0) == 0);
  CHECK(is.cell(0, 0, 1) == 1);
  CHECK(is.cell(0, 1, 0) == 2);
  CHECK(is.cell(1, 0, 0) == 6);
  CHECK(is.cell(4, 2, 1) == 29);

  AuxLayout pf{3, 4, 1, true};
  CHECK(pf.M() == 14);
  CHECK(pf.resample_index(0) == 12);
  CHECK(pf.resample_index(1) == 13);

  std::set<std::size_t> seen;
  for (std::size_t t = 0; t < is.T; ++t) {
    for (std::size_t i = 0; i < is.N; ++i) {
      for (std::size_t c = 0; c < is.p; ++c) seen.insert(is.cell(t, i, c));
    }
  }
  CHECK(seen.size() == is.M());
  CHECK(*seen.rbegin() == is.M() - 1);
}

TEST_CASE("sample_fresh moments") {
  AuxLayout L{100, 50, 2, true};
  AuxBlock b = cpm::sample_fresh(L, RngStream::root(5));
  REQUIRE(b.u.size() == L.M());
  double mean = 0.0, var = 0.0;
  for (double v : b.u) mean += v;
  mean /= static_cast<double>(b.u.size());
  for (double v : b.u) var += (v - mean) * (v - mean);
  var /= static_cast<double>(b.u.size() - 1);
  CHECK(std::fabs(mean) < 0.05);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

TEST_CASE("cn_step endpoints") {
  AuxLayout L{40, 20, 1, false};
  RngStream s = RngStream::root(9);
  AuxBlock u = cpm::sample_fresh(L, s.sub(1));

  AuxBlock fresh = cpm::cn_step(u, 0.0, s.sub(2));
  AuxBlock direct = cpm::sample_fresh(L, s.sub(2));
  CHECK(std::memcmp(fresh.u.data(), direct.u.data(), sizeof(double) * L.M()) == 0);

  AuxBlock frozen = cpm::cn_step(u, 1.0, s.sub(3));
  CHECK(std::memcmp(frozen.u.data(), u.u.data(), sizeof(double) * L.M()) == 0);
}

TEST_CASE("cn_step preserves the standard normal law and hits the target correlation") {
  AuxLayout L{1000, 100, 1, false};
  RngStream s = RngStream::root(17);
  AuxBlock u = cpm::sample_fresh(L, s.sub(1));
  const double rho = 0.9;
  AuxBlock v = cpm::cn_step(u, rho, s.sub(2));

  const std::size_t M = L.M();
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    mu += u.u[i];
    mv += v.u[i];
  }
  mu /= static_cast<double>(M);
  mv /= static_cast<double>(M);
  double suu = 0.0, svv = 0.0, suv = 0.0, skew = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    const double du = u.u[i] - mu;
    const double dv = v.u[i] - mv;
    suu += du * du;
    svv += dv * dv;
    suv += du * dv;
    skew += dv * dv * dv;
  }
  const double corr = suv / std::sqrt(suu * svv);
  CHECK(std::fabs(corr - rho) < 0.003);
  CHECK(std::fabs(svv / static_cast<double>(M - 1) - 1.0) < 0.01);
  CHECK(std::fabs(skew / static_cast<double>(M)) < 0.02);

  // reversibility proxy: sign-flip flux balance between (u,v) and (v,u)
  std::size_t pn = 0, np = 0;
  for (std::size_t i = 0; i < M; ++i) {
    if (u.u[i] > 0 && v.u[i] < 0) ++pn;
    if (u.u[i] < 0 && v.u[i] > 0) ++np;
  }
  const double total = static_cast<double>(pn + np);
  CHECK(std::fabs(static_cast<double>(pn) - static_cast<double>(np)) <
        4.0 * std::sqrt(total));
}

TEST_CASE("cn_step composition compounds correlation") {
  AuxLayout L{500, 100, 1, false};
  RngStream s = RngStream::root(23);
  AuxBlock u = cpm::sample_fresh(L, s.sub(1));
  const double r1 = 0.95, r2 = 0.9;
  AuxBlock v = cpm::cn_step(u, r1, s.sub(2));
  AuxBlock w = cpm::cn_step(v, r2, s.sub(3));
  const std::size_t M = L.M();
  double suu = 0.0, sww = 0.0, suw = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    suu += u.u[i] * u.u[i];
    sww += w.u[i] * w.u[i];
    suw += u.u[i] * w.u[i];
  }
  CHECK(std::fabs(suw / std::sqrt(suu * sww) - r1 * r2) < 0.01);
}

TEST_CASE("correlation from tuning rate") {
  CorrelationParam c = CorrelationParam::from_psi(0.3, 50, 1000);
  CHECK(c.rho == doctest::Approx(std::exp(-0.3 * 50.0 / 1000.0)).epsilon(1e-15));
  CHECK(CorrelationParam::from_psi(0.0, 10, 100).rho == 1.0);
  CHECK_THROWS(CorrelationParam::from_psi(-1.0, 10, 100));
}

}  // TEST_SUITE
