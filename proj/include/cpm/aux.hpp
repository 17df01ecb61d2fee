#pragma once
// Auxiliary-variable block: the full vector of standard normals an estimator
// consumes, laid out time-major so one observation's panel is contiguous.
// Particle-filter layouts append one resampling variate per transition at the
// tail, keeping panel addresses independent of T.
#include <cstddef>
#include <vector>

#include "cpm/rng.hpp"

namespace cpm {

struct AuxLayout {
  std::size_t T = 0;  // observations
  std::size_t N = 0;  // samples/particles per observation
  std::size_t p = 1;  // coordinates per sample
  bool pf = false;    // has resampling variates

  std::size_t M() const { return T * N * p + (pf ? T - 1 : 0); }
  std::size_t panel() const { return N * p; }
  std::size_t cell(std::size_t t, std::size_t i, std::size_t c = 0) const {
    return (t * N + i) * p + c;
  }
  std::size_t resample_index(std::size_t t) const { return T * N * p + t; }
  bool operator==(const AuxLayout&) const = default;
};

struct AuxBlock {
  AuxLayout layout;
  std::vector<double> u;

  const double* panel(std::size_t t) const { return u.data() + layout.cell(t, 0, 0); }
  double resample(std::size_t t) const { return u[layout.resample_index(t)]; }
};

struct CorrelationParam {
  double rho = 0.0;
  static CorrelationParam from_psi(double psi, std::size_t N, std::size_t T);
};

AuxBlock sample_fresh(const AuxLayout& layout, const RngStream& stream);

// out = rho*u + sqrt(1-rho^2)*eps with eps read from the stream; rho=0
// reproduces sample_fresh(stream) bitwise, rho=1 copies u.
void cn_step(const AuxBlock& u, double rho, const RngStream& stream, AuxBlock& out);
AuxBlock cn_step(const AuxBlock& u, double rho, const RngStream& stream);

}  // namespace cpm
