#include "cpm/aux.hpp"

#include <cmath>
#include <stdexcept>

namespace cpm {

CorrelationParam CorrelationParam::from_psi(double psi, std::size_t N, std::size_t T) {
  if (psi < 0.0) throw std::invalid_argument("psi must be nonnegative");
  return {std::exp(-psi * static_cast<double>(N) / static_cast<double>(T))};
}

AuxBlock sample_fresh(const AuxLayout& layout, const RngStream& stream) {
  AuxBlock b{layout, std::vector<double>(layout.M())};
  stream.fill_normal(b.u.data(), b.u.size());
  return b;
}

void cn_step(const AuxBlock& u, double rho, const RngStream& stream, AuxBlock& out) {
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("rho must be in [0,1]");
  out.layout = u.layout;
  out.u.resize(u.u.size());
  kern::cn_update(out.u.data(), u.u.data(), u.u.size(), rho, stream.base, 0);
}

AuxBlock cn_step(const AuxBlock& u, double rho, const RngStream& stream) {
  AuxBlock out;
  cn_step(u, rho, stream, out);
  return out;
}

}  // namespace cpm
