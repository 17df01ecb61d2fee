#pragma once
// Hierarchical counter-based random streams. A stream is a 64-bit key; cells
// are read by index without mutating state, so any slice can be regenerated
// independently of call order. sub() and at() derive children in separate
// domains from the raw cell space.
#include <cstdint>

#include "cpm/kernels.hpp"

namespace cpm {

struct RngStream {
  std::uint64_t base = 0;

  static RngStream root(std::uint64_t seed) {
    return {kern::mix64(seed + 0x2545F4914F6CDD1Dull)};
  }

  RngStream sub(std::uint64_t tag) const {
    return {kern::mix64(base + tag * kern::golden + 0x6A09E667F3BCC909ull)};
  }

  RngStream at(std::uint64_t counter) const {
    return {kern::mix64(base + counter * kern::golden + 0xBB67AE8584CAA73Bull)};
  }

  double u01(std::uint64_t idx) const {
    return kern::u01_from_bits(kern::mix64(base + idx * kern::golden));
  }

  double normal(std::uint64_t idx) const { return kern::norm_icdf(u01(idx)); }

  void fill_normal(double* dst, std::size_t n, std::uint64_t idx0 = 0) const {
    kern::fill_normal(dst, n, base, idx0);
  }
};

}  // namespace cpm
