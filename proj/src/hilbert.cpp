#include "cpm/hilbert.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace cpm {

std::uint64_t hilbert_index(const std::uint32_t* Xin, std::size_t k, int order) {
  assert(k >= 1 && k <= 8 && order >= 1 && order <= 31);
  assert(static_cast<std::size_t>(order) * k <= 63);
  if (k == 1) return Xin[0];
  std::uint32_t X[8];
  std::copy(Xin, Xin + k, X);
  const std::uint32_t M = 1u << (order - 1);
  // fold axes into the transposed Hilbert index (Skilling's in-place pass)
  for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
    const std::uint32_t P = Q - 1;
    for (std::size_t i = 0; i < k; ++i) {
      if (X[i] & Q) {
        X[0] ^= P;
      } else {
        const std::uint32_t t = (X[0] ^ X[i]) & P;
        X[0] ^= t;
        X[i] ^= t;
      }
    }
  }
  for (std::size_t i = 1; i < k; ++i) X[i] ^= X[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t Q = M; Q > 1; Q >>= 1) {
    if (X[k - 1] & Q) t ^= Q - 1;
  }
  for (std::size_t i = 0; i < k; ++i) X[i] ^= t;
  // interleave bit planes, axis 0 most significant within each plane
  std::uint64_t h = 0;
  for (int j = order - 1; j >= 0; --j) {
    for (std::size_t i = 0; i < k; ++i) h = (h << 1) | ((X[i] >> j) & 1u);
  }
  return h;
}

std::uint32_t HilbertMap::grid_coord(double x, std::size_t axis) const {
  const double z = (x - loc[axis]) / scale[axis];
  const double g = 1.0 / (1.0 + std::exp(-z));
  const double cells = std::ldexp(1.0, order);
  const double d = std::floor(g * cells);
  const double dmax = cells - 1.0;
  return static_cast<std::uint32_t>(d > dmax ? dmax : d);
}

std::uint64_t HilbertMap::key(const double* x) const {
  const std::size_t k = dims();
  std::uint32_t X[8];
  for (std::size_t a = 0; a < k; ++a) X[a] = grid_coord(x[a], a);
  return hilbert_index(X, k, order);
}

void sort_by_key(const double* states, std::size_t N, std::size_t k,
                 const HilbertMap& map, std::vector<std::size_t>& perm) {
  assert(map.dims() == k);
  std::vector<std::uint64_t> keys(N);
  for (std::size_t i = 0; i < N; ++i) keys[i] = map.key(states + i * k);
  perm.resize(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return a < b;
  });
}

void sort_lexicographic(const double* states, std::size_t N, std::size_t k,
                        std::vector<std::size_t>& perm) {
  perm.resize(N);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    const double* xa = states + a * k;
    const double* xb = states + b * k;
    for (std::size_t c = 0; c < k; ++c) {
      if (xa[c] != xb[c]) return xa[c] < xb[c];
    }
    return a < b;
  });
}

}  // namespace cpm
