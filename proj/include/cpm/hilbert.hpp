#pragma once
// Hilbert-curve keys for particle sorting. States are squashed coordinatewise
// through a logistic map onto a 2^order grid, then ordered along the curve.
// One-dimensional states bypass the curve: the grid coordinate already orders
// them.
#include <cstdint>
#include <vector>

namespace cpm {

// grid coords X[i] < 2^order, order*k <= 63
std::uint64_t hilbert_index(const std::uint32_t* X, std::size_t k, int order);

struct HilbertMap {
  int order = 16;
  std::vector<double> loc;    // per-axis logistic center
  std::vector<double> scale;  // per-axis logistic spread, > 0

  std::size_t dims() const { return loc.size(); }
  std::uint32_t grid_coord(double x, std::size_t axis) const;
  std::uint64_t key(const double* x) const;
};

// Permutation sorting N states of dimension k.
// Keyed mode orders by Hilbert key; lexicographic mode orders by raw
// coordinates. Ties break by original index, so the sort is stable.
void sort_by_key(const double* states, std::size_t N, std::size_t k,
                 const HilbertMap& map, std::vector<std::size_t>& perm);
void sort_lexicographic(const double* states, std::size_t N, std::size_t k,
                        std::vector<std::size_t>& perm);

}  // namespace cpm
