#include "cpm/kernels.hpp"

#include "kernels_common.hpp"

namespace cpm::kern {

double exp1(double x) { return detail::exp_impl(x); }
double log1(double x) { return detail::log_impl(x); }
double norm_icdf(double u) { return detail::norm_icdf_impl(u); }

namespace detail::scalar {

void fill_normal(double* dst, std::size_t n, std::uint64_t key, std::uint64_t ctr0) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = mix64(key + (ctr0 + i) * golden);
    dst[i] = norm_icdf_impl(u01_impl(h));
  }
}

void cn_update(double* out, const double* u, std::size_t n, double rho,
               std::uint64_t key, std::uint64_t ctr0) {
  // explicit fma so both translation units round identically
  const double s = std::sqrt(std::fma(-rho, rho, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t h = mix64(key + (ctr0 + i) * golden);
    double eps = norm_icdf_impl(u01_impl(h));
    out[i] = std::fma(s, eps, rho * u[i]);
  }
}

// Four lane-mirrored accumulators plus a scalar tail; the AVX2 path reduces in
// the same order, so results agree bitwise.
double lse_mean(const double* lw, std::size_t n) {
  double m = lw[0];
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, lw[i]);
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t nb = n - n % 4;
  for (std::size_t i = 0; i < nb; i += 4) {
    for (int j = 0; j < 4; ++j) acc[j] += exp_impl(lw[i + j] - m);
  }
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += exp_impl(lw[i] - m);
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail;
  return m + (log_impl(s) - log_impl(static_cast<double>(n)));
}

void exp_batch(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = exp_impl(src[i]);
}

void log_batch(double* dst, const double* src, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dst[i] = log_impl(src[i]);
}

}  // namespace detail::scalar
}  // namespace cpm::kern
