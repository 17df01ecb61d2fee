#pragma once
// Numeric kernels with scalar and AVX2 implementations selected at runtime.
// Both implementations follow the same operation order (lane-mirrored
// accumulators, fused multiply-add in identical places) so their outputs are
// bit-identical; tests assert this.
#include <cstddef>
#include <cstdint>

namespace cpm::kern {

enum class Isa { scalar, avx2 };

Isa active();
void force(Isa isa);
bool avx2_available();

// Counter-based generator: value at cell c is a mix of key + c * golden.
// Cells are independent of call granularity, so any slice of a stream can be
// regenerated in isolation.
inline constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

// Uniform in (0,1), exclusive at both ends: 52-bit grid offset by half a step.
inline double u01_from_bits(std::uint64_t h) {
  return static_cast<double>(h >> 12) * 0x1.0p-52 + 0x1.0p-53;
}

// Scalar transcendental kernels; accurate to ~1e-13 relative over the ranges
// the library exercises. exp1 handles overflow/underflow clamps; log1 and
// norm_icdf require finite positive normal input / u in (0,1).
double exp1(double x);
double log1(double x);
double norm_icdf(double u);

// dst[i] = Phi^{-1}(u01(mix64(key + (ctr0+i)*golden)))
void fill_normal(double* dst, std::size_t n, std::uint64_t key, std::uint64_t ctr0);

// out[i] = fma(s, eps_i, rho*u[i]) with s = sqrt(1-rho^2); eps from the
// counter stream as in fill_normal. out may not alias u.
void cn_update(double* out, const double* u, std::size_t n, double rho,
               std::uint64_t key, std::uint64_t ctr0);

// log of the arithmetic mean of exp(lw[i]); max-shifted, n >= 1.
double lse_mean(const double* lw, std::size_t n);

void exp_batch(double* dst, const double* src, std::size_t n);
void log_batch(double* dst, const double* src, std::size_t n);

namespace detail {
struct Table {
  void (*fill_normal)(double*, std::size_t, std::uint64_t, std::uint64_t);
  void (*cn_update)(double*, const double*, std::size_t, double, std::uint64_t, std::uint64_t);
  double (*lse_mean)(const double*, std::size_t);
  void (*exp_batch)(double*, const double*, std::size_t);
  void (*log_batch)(double*, const double*, std::size_t);
};
namespace scalar {
void fill_normal(double*, std::size_t, std::uint64_t, std::uint64_t);
void cn_update(double*, const double*, std::size_t, double, std::uint64_t, std::uint64_t);
double lse_mean(const double*, std::size_t);
void exp_batch(double*, const double*, std::size_t);
void log_batch(double*, const double*, std::size_t);
}  // namespace scalar
namespace avx2 {
void fill_normal(double*, std::size_t, std::uint64_t, std::uint64_t);
void cn_update(double*, const double*, std::size_t, double, std::uint64_t, std::uint64_t);
double lse_mean(const double*, std::size_t);
void exp_batch(double*, const double*, std::size_t);
void log_batch(double*, const double*, std::size_t);
}  // namespace avx2
}  // namespace detail

}  // namespace cpm::kern
