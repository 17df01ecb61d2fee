#include "cpm/kernels.hpp"

#include "kernels_common.hpp"

#ifdef CPM_NO_AVX2

namespace cpm::kern::detail::avx2 {
void fill_normal(double* dst, std::size_t n, std::uint64_t key, std::uint64_t ctr0) {
  scalar::fill_normal(dst, n, key, ctr0);
}
void cn_update(double* out, const double* u, std::size_t n, double rho,
               std::uint64_t key, std::uint64_t ctr0) {
  scalar::cn_update(out, u, n, rho, key, ctr0);
}
double lse_mean(const double* lw, std::size_t n) { return scalar::lse_mean(lw, n); }
void exp_batch(double* dst, const double* src, std::size_t n) {
  scalar::exp_batch(dst, src, n);
}
void log_batch(double* dst, const double* src, std::size_t n) {
  scalar::log_batch(dst, src, n);
}
}  // namespace cpm::kern::detail::avx2

#else

#include <immintrin.h>

namespace cpm::kern::detail::avx2 {
namespace {

inline __m256i mul64(__m256i a, __m256i b) {
  __m256i lo = _mm256_mul_epu32(a, b);
  __m256i m1 = _mm256_mul_epu32(_mm256_srli_epi64(a, 32), b);
  __m256i m2 = _mm256_mul_epu32(a, _mm256_srli_epi64(b, 32));
  __m256i hi = _mm256_add_epi64(m1, m2);
  return _mm256_add_epi64(lo, _mm256_slli_epi64(hi, 32));
}

inline __m256i mix64v(__m256i z) {
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
  z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ull)));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
  z = mul64(z, _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBull)));
  z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
  return z;
}

// exact u64 (< 2^52) -> double
inline __m256d u52_to_pd(__m256i v) {
  __m256i k = _mm256_or_si256(v, _mm256_set1_epi64x(0x4330000000000000ll));
  return _mm256_sub_pd(_mm256_castsi256_pd(k), _mm256_set1_pd(0x1.0p52));
}

inline __m256d u01v(__m256i h) {
  __m256d d = u52_to_pd(_mm256_srli_epi64(h, U01_SHIFT));
  return _mm256_add_pd(_mm256_mul_pd(d, _mm256_set1_pd(0x1.0p-52)),
                       _mm256_set1_pd(0x1.0p-53));
}

inline __m256d negate(__m256d x) { return _mm256_xor_pd(x, _mm256_set1_pd(-0.0)); }

inline __m256d exp_v(__m256d x) {
  __m256d nd = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(LOG2E)),
                               _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  nd = _mm256_min_pd(_mm256_max_pd(nd, _mm256_set1_pd(-EXP_N_CLAMP)),
                     _mm256_set1_pd(EXP_N_CLAMP));
  __m256d r = _mm256_fmadd_pd(nd, _mm256_set1_pd(-EXP_LN2_HI), x);
  r = _mm256_fmadd_pd(nd, _mm256_set1_pd(-EXP_LN2_LO), r);
  __m256d p = _mm256_set1_pd(EXP_C[12]);
  for (int k = 11; k >= 0; --k) p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(EXP_C[k]));
  __m256i k64 = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(nd));
  __m256i j = _mm256_add_epi64(k64, _mm256_set1_epi64x(1500));
  __m256i k1 = _mm256_sub_epi64(_mm256_srli_epi64(j, 1), _mm256_set1_epi64x(750));
  __m256i k2 = _mm256_sub_epi64(k64, k1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  __m256d s1 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k1, bias), 52));
  __m256d s2 = _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k2, bias), 52));
  __m256d res = _mm256_mul_pd(_mm256_mul_pd(p, s1), s2);
  __m256d over = _mm256_cmp_pd(x, _mm256_set1_pd(EXP_OVERFLOW), _CMP_GT_OQ);
  res = _mm256_blendv_pd(res, _mm256_set1_pd(std::numeric_limits<double>::infinity()), over);
  __m256d under = _mm256_cmp_pd(x, _mm256_set1_pd(EXP_UNDERFLOW), _CMP_LT_OQ);
  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), under);
  return res;
}

inline __m256d log_v(__m256d x) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256i bits = _mm256_castpd_si256(x);
  __m256i e64 = _mm256_sub_epi64(_mm256_srli_epi64(bits, 52), _mm256_set1_epi64x(1023));
  __m256i mbits = _mm256_or_si256(
      _mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll)),
      _mm256_set1_epi64x(0x3FF0000000000000ll));
  __m256d m = _mm256_castsi256_pd(mbits);
  __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(SQRT2), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);
  __m256d ed = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(e64, magic)),
                             _mm256_set1_pd(6755399441055744.0));
  ed = _mm256_add_pd(ed, _mm256_and_pd(big, one));
  __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  __m256d z = _mm256_mul_pd(s, s);
  __m256d p = _mm256_set1_pd(LOG_C[8]);
  for (int k = 7; k >= 0; --k) p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(LOG_C[k]));
  __m256d lnm = _mm256_mul_pd(s, p);
  return _mm256_fmadd_pd(ed, _mm256_set1_pd(EXP_LN2_HI),
                         _mm256_fmadd_pd(ed, _mm256_set1_pd(EXP_LN2_LO), lnm));
}

template <int N>
inline __m256d clenshaw_v(const double (&c)[N], __m256d x) {
  __m256d tx = _mm256_add_pd(x, x);
  __m256d b1 = _mm256_setzero_pd();
  __m256d b2 = _mm256_setzero_pd();
  for (int k = N - 1; k >= 1; --k) {
    __m256d t = _mm256_fmadd_pd(tx, b1, _mm256_sub_pd(_mm256_set1_pd(c[k]), b2));
    b2 = b1;
    b1 = t;
  }
  return _mm256_fmadd_pd(x, b1, _mm256_sub_pd(_mm256_set1_pd(c[0]), b2));
}

inline __m256d norm_icdf_v(__m256d u) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256d q = _mm256_sub_pd(u, half);
  __m256d t = _mm256_mul_pd(q, _mm256_set1_pd(1.0 / 0.425));
  __m256d zc = _mm256_mul_pd(t, t);
  __m256d cen_arg = _mm256_sub_pd(_mm256_add_pd(zc, zc), one);
  __m256d cen = _mm256_mul_pd(q, clenshaw_v(CHEB_A, cen_arg));
  __m256d p = _mm256_min_pd(u, _mm256_sub_pd(one, u));
  __m256d r = _mm256_sqrt_pd(negate(log_v(p)));
  const __m256d two = _mm256_set1_pd(2.0);
  __m256d xb = _mm256_mul_pd(_mm256_fmadd_pd(two, r, _mm256_set1_pd(-ICDF_B_SHIFT)),
                             _mm256_set1_pd(ICDF_B_SCALE));
  __m256d vb = clenshaw_v(CHEB_B, xb);
  __m256d xc = _mm256_mul_pd(_mm256_fmadd_pd(two, r, _mm256_set1_pd(-ICDF_C_SHIFT)),
                             _mm256_set1_pd(ICDF_C_SCALE));
  __m256d vc = clenshaw_v(CHEB_C, xc);
  __m256d use_c = _mm256_cmp_pd(r, _mm256_set1_pd(5.0), _CMP_GT_OQ);
  __m256d vt = _mm256_blendv_pd(vb, vc, use_c);
  __m256d neg = _mm256_cmp_pd(u, half, _CMP_LT_OQ);
  vt = _mm256_blendv_pd(vt, negate(vt), neg);
  __m256d absq = _mm256_andnot_pd(_mm256_set1_pd(-0.0), q);
  __m256d central = _mm256_cmp_pd(absq, _mm256_set1_pd(0.425), _CMP_LE_OQ);
  return _mm256_blendv_pd(vt, cen, central);
}

inline __m256i counter_hash(std::uint64_t key, std::uint64_t ctr0, std::size_t i) {
  const __m256i inc = _mm256_set_epi64x(3, 2, 1, 0);
  __m256i ctr = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(ctr0 + i)), inc);
  __m256i cell = mul64(ctr, _mm256_set1_epi64x(static_cast<long long>(golden)));
  return mix64v(_mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(key)), cell));
}

// Paired variants keep two independent dependency chains in flight; per-lane
// arithmetic is identical to the single-vector versions above, so results stay
// bit-equal to the scalar path.
template <int N>
inline void clenshaw_v2(const double (&c)[N], __m256d x0, __m256d x1, __m256d& y0,
                        __m256d& y1) {
  __m256d tx0 = _mm256_add_pd(x0, x0);
  __m256d tx1 = _mm256_add_pd(x1, x1);
  __m256d a0 = _mm256_setzero_pd(), b0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd(), b1 = _mm256_setzero_pd();
  for (int k = N - 1; k >= 1; --k) {
    const __m256d ck = _mm256_set1_pd(c[k]);
    __m256d t0 = _mm256_fmadd_pd(tx0, a0, _mm256_sub_pd(ck, b0));
    __m256d t1 = _mm256_fmadd_pd(tx1, a1, _mm256_sub_pd(ck, b1));
    b0 = a0;
    a0 = t0;
    b1 = a1;
    a1 = t1;
  }
  const __m256d c0 = _mm256_set1_pd(c[0]);
  y0 = _mm256_fmadd_pd(x0, a0, _mm256_sub_pd(c0, b0));
  y1 = _mm256_fmadd_pd(x1, a1, _mm256_sub_pd(c0, b1));
}

inline void log_v2(__m256d x0, __m256d x1, __m256d& r0, __m256d& r1) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256i mant = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFll);
  const __m256i unit = _mm256_set1_epi64x(0x3FF0000000000000ll);
  const __m256i magic = _mm256_set1_epi64x(0x4338000000000000ll);
  const __m256d magicd = _mm256_set1_pd(6755399441055744.0);
  const __m256d sqrt2 = _mm256_set1_pd(SQRT2);
  const __m256d half = _mm256_set1_pd(0.5);
  __m256i bits0 = _mm256_castpd_si256(x0);
  __m256i bits1 = _mm256_castpd_si256(x1);
  __m256i e0 = _mm256_sub_epi64(_mm256_srli_epi64(bits0, 52), _mm256_set1_epi64x(1023));
  __m256i e1 = _mm256_sub_epi64(_mm256_srli_epi64(bits1, 52), _mm256_set1_epi64x(1023));
  __m256d m0 = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits0, mant), unit));
  __m256d m1 = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits1, mant), unit));
  __m256d big0 = _mm256_cmp_pd(m0, sqrt2, _CMP_GT_OQ);
  __m256d big1 = _mm256_cmp_pd(m1, sqrt2, _CMP_GT_OQ);
  m0 = _mm256_blendv_pd(m0, _mm256_mul_pd(m0, half), big0);
  m1 = _mm256_blendv_pd(m1, _mm256_mul_pd(m1, half), big1);
  __m256d ed0 = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(e0, magic)), magicd);
  __m256d ed1 = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_add_epi64(e1, magic)), magicd);
  ed0 = _mm256_add_pd(ed0, _mm256_and_pd(big0, one));
  ed1 = _mm256_add_pd(ed1, _mm256_and_pd(big1, one));
  __m256d s0 = _mm256_div_pd(_mm256_sub_pd(m0, one), _mm256_add_pd(m0, one));
  __m256d s1 = _mm256_div_pd(_mm256_sub_pd(m1, one), _mm256_add_pd(m1, one));
  __m256d z0 = _mm256_mul_pd(s0, s0);
  __m256d z1 = _mm256_mul_pd(s1, s1);
  __m256d p0 = _mm256_set1_pd(LOG_C[8]);
  __m256d p1 = p0;
  for (int k = 7; k >= 0; --k) {
    const __m256d ck = _mm256_set1_pd(LOG_C[k]);
    p0 = _mm256_fmadd_pd(p0, z0, ck);
    p1 = _mm256_fmadd_pd(p1, z1, ck);
  }
  __m256d lnm0 = _mm256_mul_pd(s0, p0);
  __m256d lnm1 = _mm256_mul_pd(s1, p1);
  const __m256d lhi = _mm256_set1_pd(EXP_LN2_HI);
  const __m256d llo = _mm256_set1_pd(EXP_LN2_LO);
  r0 = _mm256_fmadd_pd(ed0, lhi, _mm256_fmadd_pd(ed0, llo, lnm0));
  r1 = _mm256_fmadd_pd(ed1, lhi, _mm256_fmadd_pd(ed1, llo, lnm1));
}

inline void norm_icdf_v2(__m256d u0, __m256d u1, __m256d& r0, __m256d& r1) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d inv = _mm256_set1_pd(1.0 / 0.425);
  __m256d q0 = _mm256_sub_pd(u0, half);
  __m256d q1 = _mm256_sub_pd(u1, half);
  __m256d t0 = _mm256_mul_pd(q0, inv);
  __m256d t1 = _mm256_mul_pd(q1, inv);
  __m256d zc0 = _mm256_mul_pd(t0, t0);
  __m256d zc1 = _mm256_mul_pd(t1, t1);
  __m256d ca0, ca1;
  clenshaw_v2(CHEB_A, _mm256_sub_pd(_mm256_add_pd(zc0, zc0), one),
              _mm256_sub_pd(_mm256_add_pd(zc1, zc1), one), ca0, ca1);
  __m256d cen0 = _mm256_mul_pd(q0, ca0);
  __m256d cen1 = _mm256_mul_pd(q1, ca1);
  const __m256d limit = _mm256_set1_pd(0.425);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d central0 = _mm256_cmp_pd(_mm256_andnot_pd(sign, q0), limit, _CMP_LE_OQ);
  __m256d central1 = _mm256_cmp_pd(_mm256_andnot_pd(sign, q1), limit, _CMP_LE_OQ);
  const int all0 = _mm256_movemask_pd(central0);
  const int all1 = _mm256_movemask_pd(central1);
  if (all0 == 0xF && all1 == 0xF) {
    r0 = cen0;
    r1 = cen1;
    return;
  }
  __m256d p0 = _mm256_min_pd(u0, _mm256_sub_pd(one, u0));
  __m256d p1 = _mm256_min_pd(u1, _mm256_sub_pd(one, u1));
  __m256d lg0, lg1;
  log_v2(p0, p1, lg0, lg1);
  __m256d rr0 = _mm256_sqrt_pd(negate(lg0));
  __m256d rr1 = _mm256_sqrt_pd(negate(lg1));
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d bshift = _mm256_set1_pd(-ICDF_B_SHIFT);
  const __m256d bscale = _mm256_set1_pd(ICDF_B_SCALE);
  const __m256d cshift = _mm256_set1_pd(-ICDF_C_SHIFT);
  const __m256d cscale = _mm256_set1_pd(ICDF_C_SCALE);
  __m256d vb0, vb1, vc0, vc1;
  clenshaw_v2(CHEB_B, _mm256_mul_pd(_mm256_fmadd_pd(two, rr0, bshift), bscale),
              _mm256_mul_pd(_mm256_fmadd_pd(two, rr1, bshift), bscale), vb0, vb1);
  clenshaw_v2(CHEB_C, _mm256_mul_pd(_mm256_fmadd_pd(two, rr0, cshift), cscale),
              _mm256_mul_pd(_mm256_fmadd_pd(two, rr1, cshift), cscale), vc0, vc1);
  const __m256d five = _mm256_set1_pd(5.0);
  __m256d vt0 = _mm256_blendv_pd(vb0, vc0, _mm256_cmp_pd(rr0, five, _CMP_GT_OQ));
  __m256d vt1 = _mm256_blendv_pd(vb1, vc1, _mm256_cmp_pd(rr1, five, _CMP_GT_OQ));
  vt0 = _mm256_blendv_pd(vt0, negate(vt0), _mm256_cmp_pd(u0, half, _CMP_LT_OQ));
  vt1 = _mm256_blendv_pd(vt1, negate(vt1), _mm256_cmp_pd(u1, half, _CMP_LT_OQ));
  r0 = _mm256_blendv_pd(vt0, cen0, central0);
  r1 = _mm256_blendv_pd(vt1, cen1, central1);
}

inline void counter_hash2(std::uint64_t key, std::uint64_t ctr0, std::size_t i, __m256i& h0,
                          __m256i& h1) {
  const __m256i inc0 = _mm256_set_epi64x(3, 2, 1, 0);
  const __m256i inc1 = _mm256_set_epi64x(7, 6, 5, 4);
  const __m256i base = _mm256_set1_epi64x(static_cast<long long>(ctr0 + i));
  const __m256i g = _mm256_set1_epi64x(static_cast<long long>(golden));
  const __m256i kv = _mm256_set1_epi64x(static_cast<long long>(key));
  __m256i c0 = mul64(_mm256_add_epi64(base, inc0), g);
  __m256i c1 = mul64(_mm256_add_epi64(base, inc1), g);
  h0 = mix64v(_mm256_add_epi64(kv, c0));
  h1 = mix64v(_mm256_add_epi64(kv, c1));
}

}  // namespace

void fill_normal(double* dst, std::size_t n, std::uint64_t key, std::uint64_t ctr0) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i h0, h1;
    counter_hash2(key, ctr0, i, h0, h1);
    __m256d z0, z1;
    norm_icdf_v2(u01v(h0), u01v(h1), z0, z1);
    _mm256_storeu_pd(dst + i, z0);
    _mm256_storeu_pd(dst + i + 4, z1);
  }
  for (; i + 4 <= n; i += 4) {
    __m256d u = u01v(counter_hash(key, ctr0, i));
    _mm256_storeu_pd(dst + i, norm_icdf_v(u));
  }
  for (; i < n; ++i) {
    std::uint64_t h = mix64(key + (ctr0 + i) * golden);
    dst[i] = norm_icdf_impl(u01_impl(h));
  }
}

void cn_update(double* out, const double* u, std::size_t n, double rho,
               std::uint64_t key, std::uint64_t ctr0) {
  const double s = std::sqrt(std::fma(-rho, rho, 1.0));
  const __m256d vs = _mm256_set1_pd(s);
  const __m256d vrho = _mm256_set1_pd(rho);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256i h0, h1;
    counter_hash2(key, ctr0, i, h0, h1);
    __m256d e0, e1;
    norm_icdf_v2(u01v(h0), u01v(h1), e0, e1);
    __m256d u0 = _mm256_loadu_pd(u + i);
    __m256d u1 = _mm256_loadu_pd(u + i + 4);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vs, e0, _mm256_mul_pd(vrho, u0)));
    _mm256_storeu_pd(out + i + 4, _mm256_fmadd_pd(vs, e1, _mm256_mul_pd(vrho, u1)));
  }
  for (; i + 4 <= n; i += 4) {
    __m256d eps = norm_icdf_v(u01v(counter_hash(key, ctr0, i)));
    __m256d vu = _mm256_loadu_pd(u + i);
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vs, eps, _mm256_mul_pd(vrho, vu)));
  }
  for (; i < n; ++i) {
    std::uint64_t h = mix64(key + (ctr0 + i) * golden);
    double eps = norm_icdf_impl(u01_impl(h));
    out[i] = std::fma(s, eps, rho * u[i]);
  }
}

double lse_mean(const double* lw, std::size_t n) {
  double m = lw[0];
  const std::size_t nb = n - n % 4;
  if (nb) {
    __m256d vm = _mm256_loadu_pd(lw);
    for (std::size_t i = 4; i < nb; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(lw + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, vm);
    m = std::max(std::max(lanes[0], lanes[1]), std::max(lanes[2], lanes[3]));
  }
  for (std::size_t i = nb; i < n; ++i) m = std::max(m, lw[i]);
  __m256d vacc = _mm256_setzero_pd();
  const __m256d vmax = _mm256_set1_pd(m);
  for (std::size_t i = 0; i < nb; i += 4) {
    vacc = _mm256_add_pd(vacc, exp_v(_mm256_sub_pd(_mm256_loadu_pd(lw + i), vmax)));
  }
  alignas(32) double a[4];
  _mm256_store_pd(a, vacc);
  double tail = 0.0;
  for (std::size_t i = nb; i < n; ++i) tail += exp_impl(lw[i] - m);
  double s = ((a[0] + a[1]) + (a[2] + a[3])) + tail;
  return m + (log_impl(s) - log_impl(static_cast<double>(n)));
}

void exp_batch(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, exp_v(_mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = exp_impl(src[i]);
}

void log_batch(double* dst, const double* src, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(dst + i, log_v(_mm256_loadu_pd(src + i)));
  for (; i < n; ++i) dst[i] = log_impl(src[i]);
}

}  // namespace cpm::kern::detail::avx2

#endif
