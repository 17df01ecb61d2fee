#pragma once
// Shared polynomial data and scalar reference transcendentals. The AVX2
// translation unit mirrors these operation-for-operation; any change here
// must be reflected there to preserve bit-identical results.
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace cpm::kern::detail {

// --- normal quantile: Chebyshev fits on three regions -----------------------
// central: |u-0.5| <= 0.425, variable z = (q/0.425)^2 mapped to [-1,1]
inline constexpr double CHEB_A[21] = {
    2.87347353922790205e+00,  4.24952368745745435e-01,  6.98631763347943718e-02,
    1.44271181255909951e-02,  3.32010048701398500e-03,  8.13806576119532324e-04,
    2.07868407538243653e-04,  5.46572536670146078e-05,  1.46838734739914257e-05,
    4.01073897743346130e-06,  1.10998242562527152e-06,  3.10489772974808122e-07,
    8.76239949896056081e-08,  2.49135736316563744e-08,  7.12872796165738422e-09,
    2.05103606753311958e-09,  5.92946812436927811e-10,  1.72141244320667506e-10,
    5.01634753196402121e-11,  1.46656201609913300e-11,  4.30169546020042249e-12};
// near tail: r = sqrt(-log(min(u,1-u))) in [r0, 5], r0 = sqrt(-log(0.075))
inline constexpr double CHEB_B[21] = {
    4.09174927548617617e+00,  2.59989841803031885e+00,  -4.09558168734470707e-02,
    8.81318624046016456e-03,  -1.96464627153854730e-03, 4.48748050819003960e-04,
    -1.04455398138122326e-04, 2.47026045178945454e-05,  -5.92340678838693774e-06,
    1.43798122551475782e-06,  -3.52949408851984560e-07, 8.74822863241301215e-08,
    -2.18717613394118183e-08, 5.50999256804407932e-09,  -1.39738232916642386e-09,
    3.56466562698074499e-10,  -9.14016557742204203e-11, 2.35426260656264749e-11,
    -6.08836536015587151e-12, 1.58028194059108400e-12,  -4.11822625613883586e-13};
// far tail: r in [5, 6.7]
inline constexpr double CHEB_C[13] = {
    7.89987555214153403e+00,  1.23967082663827344e+00,  -2.16051401559489483e-03,
    1.30856192509622496e-04,  -8.15800140398590630e-06, 5.18132370994461324e-07,
    -3.33415286742751879e-08, 2.16680021652515337e-09,  -1.41927391113715021e-10,
    9.35732661260542810e-12,  -6.20573957492140242e-13, 4.12696477635826631e-14,
    -2.62155606582912029e-15};

inline constexpr double ICDF_R0 = 1.6094306960679687;
inline constexpr double ICDF_B_SHIFT = 5.0 + ICDF_R0;
inline constexpr double ICDF_B_SCALE = 1.0 / (5.0 - ICDF_R0);
inline constexpr double ICDF_C_SHIFT = 11.7;
inline constexpr double ICDF_C_SCALE = 1.0 / 1.7;

// --- exp: argument reduction x = n*ln2 + r, degree-12 Taylor on r -----------
inline constexpr double LOG2E = 1.4426950408889634074;
inline constexpr double EXP_LN2_HI = 6.93147180369123816490e-01;
inline constexpr double EXP_LN2_LO = 1.90821492927058770002e-10;
inline constexpr double EXP_C[13] = {
    1.0,
    1.0,
    1.0 / 2,
    1.0 / 6,
    1.0 / 24,
    1.0 / 120,
    1.0 / 720,
    1.0 / 5040,
    1.0 / 40320,
    1.0 / 362880,
    1.0 / 3628800,
    1.0 / 39916800,
    1.0 / 479001600};
inline constexpr double EXP_OVERFLOW = 709.0;
inline constexpr double EXP_UNDERFLOW = -745.0;
inline constexpr double EXP_N_CLAMP = 1500.0;

// --- log: mantissa/exponent split, atanh series in s = (m-1)/(m+1) ----------
inline constexpr double SQRT2 = 1.4142135623730951;
inline constexpr double LOG_C[9] = {
    2.0,      2.0 / 3,  2.0 / 5,  2.0 / 7, 2.0 / 9,
    2.0 / 11, 2.0 / 13, 2.0 / 15, 2.0 / 17};

inline constexpr std::uint64_t U01_SHIFT = 12;

template <int N>
inline double clenshaw(const double (&c)[N], double x) {
  double tx = 2.0 * x;
  double b1 = 0.0, b2 = 0.0;
  for (int k = N - 1; k >= 1; --k) {
    double t = std::fma(tx, b1, c[k] - b2);
    b2 = b1;
    b1 = t;
  }
  return std::fma(x, b1, c[0] - b2);
}

inline double exp_impl(double x) {
  double nd = std::nearbyint(x * LOG2E);
  nd = std::min(std::max(nd, -EXP_N_CLAMP), EXP_N_CLAMP);
  double r = std::fma(nd, -EXP_LN2_HI, x);
  r = std::fma(nd, -EXP_LN2_LO, r);
  double p = EXP_C[12];
  for (int k = 11; k >= 0; --k) p = std::fma(p, r, EXP_C[k]);
  std::int64_t k = static_cast<std::int64_t>(nd);
  std::int64_t k1 = ((k + 1500) >> 1) - 750;
  std::int64_t k2 = k - k1;
  double s1 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k1) << 52);
  double s2 = std::bit_cast<double>(static_cast<std::uint64_t>(1023 + k2) << 52);
  double res = (p * s1) * s2;
  if (x > EXP_OVERFLOW) res = std::numeric_limits<double>::infinity();
  if (x < EXP_UNDERFLOW) res = 0.0;
  return res;
}

inline double log_impl(double x) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  std::int64_t e = static_cast<std::int64_t>(bits >> 52) - 1023;
  double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFull) | 0x3FF0000000000000ull);
  bool big = m > SQRT2;
  if (big) {
    m = m * 0.5;
    e += 1;
  }
  double s = (m - 1.0) / (m + 1.0);
  double z = s * s;
  double p = LOG_C[8];
  for (int k = 7; k >= 0; --k) p = std::fma(p, z, LOG_C[k]);
  double lnm = s * p;
  double ed = static_cast<double>(e);
  return std::fma(ed, EXP_LN2_HI, std::fma(ed, EXP_LN2_LO, lnm));
}

inline double norm_icdf_impl(double u) {
  double q = u - 0.5;
  if (std::fabs(q) <= 0.425) {
    double t = q * (1.0 / 0.425);
    double z = t * t;
    return q * clenshaw(CHEB_A, 2.0 * z - 1.0);
  }
  double p = std::min(u, 1.0 - u);
  double r = std::sqrt(-log_impl(p));
  double v;
  if (r <= 5.0) {
    v = clenshaw(CHEB_B, std::fma(2.0, r, -ICDF_B_SHIFT) * ICDF_B_SCALE);
  } else {
    v = clenshaw(CHEB_C, std::fma(2.0, r, -ICDF_C_SHIFT) * ICDF_C_SCALE);
  }
  return u < 0.5 ? -v : v;
}

inline double u01_impl(std::uint64_t h) {
  return static_cast<double>(h >> U01_SHIFT) * 0x1.0p-52 + 0x1.0p-53;
}

}  // namespace cpm::kern::detail
