#include "cpm/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace cpm::kern {
namespace {

detail::Table scalar_table() {
  return {detail::scalar::fill_normal, detail::scalar::cn_update,
          detail::scalar::lse_mean, detail::scalar::exp_batch,
          detail::scalar::log_batch};
}

detail::Table avx2_table() {
  return {detail::avx2::fill_normal, detail::avx2::cn_update,
          detail::avx2::lse_mean, detail::avx2::exp_batch,
          detail::avx2::log_batch};
}

struct State {
  Isa isa;
  detail::Table table;
};

State initial_state() {
  Isa pick = avx2_available() ? Isa::avx2 : Isa::scalar;
  if (const char* env = std::getenv("CPM_KERNEL")) {
    if (std::strcmp(env, "scalar") == 0) {
      pick = Isa::scalar;
    } else if (std::strcmp(env, "avx2") == 0) {
      if (avx2_available()) {
        pick = Isa::avx2;
      } else {
        std::fprintf(stderr, "CPM_KERNEL=avx2 requested but unavailable; using scalar\n");
        pick = Isa::scalar;
      }
    } else if (std::strcmp(env, "auto") != 0) {
      std::fprintf(stderr, "unknown CPM_KERNEL value '%s'; using auto\n", env);
    }
  }
  return {pick, pick == Isa::avx2 ? avx2_table() : scalar_table()};
}

State& state() {
  static State s = initial_state();
  return s;
}

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) && !defined(CPM_NO_AVX2)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active() { return state().isa; }

void force(Isa isa) {
  if (isa == Isa::avx2 && !avx2_available()) {
    std::fprintf(stderr, "avx2 kernels unavailable; keeping scalar\n");
    isa = Isa::scalar;
  }
  state() = {isa, isa == Isa::avx2 ? avx2_table() : scalar_table()};
}

void fill_normal(double* dst, std::size_t n, std::uint64_t key, std::uint64_t ctr0) {
  state().table.fill_normal(dst, n, key, ctr0);
}

void cn_update(double* out, const double* u, std::size_t n, double rho,
               std::uint64_t key, std::uint64_t ctr0) {
  state().table.cn_update(out, u, n, rho, key, ctr0);
}

double lse_mean(const double* lw, std::size_t n) { return state().table.lse_mean(lw, n); }

void exp_batch(double* dst, const double* src, std::size_t n) {
  state().table.exp_batch(dst, src, n);
}

void log_batch(double* dst, const double* src, std::size_t n) {
  state().table.log_batch(dst, src, n);
}

}  // namespace cpm::kern
