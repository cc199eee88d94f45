#include "coroute/kernels.hpp"

#include <atomic>

#include <omp.h>

namespace coroute::kernels {
namespace {

std::atomic<std::size_t> g_threshold{1u << 16};

inline void row_nn(const Real* a, const Real* b, Real* c, int i, int k, int m, bool acc) {
  Real* ci = c + static_cast<std::size_t>(i) * m;
  if (!acc) {
    for (int j = 0; j < m; ++j) ci[j] = 0;
  }
  const Real* ai = a + static_cast<std::size_t>(i) * k;
  for (int p = 0; p < k; ++p) {
    const Real av = ai[p];
    const Real* bp = b + static_cast<std::size_t>(p) * m;
    for (int j = 0; j < m; ++j) ci[j] += av * bp[j];
  }
}

inline void row_nt(const Real* a, const Real* b, Real* c, int i, int k, int m, bool acc) {
  Real* ci = c + static_cast<std::size_t>(i) * m;
  const Real* ai = a + static_cast<std::size_t>(i) * k;
  for (int j = 0; j < m; ++j) {
    const Real* bj = b + static_cast<std::size_t>(j) * k;
    Real s = 0;
    for (int p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = acc ? ci[j] + s : s;
  }
}

// Output row p of a^T b: sum over i of a[i][p] * b[i][:].
inline void row_tn(const Real* a, const Real* b, Real* c, int p, int n, int k, int m, bool acc) {
  Real* cp = c + static_cast<std::size_t>(p) * m;
  if (!acc) {
    for (int j = 0; j < m; ++j) cp[j] = 0;
  }
  for (int i = 0; i < n; ++i) {
    const Real av = a[static_cast<std::size_t>(i) * k + p];
    const Real* bi = b + static_cast<std::size_t>(i) * m;
    for (int j = 0; j < m; ++j) cp[j] += av * bi[j];
  }
}

bool big(int n, int k, int m) {
  return static_cast<std::size_t>(n) * k * m >= g_threshold.load(std::memory_order_relaxed);
}

}  // namespace

void matmul_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  for (int i = 0; i < n; ++i) row_nn(a, b, c, i, k, m, acc);
}

void matmul_nt_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  for (int i = 0; i < n; ++i) row_nt(a, b, c, i, k, m, acc);
}

void matmul_tn_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  for (int p = 0; p < k; ++p) row_tn(a, b, c, p, n, k, m, acc);
}

void matmul_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) row_nn(a, b, c, i, k, m, acc);
}

void matmul_nt_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) row_nt(a, b, c, i, k, m, acc);
}

void matmul_tn_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
#pragma omp parallel for schedule(static)
  for (int p = 0; p < k; ++p) row_tn(a, b, c, p, n, k, m, acc);
}

void matmul(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  if (big(n, k, m) && !omp_in_parallel()) {
    matmul_parallel(a, b, c, n, k, m, acc);
  } else {
    matmul_serial(a, b, c, n, k, m, acc);
  }
}

void matmul_nt(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  if (big(n, k, m) && !omp_in_parallel()) {
    matmul_nt_parallel(a, b, c, n, k, m, acc);
  } else {
    matmul_nt_serial(a, b, c, n, k, m, acc);
  }
}

void matmul_tn(const Real* a, const Real* b, Real* c, int n, int k, int m, bool acc) {
  if (big(n, k, m) && !omp_in_parallel()) {
    matmul_tn_parallel(a, b, c, n, k, m, acc);
  } else {
    matmul_tn_serial(a, b, c, n, k, m, acc);
  }
}

std::size_t parallel_threshold() { return g_threshold.load(); }
void set_parallel_threshold(std::size_t flops) { g_threshold.store(flops); }

namespace {
std::atomic<int> g_threads{0};
}

void set_thread_limit(int threads) {
  g_threads.store(threads < 0 ? 0 : threads);
  if (threads > 0) omp_set_num_threads(threads);
}

int thread_limit() {
  const int t = g_threads.load();
  return t > 0 ? t : omp_get_max_threads();
}

}  // namespace coroute::kernels
