#pragma once

#include <cstddef>

namespace coroute {

#ifdef COROUTE_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

namespace kernels {

/// Row-major products. `accumulate` adds into c instead of overwriting.
/// Every output element is summed over k in ascending order, so the serial
/// and parallel variants agree bit for bit.
///   matmul:    c(n x m)  = a(n x k)  * b(k x m)
///   matmul_nt: c(n x m)  = a(n x k)  * b(m x k)^T
///   matmul_tn: c(k x m)  = a(n x k)^T * b(n x m)
void matmul_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_nt_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_tn_serial(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);

void matmul_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_nt_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_tn_parallel(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);

/// Dispatch: parallel once n*k*m reaches parallel_threshold(), else serial.
void matmul(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_nt(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);
void matmul_tn(const Real* a, const Real* b, Real* c, int n, int k, int m, bool accumulate = false);

std::size_t parallel_threshold();
void set_parallel_threshold(std::size_t flops);

/// Caps OpenMP threads for every parallel region in the library (0 = runtime default).
void set_thread_limit(int threads);
int thread_limit();

}  // namespace kernels
}  // namespace coroute
