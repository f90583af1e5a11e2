#pragma once
// Dense arithmetic kernels used by the hot loops (GEMM, dot products,
// elementwise vector ops). Scalar reference implementations plus AVX2
// variants selected once at startup from CPUID; PAEC_KERNELS=scalar|avx2
// overrides the choice. Both backends compute the same quantities; the
// test suite checks them against each other on random inputs.

#include <cstddef>

namespace paec::kernels {

enum class Backend { scalar, avx2 };

Backend active_backend();
const char* backend_name();
// Test hook; throws if the requested backend is unsupported on this CPU.
void force_backend(Backend b);

// Number of worker threads used by gemm for large problems (>= 1).
int thread_count();
void set_thread_count(int n);

// C(M x N) = alpha * op(A) * op(B) + beta * C, row-major.
// transA: op(A) = A^T where A is (K x M); transB: op(B) = B^T where B is (N x K).
// transA && transB together is not supported.
void dgemm(bool transA, bool transB, int M, int N, int K, double alpha,
           const double* A, int lda, const double* B, int ldb,
           double beta, double* C, int ldc);
void sgemm(bool transA, bool transB, int M, int N, int K, float alpha,
           const float* A, int lda, const float* B, int ldb,
           float beta, float* C, int ldc);

double dot(const double* a, const double* b, std::size_t n);
float  dot(const float* a, const float* b, std::size_t n);

// y += a * x
void axpy(std::size_t n, double a, const double* x, double* y);
void axpy(std::size_t n, float a, const float* x, float* y);

void vadd(const double* a, const double* b, double* y, std::size_t n);
void vadd(const float* a, const float* b, float* y, std::size_t n);
void vsub(const double* a, const double* b, double* y, std::size_t n);
void vsub(const float* a, const float* b, float* y, std::size_t n);
void vmul(const double* a, const double* b, double* y, std::size_t n);
void vmul(const float* a, const float* b, float* y, std::size_t n);
void vscale(double a, double* y, std::size_t n);
void vscale(float a, float* y, std::size_t n);

double sumsq(const double* a, std::size_t n);
float  sumsq(const float* a, std::size_t n);
double sum(const double* a, std::size_t n);
float  sum(const float* a, std::size_t n);

// Convenience for templated callers.
template <class S>
void gemm(bool transA, bool transB, int M, int N, int K, S alpha,
          const S* A, int lda, const S* B, int ldb, S beta, S* C, int ldc) {
  if constexpr (sizeof(S) == sizeof(double))
    dgemm(transA, transB, M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  else
    sgemm(transA, transB, M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

} // namespace paec::kernels
