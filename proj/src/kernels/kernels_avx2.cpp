// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here runs unless dispatch.cpp picked the avx2 backend after a
// CPUID check.

#include "kernels_impl.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

#include <cassert>

namespace paec::kernels::detail {
namespace {

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_hadd_ps(lo, lo);
  lo = _mm_hadd_ps(lo, lo);
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

// ---------------------------------------------------------------- sgemm

// 4x16 panel, A indexed either A[i,k] (notrans) or A[k,i] (transA).
template <bool TransA>
inline void spanel_4x16(int K, float alpha, const float* A, int lda, int i0,
                        const float* B, int ldb, int j0, float beta, float* C,
                        int ldc) {
  __m256 acc[4][2];
  for (int r = 0; r < 4; ++r) {
    acc[r][0] = _mm256_setzero_ps();
    acc[r][1] = _mm256_setzero_ps();
  }
  for (int k = 0; k < K; ++k) {
    const float* b = B + static_cast<std::size_t>(k) * ldb + j0;
    const __m256 b0 = _mm256_loadu_ps(b);
    const __m256 b1 = _mm256_loadu_ps(b + 8);
    for (int r = 0; r < 4; ++r) {
      const float av = TransA ? A[static_cast<std::size_t>(k) * lda + i0 + r]
                              : A[static_cast<std::size_t>(i0 + r) * lda + k];
      const __m256 a = _mm256_set1_ps(av);
      acc[r][0] = _mm256_fmadd_ps(a, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_ps(a, b1, acc[r][1]);
    }
  }
  const __m256 va = _mm256_set1_ps(alpha);
  for (int r = 0; r < 4; ++r) {
    float* c = C + static_cast<std::size_t>(i0 + r) * ldc + j0;
    __m256 c0, c1;
    if (beta == 0.0f) {
      c0 = _mm256_mul_ps(va, acc[r][0]);
      c1 = _mm256_mul_ps(va, acc[r][1]);
    } else {
      const __m256 vb = _mm256_set1_ps(beta);
      c0 = _mm256_fmadd_ps(va, acc[r][0], _mm256_mul_ps(vb, _mm256_loadu_ps(c)));
      c1 = _mm256_fmadd_ps(va, acc[r][1],
                           _mm256_mul_ps(vb, _mm256_loadu_ps(c + 8)));
    }
    _mm256_storeu_ps(c, c0);
    _mm256_storeu_ps(c + 8, c1);
  }
}

template <bool TransA>
inline void sgemm_edge(int i0, int i1, int j0, int j1, int K, float alpha,
                       const float* A, int lda, const float* B, int ldb,
                       float beta, float* C, int ldc) {
  for (int i = i0; i < i1; ++i) {
    for (int j = j0; j < j1; ++j) {
      float acc = 0.0f;
      for (int k = 0; k < K; ++k) {
        const float av = TransA ? A[static_cast<std::size_t>(k) * lda + i]
                                : A[static_cast<std::size_t>(i) * lda + k];
        acc += av * B[static_cast<std::size_t>(k) * ldb + j];
      }
      float* c = &C[static_cast<std::size_t>(i) * ldc + j];
      *c = (beta == 0.0f ? 0.0f : beta * *c) + alpha * acc;
    }
  }
}

template <bool TransA>
void sgemm_bcast(int M, int N, int K, float alpha, const float* A, int lda,
                 const float* B, int ldb, float beta, float* C, int ldc) {
  const int MB = M & ~3;
  const int NB = N & ~15;
  for (int i0 = 0; i0 < MB; i0 += 4) {
    for (int j0 = 0; j0 < NB; j0 += 16)
      spanel_4x16<TransA>(K, alpha, A, lda, i0, B, ldb, j0, beta, C, ldc);
    if (NB < N)
      sgemm_edge<TransA>(i0, i0 + 4, NB, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  }
  if (MB < M)
    sgemm_edge<TransA>(MB, M, 0, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

// C[i,j] = sum_k A[i,k] * B[j,k]; rows of both operands are contiguous.
void sgemm_dotted(int M, int N, int K, float alpha, const float* A, int lda,
                  const float* B, int ldb, float beta, float* C, int ldc) {
  const int KB = K & ~7;
  for (int i = 0; i < M; ++i) {
    const float* a = A + static_cast<std::size_t>(i) * lda;
    float* c = C + static_cast<std::size_t>(i) * ldc;
    int j = 0;
    for (; j + 4 <= N; j += 4) {
      __m256 acc0 = _mm256_setzero_ps(), acc1 = _mm256_setzero_ps();
      __m256 acc2 = _mm256_setzero_ps(), acc3 = _mm256_setzero_ps();
      const float* b0 = B + static_cast<std::size_t>(j) * ldb;
      const float* b1 = B + static_cast<std::size_t>(j + 1) * ldb;
      const float* b2 = B + static_cast<std::size_t>(j + 2) * ldb;
      const float* b3 = B + static_cast<std::size_t>(j + 3) * ldb;
      for (int k = 0; k < KB; k += 8) {
        const __m256 va = _mm256_loadu_ps(a + k);
        acc0 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b0 + k), acc0);
        acc1 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b1 + k), acc1);
        acc2 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b2 + k), acc2);
        acc3 = _mm256_fmadd_ps(va, _mm256_loadu_ps(b3 + k), acc3);
      }
      float d0 = hsum(acc0), d1 = hsum(acc1), d2 = hsum(acc2), d3 = hsum(acc3);
      for (int k = KB; k < K; ++k) {
        d0 += a[k] * b0[k];
        d1 += a[k] * b1[k];
        d2 += a[k] * b2[k];
        d3 += a[k] * b3[k];
      }
      const float ds[4] = {d0, d1, d2, d3};
      for (int r = 0; r < 4; ++r)
        c[j + r] = (beta == 0.0f ? 0.0f : beta * c[j + r]) + alpha * ds[r];
    }
    for (; j < N; ++j) {
      const float* b = B + static_cast<std::size_t>(j) * ldb;
      __m256 acc = _mm256_setzero_ps();
      for (int k = 0; k < KB; k += 8)
        acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + k), _mm256_loadu_ps(b + k), acc);
      float d = hsum(acc);
      for (int k = KB; k < K; ++k) d += a[k] * b[k];
      c[j] = (beta == 0.0f ? 0.0f : beta * c[j]) + alpha * d;
    }
  }
}

void sgemm_avx2(bool transA, bool transB, int M, int N, int K, float alpha,
                const float* A, int lda, const float* B, int ldb, float beta,
                float* C, int ldc) {
  assert(!(transA && transB));
  if (transB)
    sgemm_dotted(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  else if (transA)
    sgemm_bcast<true>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  else
    sgemm_bcast<false>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

// ---------------------------------------------------------------- dgemm

template <bool TransA>
inline void dpanel_4x8(int K, double alpha, const double* A, int lda, int i0,
                       const double* B, int ldb, int j0, double beta, double* C,
                       int ldc) {
  __m256d acc[4][2];
  for (int r = 0; r < 4; ++r) {
    acc[r][0] = _mm256_setzero_pd();
    acc[r][1] = _mm256_setzero_pd();
  }
  for (int k = 0; k < K; ++k) {
    const double* b = B + static_cast<std::size_t>(k) * ldb + j0;
    const __m256d b0 = _mm256_loadu_pd(b);
    const __m256d b1 = _mm256_loadu_pd(b + 4);
    for (int r = 0; r < 4; ++r) {
      const double av = TransA ? A[static_cast<std::size_t>(k) * lda + i0 + r]
                               : A[static_cast<std::size_t>(i0 + r) * lda + k];
      const __m256d a = _mm256_set1_pd(av);
      acc[r][0] = _mm256_fmadd_pd(a, b0, acc[r][0]);
      acc[r][1] = _mm256_fmadd_pd(a, b1, acc[r][1]);
    }
  }
  const __m256d va = _mm256_set1_pd(alpha);
  for (int r = 0; r < 4; ++r) {
    double* c = C + static_cast<std::size_t>(i0 + r) * ldc + j0;
    __m256d c0, c1;
    if (beta == 0.0) {
      c0 = _mm256_mul_pd(va, acc[r][0]);
      c1 = _mm256_mul_pd(va, acc[r][1]);
    } else {
      const __m256d vb = _mm256_set1_pd(beta);
      c0 = _mm256_fmadd_pd(va, acc[r][0], _mm256_mul_pd(vb, _mm256_loadu_pd(c)));
      c1 = _mm256_fmadd_pd(va, acc[r][1],
                           _mm256_mul_pd(vb, _mm256_loadu_pd(c + 4)));
    }
    _mm256_storeu_pd(c, c0);
    _mm256_storeu_pd(c + 4, c1);
  }
}

template <bool TransA>
inline void dgemm_edge(int i0, int i1, int j0, int j1, int K, double alpha,
                       const double* A, int lda, const double* B, int ldb,
                       double beta, double* C, int ldc) {
  for (int i = i0; i < i1; ++i) {
    for (int j = j0; j < j1; ++j) {
      double acc = 0.0;
      for (int k = 0; k < K; ++k) {
        const double av = TransA ? A[static_cast<std::size_t>(k) * lda + i]
                                 : A[static_cast<std::size_t>(i) * lda + k];
        acc += av * B[static_cast<std::size_t>(k) * ldb + j];
      }
      double* c = &C[static_cast<std::size_t>(i) * ldc + j];
      *c = (beta == 0.0 ? 0.0 : beta * *c) + alpha * acc;
    }
  }
}

template <bool TransA>
void dgemm_bcast(int M, int N, int K, double alpha, const double* A, int lda,
                 const double* B, int ldb, double beta, double* C, int ldc) {
  const int MB = M & ~3;
  const int NB = N & ~7;
  for (int i0 = 0; i0 < MB; i0 += 4) {
    for (int j0 = 0; j0 < NB; j0 += 8)
      dpanel_4x8<TransA>(K, alpha, A, lda, i0, B, ldb, j0, beta, C, ldc);
    if (NB < N)
      dgemm_edge<TransA>(i0, i0 + 4, NB, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  }
  if (MB < M)
    dgemm_edge<TransA>(MB, M, 0, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

void dgemm_dotted(int M, int N, int K, double alpha, const double* A, int lda,
                  const double* B, int ldb, double beta, double* C, int ldc) {
  const int KB = K & ~3;
  for (int i = 0; i < M; ++i) {
    const double* a = A + static_cast<std::size_t>(i) * lda;
    double* c = C + static_cast<std::size_t>(i) * ldc;
    for (int j = 0; j < N; ++j) {
      const double* b = B + static_cast<std::size_t>(j) * ldb;
      __m256d acc = _mm256_setzero_pd();
      for (int k = 0; k < KB; k += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), acc);
      double d = hsum(acc);
      for (int k = KB; k < K; ++k) d += a[k] * b[k];
      c[j] = (beta == 0.0 ? 0.0 : beta * c[j]) + alpha * d;
    }
  }
}

void dgemm_avx2(bool transA, bool transB, int M, int N, int K, double alpha,
                const double* A, int lda, const double* B, int ldb, double beta,
                double* C, int ldc) {
  assert(!(transA && transB));
  if (transB)
    dgemm_dotted(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  else if (transA)
    dgemm_bcast<true>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
  else
    dgemm_bcast<false>(M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
}

// ----------------------------------------------------------- vector ops

double ddot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  double d = hsum(acc);
  for (; i < n; ++i) d += a[i] * b[i];
  return d;
}

float sdot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc);
  float d = hsum(acc);
  for (; i < n; ++i) d += a[i] * b[i];
  return d;
}

void daxpy_avx2(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void saxpy_avx2(std::size_t n, float a, const float* x, float* y) {
  const __m256 va = _mm256_set1_ps(a);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i),
                                            _mm256_loadu_ps(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

double dsumsq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double d = hsum(acc);
  for (; i < n; ++i) d += a[i] * a[i];
  return d;
}

float ssumsq_avx2(const float* a, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v = _mm256_loadu_ps(a + i);
    acc = _mm256_fmadd_ps(v, v, acc);
  }
  float d = hsum(acc);
  for (; i < n; ++i) d += a[i] * a[i];
  return d;
}

double dsum_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(a + i));
  double d = hsum(acc);
  for (; i < n; ++i) d += a[i];
  return d;
}

float ssum_avx2(const float* a, std::size_t n) {
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(a + i));
  float d = hsum(acc);
  for (; i < n; ++i) d += a[i];
  return d;
}

} // namespace

const Ops* avx2_ops() {
  static const Ops ops = {
      &dgemm_avx2,
      &sgemm_avx2,
      &ddot_avx2,
      &sdot_avx2,
      &daxpy_avx2,
      &saxpy_avx2,
      [](const double* a, const double* b, double* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
          _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
        for (; i < n; ++i) y[i] = a[i] + b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 8 <= n; i += 8)
          _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
        for (; i < n; ++i) y[i] = a[i] + b[i];
      },
      [](const double* a, const double* b, double* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
          _mm256_storeu_pd(y + i, _mm256_sub_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
        for (; i < n; ++i) y[i] = a[i] - b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 8 <= n; i += 8)
          _mm256_storeu_ps(y + i, _mm256_sub_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
        for (; i < n; ++i) y[i] = a[i] - b[i];
      },
      [](const double* a, const double* b, double* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
          _mm256_storeu_pd(y + i, _mm256_mul_pd(_mm256_loadu_pd(a + i),
                                                _mm256_loadu_pd(b + i)));
        for (; i < n; ++i) y[i] = a[i] * b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        std::size_t i = 0;
        for (; i + 8 <= n; i += 8)
          _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i),
                                                _mm256_loadu_ps(b + i)));
        for (; i < n; ++i) y[i] = a[i] * b[i];
      },
      [](double a, double* y, std::size_t n) {
        const __m256d va = _mm256_set1_pd(a);
        std::size_t i = 0;
        for (; i + 4 <= n; i += 4)
          _mm256_storeu_pd(y + i, _mm256_mul_pd(va, _mm256_loadu_pd(y + i)));
        for (; i < n; ++i) y[i] *= a;
      },
      [](float a, float* y, std::size_t n) {
        const __m256 va = _mm256_set1_ps(a);
        std::size_t i = 0;
        for (; i + 8 <= n; i += 8)
          _mm256_storeu_ps(y + i, _mm256_mul_ps(va, _mm256_loadu_ps(y + i)));
        for (; i < n; ++i) y[i] *= a;
      },
      &dsumsq_avx2,
      &ssumsq_avx2,
      &dsum_avx2,
      &ssum_avx2,
  };
  return &ops;
}

} // namespace paec::kernels::detail

#else // !__AVX2__

namespace paec::kernels::detail {
const Ops* avx2_ops() { return nullptr; }
} // namespace paec::kernels::detail

#endif
