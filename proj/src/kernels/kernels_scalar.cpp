// Reference implementations. Plain loops, no intrinsics; these define the
// semantics the AVX2 variants are tested against.

#include "kernels_impl.hpp"

#include <cassert>

namespace paec::kernels::detail {
namespace {

template <class S>
void gemm_ref(bool transA, bool transB, int M, int N, int K, S alpha,
              const S* A, int lda, const S* B, int ldb, S beta, S* C, int ldc) {
  assert(!(transA && transB));
  for (int i = 0; i < M; ++i) {
    S* c = C + static_cast<std::size_t>(i) * ldc;
    if (beta == S(0)) {
      for (int j = 0; j < N; ++j) c[j] = S(0);
    } else if (beta != S(1)) {
      for (int j = 0; j < N; ++j) c[j] *= beta;
    }
  }
  if (!transA && !transB) {
    // C[i,j] += alpha * A[i,k] * B[k,j]
    for (int i = 0; i < M; ++i) {
      const S* a = A + static_cast<std::size_t>(i) * lda;
      S* c = C + static_cast<std::size_t>(i) * ldc;
      for (int k = 0; k < K; ++k) {
        const S av = alpha * a[k];
        if (av == S(0)) continue;
        const S* b = B + static_cast<std::size_t>(k) * ldb;
        for (int j = 0; j < N; ++j) c[j] += av * b[j];
      }
    }
  } else if (transB) {
    // C[i,j] += alpha * A[i,k] * B[j,k]
    for (int i = 0; i < M; ++i) {
      const S* a = A + static_cast<std::size_t>(i) * lda;
      S* c = C + static_cast<std::size_t>(i) * ldc;
      for (int j = 0; j < N; ++j) {
        const S* b = B + static_cast<std::size_t>(j) * ldb;
        S acc = S(0);
        for (int k = 0; k < K; ++k) acc += a[k] * b[k];
        c[j] += alpha * acc;
      }
    }
  } else {
    // A is (K x M); C[i,j] += alpha * A[k,i] * B[k,j]
    for (int k = 0; k < K; ++k) {
      const S* a = A + static_cast<std::size_t>(k) * lda;
      const S* b = B + static_cast<std::size_t>(k) * ldb;
      for (int i = 0; i < M; ++i) {
        const S av = alpha * a[i];
        if (av == S(0)) continue;
        S* c = C + static_cast<std::size_t>(i) * ldc;
        for (int j = 0; j < N; ++j) c[j] += av * b[j];
      }
    }
  }
}

template <class S>
S dot_ref(const S* a, const S* b, std::size_t n) {
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <class S>
void axpy_ref(std::size_t n, S a, const S* x, S* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <class S>
S sumsq_ref(const S* a, std::size_t n) {
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

template <class S>
S sum_ref(const S* a, std::size_t n) {
  S acc = S(0);
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

} // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      &gemm_ref<double>,
      &gemm_ref<float>,
      &dot_ref<double>,
      &dot_ref<float>,
      &axpy_ref<double>,
      &axpy_ref<float>,
      [](const double* a, const double* b, double* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
      },
      [](const double* a, const double* b, double* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
      },
      [](const double* a, const double* b, double* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
      },
      [](const float* a, const float* b, float* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
      },
      [](double a, double* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] *= a;
      },
      [](float a, float* y, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) y[i] *= a;
      },
      &sumsq_ref<double>,
      &sumsq_ref<float>,
      &sum_ref<double>,
      &sum_ref<float>,
  };
  return ops;
}

} // namespace paec::kernels::detail
