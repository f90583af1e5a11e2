#pragma once
// Internal backend table shared between the scalar and AVX2 translation
// units. Only single-threaded GEMM slices live here; threading is layered
// on top in dispatch.cpp by splitting output rows.

#include <cstddef>

namespace paec::kernels::detail {

struct Ops {
  void (*dgemm)(bool transA, bool transB, int M, int N, int K, double alpha,
                const double* A, int lda, const double* B, int ldb,
                double beta, double* C, int ldc);
  void (*sgemm)(bool transA, bool transB, int M, int N, int K, float alpha,
                const float* A, int lda, const float* B, int ldb,
                float beta, float* C, int ldc);
  double (*ddot)(const double*, const double*, std::size_t);
  float (*sdot)(const float*, const float*, std::size_t);
  void (*daxpy)(std::size_t, double, const double*, double*);
  void (*saxpy)(std::size_t, float, const float*, float*);
  void (*dvadd)(const double*, const double*, double*, std::size_t);
  void (*svadd)(const float*, const float*, float*, std::size_t);
  void (*dvsub)(const double*, const double*, double*, std::size_t);
  void (*svsub)(const float*, const float*, float*, std::size_t);
  void (*dvmul)(const double*, const double*, double*, std::size_t);
  void (*svmul)(const float*, const float*, float*, std::size_t);
  void (*dvscale)(double, double*, std::size_t);
  void (*svscale)(float, float*, std::size_t);
  double (*dsumsq)(const double*, std::size_t);
  float (*ssumsq)(const float*, std::size_t);
  double (*dsum)(const double*, std::size_t);
  float (*ssum)(const float*, std::size_t);
};

const Ops& scalar_ops();
const Ops* avx2_ops(); // nullptr when not compiled in

} // namespace paec::kernels::detail
