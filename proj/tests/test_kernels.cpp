#include <doctest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "paec/kernels.hpp"

namespace k = paec::kernels;

namespace {

template <class S>
std::vector<S> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::vector<S> v(n);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (auto& x : v) x = static_cast<S>(d(rng));
  return v;
}

template <class S>
void gemm_naive(bool tA, bool tB, int M, int N, int K, const S* A, int lda,
                const S* B, int ldb, S* C, int ldc) {
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < N; ++j) {
      double acc = 0.0;
      for (int kk = 0; kk < K; ++kk) {
        const S a = tA ? A[kk * lda + i] : A[i * lda + kk];
        const S b = tB ? B[j * ldb + kk] : B[kk * ldb + j];
        acc += static_cast<double>(a) * b;
      }
      C[i * ldc + j] = static_cast<S>(acc);
    }
}

template <class S>
void check_gemm_case(bool tA, bool tB, int M, int N, int K, double tol) {
  std::mt19937_64 rng(1234 + M * 7 + N * 3 + K + (tA ? 101 : 0) + (tB ? 202 : 0));
  const int lda = tA ? M : K;
  const int ldb = tB ? K : N;
  auto A = random_vec<S>(static_cast<std::size_t>(tA ? K : M) * lda, rng);
  auto B = random_vec<S>(static_cast<std::size_t>(tB ? N : K) * ldb, rng);
  std::vector<S> C(static_cast<std::size_t>(M) * N, S(0));
  std::vector<S> ref(C);
  k::gemm<S>(tA, tB, M, N, K, S(1), A.data(), lda, B.data(), ldb, S(0), C.data(), N);
  gemm_naive<S>(tA, tB, M, N, K, A.data(), lda, B.data(), ldb, ref.data(), N);
  double max_err = 0.0;
  for (std::size_t i = 0; i < C.size(); ++i)
    max_err = std::max(max_err, std::abs(double(C[i]) - double(ref[i])));
  CHECK(max_err < tol);
}

} // namespace

TEST_CASE("gemm matches naive reference on both backends") {
  const auto saved = k::active_backend();
  std::vector<k::Backend> backends{k::Backend::scalar};
  if (saved == k::Backend::avx2) backends.push_back(k::Backend::avx2);
  for (auto b : backends) {
    k::force_backend(b);
    CAPTURE(k::backend_name());
    for (auto [M, N, K] : {std::array<int, 3>{1, 1, 1},
                           std::array<int, 3>{4, 16, 8},
                           std::array<int, 3>{7, 19, 33},
                           std::array<int, 3>{64, 92, 552},
                           std::array<int, 3>{193, 47, 31}}) {
      check_gemm_case<float>(false, false, M, N, K, 1e-3);
      check_gemm_case<float>(false, true, M, N, K, 1e-3);
      check_gemm_case<float>(true, false, M, N, K, 1e-3);
      check_gemm_case<double>(false, false, M, N, K, 1e-10);
      check_gemm_case<double>(false, true, M, N, K, 1e-10);
      check_gemm_case<double>(true, false, M, N, K, 1e-10);
    }
  }
  k::force_backend(saved);
}

TEST_CASE("gemm alpha/beta accumulate") {
  std::mt19937_64 rng(99);
  const int M = 13, N = 21, K = 17;
  auto A = random_vec<double>(M * K, rng);
  auto B = random_vec<double>(K * N, rng);
  auto C0 = random_vec<double>(M * N, rng);
  auto C = C0;
  k::dgemm(false, false, M, N, K, 2.0, A.data(), K, B.data(), N, 0.5, C.data(), N);
  std::vector<double> ref(M * N, 0.0);
  gemm_naive<double>(false, false, M, N, K, A.data(), K, B.data(), N, ref.data(), N);
  for (int i = 0; i < M * N; ++i)
    CHECK(C[i] == doctest::Approx(0.5 * C0[i] + 2.0 * ref[i]).epsilon(1e-12));
}

TEST_CASE("scalar and avx2 backends agree") {
  if (k::active_backend() != k::Backend::avx2) return; // no AVX2 on this host
  std::mt19937_64 rng(7);
  const std::size_t n = 1037;
  auto a = random_vec<double>(n, rng);
  auto b = random_vec<double>(n, rng);
  auto af = random_vec<float>(n, rng);
  auto bf = random_vec<float>(n, rng);

  k::force_backend(k::Backend::scalar);
  const double dot_s = k::dot(a.data(), b.data(), n);
  const double ss_s = k::sumsq(a.data(), n);
  const float fdot_s = k::dot(af.data(), bf.data(), n);
  k::force_backend(k::Backend::avx2);
  const double dot_v = k::dot(a.data(), b.data(), n);
  const double ss_v = k::sumsq(a.data(), n);
  const float fdot_v = k::dot(af.data(), bf.data(), n);

  CHECK(dot_s == doctest::Approx(dot_v).epsilon(1e-12));
  CHECK(ss_s == doctest::Approx(ss_v).epsilon(1e-12));
  CHECK(fdot_s == doctest::Approx(fdot_v).epsilon(1e-4));
}

TEST_CASE("vector ops") {
  std::mt19937_64 rng(11);
  const std::size_t n = 259;
  auto a = random_vec<double>(n, rng);
  auto b = random_vec<double>(n, rng);
  std::vector<double> y(n);

  k::vadd(a.data(), b.data(), y.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(a[i] + b[i]));
  k::vsub(a.data(), b.data(), y.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(a[i] - b[i]));
  k::vmul(a.data(), b.data(), y.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(a[i] * b[i]));

  y = a;
  k::axpy(n, 0.25, b.data(), y.data());
  for (std::size_t i = 0; i < n; ++i)
    CHECK(y[i] == doctest::Approx(a[i] + 0.25 * b[i]));

  y = a;
  k::vscale(3.0, y.data(), n);
  for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(3.0 * a[i]));
}

TEST_CASE("threaded gemm equals single-thread result") {
  std::mt19937_64 rng(21);
  const int M = 301, N = 97, K = 129;
  auto A = random_vec<float>(static_cast<std::size_t>(M) * K, rng);
  auto B = random_vec<float>(static_cast<std::size_t>(K) * N, rng);
  std::vector<float> C1(static_cast<std::size_t>(M) * N, 0.f);
  std::vector<float> C2(C1);
  const int saved = k::thread_count();
  k::set_thread_count(1);
  k::sgemm(false, false, M, N, K, 1.f, A.data(), K, B.data(), N, 0.f, C1.data(), N);
  k::set_thread_count(4);
  k::sgemm(false, false, M, N, K, 1.f, A.data(), K, B.data(), N, 0.f, C2.data(), N);
  k::set_thread_count(saved);
  for (std::size_t i = 0; i < C1.size(); ++i) CHECK(C1[i] == C2[i]);
}
