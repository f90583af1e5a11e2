#include "paec/kernels.hpp"

#include "kernels_impl.hpp"

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace paec::kernels {
namespace {

using detail::Ops;

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

struct State {
  const Ops* ops;
  Backend backend;
};

State resolve() {
  const char* env = std::getenv("PAEC_KERNELS");
  const Ops* avx2 = detail::avx2_ops();
  const bool avx2_ok = avx2 != nullptr && cpu_has_avx2();
  if (env != nullptr && std::strcmp(env, "scalar") == 0)
    return {&detail::scalar_ops(), Backend::scalar};
  if (env != nullptr && std::strcmp(env, "avx2") == 0) {
    if (!avx2_ok) throw std::runtime_error("PAEC_KERNELS=avx2: not supported on this CPU");
    return {avx2, Backend::avx2};
  }
  if (avx2_ok) return {avx2, Backend::avx2};
  return {&detail::scalar_ops(), Backend::scalar};
}

State& state() {
  static State s = resolve();
  return s;
}

const Ops& ops() { return *state().ops; }

// Fork/join pool with caller participation. Each submission owns a control
// block with its own part counters, so a worker that wakes late sees an
// exhausted counter and never touches a finished task. Every part writes a
// disjoint output slice, so results do not depend on scheduling.
class Pool {
  struct TaskCtl {
    const std::function<void(int)>* fn = nullptr;
    int nparts = 0;
    std::atomic<int> next{0};
    std::atomic<int> completed{0};
  };

 public:
  static Pool& instance() {
    static Pool p;
    return p;
  }

  int threads() const { return n_threads_; }

  void set_threads(int n) {
    if (n < 1) n = 1;
    shutdown_workers();
    n_threads_ = n;
    start_workers();
  }

  void run(int nparts, const std::function<void(int)>& fn) {
    if (nparts <= 1 || n_threads_ <= 1) {
      for (int p = 0; p < nparts; ++p) fn(p);
      return;
    }
    auto ctl = std::make_shared<TaskCtl>();
    ctl->fn = &fn;
    ctl->nparts = nparts;
    ctl->next.store(1, std::memory_order_relaxed);
    {
      std::lock_guard<std::mutex> lk(mu_);
      task_ = ctl;
      ++generation_;
      cv_.notify_all();
    }
    fn(0);
    work_on(*ctl);
    std::unique_lock<std::mutex> lk(mu_);
    done_cv_.wait(lk, [&] {
      return ctl->completed.load(std::memory_order_acquire) == nparts - 1;
    });
    task_.reset();
  }

 private:
  Pool() {
    n_threads_ = default_threads();
    start_workers();
  }
  ~Pool() { shutdown_workers(); }

  static int default_threads() {
    if (const char* env = std::getenv("PAEC_THREADS")) {
      const int n = std::atoi(env);
      if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(hw == 0 ? 1 : (hw > 4 ? 4 : hw));
  }

  void start_workers() {
    stop_ = false;
    for (int w = 1; w < n_threads_; ++w)
      workers_.emplace_back([this] { worker_loop(); });
  }

  void shutdown_workers() {
    {
      std::lock_guard<std::mutex> lk(mu_);
      stop_ = true;
      ++generation_;
      cv_.notify_all();
    }
    for (auto& t : workers_) t.join();
    workers_.clear();
  }

  // Pull parts until the task's counter is exhausted. Safe on stale tasks:
  // their counter is already past nparts once run() has returned.
  void work_on(TaskCtl& ctl) {
    for (;;) {
      const int p = ctl.next.fetch_add(1, std::memory_order_relaxed);
      if (p >= ctl.nparts) break;
      (*ctl.fn)(p);
      if (ctl.completed.fetch_add(1, std::memory_order_acq_rel) + 1 ==
          ctl.nparts - 1) {
        std::lock_guard<std::mutex> lk(mu_);
        done_cv_.notify_all();
      }
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      std::shared_ptr<TaskCtl> ctl;
      {
        std::unique_lock<std::mutex> lk(mu_);
        cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        ctl = task_;
      }
      if (ctl) work_on(*ctl);
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  std::vector<std::thread> workers_;
  std::shared_ptr<TaskCtl> task_;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
  int n_threads_ = 1;
};

template <class S>
void gemm_threaded(bool transA, bool transB, int M, int N, int K, S alpha,
                   const S* A, int lda, const S* B, int ldb, S beta, S* C,
                   int ldc,
                   void (*st)(bool, bool, int, int, int, S, const S*, int,
                              const S*, int, S, S*, int)) {
  const long long work = 1LL * M * N * K;
  Pool& pool = Pool::instance();
  const int threads = pool.threads();
  if (work < (1 << 16) || M < 2 * threads || threads <= 1) {
    st(transA, transB, M, N, K, alpha, A, lda, B, ldb, beta, C, ldc);
    return;
  }
  // More parts than threads for load balance; each part owns a row slice.
  const int parts = threads * 4 < M ? threads * 4 : threads;
  const int rows = (M + parts - 1) / parts;
  pool.run(parts, [&](int p) {
    const int i0 = p * rows;
    const int i1 = i0 + rows < M ? i0 + rows : M;
    if (i0 >= i1) return;
    const S* a = transA ? A + i0 : A + static_cast<std::size_t>(i0) * lda;
    st(transA, transB, i1 - i0, N, K, alpha, a, lda, B, ldb, beta,
       C + static_cast<std::size_t>(i0) * ldc, ldc);
  });
}

} // namespace

Backend active_backend() { return state().backend; }

const char* backend_name() {
  return state().backend == Backend::avx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  if (b == Backend::avx2) {
    const Ops* avx2 = detail::avx2_ops();
    if (avx2 == nullptr || !cpu_has_avx2())
      throw std::runtime_error("avx2 backend not available on this CPU");
    state() = {avx2, Backend::avx2};
  } else {
    state() = {&detail::scalar_ops(), Backend::scalar};
  }
}

int thread_count() { return Pool::instance().threads(); }
void set_thread_count(int n) { Pool::instance().set_threads(n); }

void dgemm(bool transA, bool transB, int M, int N, int K, double alpha,
           const double* A, int lda, const double* B, int ldb, double beta,
           double* C, int ldc) {
  gemm_threaded<double>(transA, transB, M, N, K, alpha, A, lda, B, ldb, beta, C,
                        ldc, ops().dgemm);
}

void sgemm(bool transA, bool transB, int M, int N, int K, float alpha,
           const float* A, int lda, const float* B, int ldb, float beta,
           float* C, int ldc) {
  gemm_threaded<float>(transA, transB, M, N, K, alpha, A, lda, B, ldb, beta, C,
                       ldc, ops().sgemm);
}

double dot(const double* a, const double* b, std::size_t n) { return ops().ddot(a, b, n); }
float dot(const float* a, const float* b, std::size_t n) { return ops().sdot(a, b, n); }
void axpy(std::size_t n, double a, const double* x, double* y) { ops().daxpy(n, a, x, y); }
void axpy(std::size_t n, float a, const float* x, float* y) { ops().saxpy(n, a, x, y); }
void vadd(const double* a, const double* b, double* y, std::size_t n) { ops().dvadd(a, b, y, n); }
void vadd(const float* a, const float* b, float* y, std::size_t n) { ops().svadd(a, b, y, n); }
void vsub(const double* a, const double* b, double* y, std::size_t n) { ops().dvsub(a, b, y, n); }
void vsub(const float* a, const float* b, float* y, std::size_t n) { ops().svsub(a, b, y, n); }
void vmul(const double* a, const double* b, double* y, std::size_t n) { ops().dvmul(a, b, y, n); }
void vmul(const float* a, const float* b, float* y, std::size_t n) { ops().svmul(a, b, y, n); }
void vscale(double a, double* y, std::size_t n) { ops().dvscale(a, y, n); }
void vscale(float a, float* y, std::size_t n) { ops().svscale(a, y, n); }
double sumsq(const double* a, std::size_t n) { return ops().dsumsq(a, n); }
float sumsq(const float* a, std::size_t n) { return ops().ssumsq(a, n); }
double sum(const double* a, std::size_t n) { return ops().dsum(a, n); }
float sum(const float* a, std::size_t n) { return ops().ssum(a, n); }

} // namespace paec::kernels
