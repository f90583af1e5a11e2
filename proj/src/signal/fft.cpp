#include "paec/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "paec/errors.hpp"

namespace paec {
namespace {

struct Plan {
  int n;
  std::vector<cd> w; // w[k] = exp(-2*pi*i*k/n)
  std::vector<int> factors;
};

std::shared_ptr<const Plan> plan_for(int n) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Plan>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  auto plan = std::make_shared<Plan>();
  plan->n = n;
  plan->w.resize(n);
  for (int k = 0; k < n; ++k) {
    const double ang = -2.0 * std::numbers::pi * k / n;
    plan->w[k] = cd(std::cos(ang), std::sin(ang));
  }
  int m = n;
  for (int p : {2, 3, 5}) {
    while (m % p == 0) {
      plan->factors.push_back(p);
      m /= p;
    }
  }
  if (m != 1) throw ParamError("fft: size " + std::to_string(n) +
                               " has prime factors other than 2, 3, 5");
  cache[n] = plan;
  return plan;
}

// DIT recursion: out[0..n) = DFT of in[0], in[s], ... Twiddles come from the
// root table with stride tw (tw * n == plan.n at every level).
void fft_rec(const cd* in, long s, cd* out, int n, const Plan& plan, long tw,
             int depth, bool inverse) {
  if (n == 1) {
    out[0] = in[0];
    return;
  }
  const int p = plan.factors[depth];
  const int m = n / p;
  for (int r = 0; r < p; ++r)
    fft_rec(in + r * s, s * p, out + static_cast<long>(r) * m, m, plan, tw * p,
            depth + 1, inverse);

  cd t[5];
  const long nn = plan.n;
  for (int k = 0; k < m; ++k) {
    for (int r = 0; r < p; ++r) {
      cd w = plan.w[(static_cast<long>(r) * k * tw) % nn];
      if (inverse) w = std::conj(w);
      t[r] = out[static_cast<long>(r) * m + k] * w;
    }
    for (int q = 0; q < p; ++q) {
      cd acc = t[0];
      for (int r = 1; r < p; ++r) {
        cd w = plan.w[(static_cast<long>(q) * r * m * tw) % nn];
        if (inverse) w = std::conj(w);
        acc += t[r] * w;
      }
      out[static_cast<long>(q) * m + k] = acc;
    }
  }
}

} // namespace

bool fft_size_supported(int n) {
  if (n < 1) return false;
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

int fft_good_size(int n) {
  if (n < 1) n = 1;
  while (!fft_size_supported(n)) ++n;
  return n;
}

void fft(std::vector<cd>& x, bool inverse) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw ParamError("fft: empty input");
  if (n == 1) return;
  auto plan = plan_for(n);
  std::vector<cd> out(n);
  fft_rec(x.data(), 1, out.data(), n, *plan, 1, 0, inverse);
  if (inverse) {
    const double inv = 1.0 / n;
    for (auto& v : out) v *= inv;
  }
  x = std::move(out);
}

std::vector<double> fft_convolve(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  int n = 1;
  while (static_cast<std::size_t>(n) < out_len) n <<= 1;
  std::vector<cd> fa(n), fb(n);
  for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
  for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
  fft(fa);
  fft(fb);
  for (int i = 0; i < n; ++i) fa[i] *= fb[i];
  fft(fa, /*inverse=*/true);
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
  return out;
}

} // namespace paec
