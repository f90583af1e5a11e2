#include "paec/autodiff.hpp"

#include <cmath>

#include "paec/kernels.hpp"

namespace paec {


template <class S>
void Tape<S>::backward(const NodeP<S>& root) {
  if (root->val.numel() != 1)
    throw ShapeError("backward: root must be a scalar");
  root->ensure_grad();
  root->grad.v[0] = S(1);
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    Node<S>& n = **it;
    if (!n.requires_grad || n.grad.v.empty() || !n.backward) continue;
    n.backward();
  }
}

namespace {

template <class S>
Var<S> make_op(Tensor<S> val, bool req, std::function<void()> bwd) {
  auto n = std::make_shared<Node<S>>();
  n->val = std::move(val);
  auto* tape = Tape<S>::current();
  if (tape != nullptr && req) {
    n->requires_grad = true;
    n->backward = std::move(bwd);
    tape->record(n);
  }
  return Var<S>(n);
}

template <class S>
void acc(const NodeP<S>& n, const S* g, std::size_t len) {
  if (!n->requires_grad) return;
  n->ensure_grad();
  kernels::vadd(n->grad.data(), g, n->grad.data(), len);
}

template <class S>
bool want_grad(const Var<S>& a) {
  return Tape<S>::current() != nullptr && a.n->requires_grad;
}

} // namespace

template <class S>
Var<S> constant(Tensor<S> t) {
  auto n = std::make_shared<Node<S>>();
  n->val = std::move(t);
  return Var<S>(n);
}

template <class S>
Var<S> parameter(Tensor<S> t) {
  auto n = std::make_shared<Node<S>>();
  n->val = std::move(t);
  n->requires_grad = true;
  return Var<S>(n);
}

// ----------------------------------------------------------- elementwise

template <class S>
Var<S> add(const Var<S>& a, const Var<S>& b) {
  if (!a.val().same_shape(b.val())) throw ShapeError("add: shape mismatch");
  Tensor<S> out(a.shape());
  kernels::vadd(a.val().data(), b.val().data(), out.data(), out.numel());
  const bool req = want_grad(a) || want_grad(b);
  auto an = a.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, bn, on] {
      acc(an, on->grad.data(), on->grad.numel());
      acc(bn, on->grad.data(), on->grad.numel());
    };
  }
  return o;
}

template <class S>
Var<S> sub(const Var<S>& a, const Var<S>& b) {
  if (!a.val().same_shape(b.val())) throw ShapeError("sub: shape mismatch");
  Tensor<S> out(a.shape());
  kernels::vsub(a.val().data(), b.val().data(), out.data(), out.numel());
  const bool req = want_grad(a) || want_grad(b);
  auto an = a.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, bn, on] {
      acc(an, on->grad.data(), on->grad.numel());
      if (bn->requires_grad) {
        bn->ensure_grad();
        kernels::axpy(on->grad.numel(), S(-1), on->grad.data(), bn->grad.data());
      }
    };
  }
  return o;
}

template <class S>
Var<S> mul(const Var<S>& a, const Var<S>& b) {
  if (!a.val().same_shape(b.val())) throw ShapeError("mul: shape mismatch");
  Tensor<S> out(a.shape());
  kernels::vmul(a.val().data(), b.val().data(), out.data(), out.numel());
  const bool req = want_grad(a) || want_grad(b);
  auto an = a.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, bn, on] {
      const std::size_t n = on->grad.numel();
      Tensor<S> tmp(on->grad.shape);
      if (an->requires_grad) {
        kernels::vmul(on->grad.data(), bn->val.data(), tmp.data(), n);
        acc(an, tmp.data(), n);
      }
      if (bn->requires_grad) {
        kernels::vmul(on->grad.data(), an->val.data(), tmp.data(), n);
        acc(bn, tmp.data(), n);
      }
    };
  }
  return o;
}

template <class S>
Var<S> div(const Var<S>& a, const Var<S>& b) {
  if (!a.val().same_shape(b.val())) throw ShapeError("div: shape mismatch");
  Tensor<S> out(a.shape());
  const S* ap = a.val().data();
  const S* bp = b.val().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] = ap[i] / bp[i];
  const bool req = want_grad(a) || want_grad(b);
  auto an = a.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, bn, on] {
      const std::size_t n = on->grad.numel();
      const S* dy = on->grad.data();
      const S* bv = bn->val.data();
      if (an->requires_grad) {
        an->ensure_grad();
        S* dst = an->grad.data();
        for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] / bv[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        const S* y = on->val.data();
        S* dst = bn->grad.data();
        for (std::size_t i = 0; i < n; ++i) dst[i] -= dy[i] * y[i] / bv[i];
      }
    };
  }
  return o;
}

template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: empty input list");
  const int m = xs[0].shape()[0];
  int ntotal = 0;
  bool req = false;
  for (const auto& x : xs) {
    if (x.val().rank() != 2 || x.shape()[0] != m)
      throw ShapeError("concat_cols: incompatible shapes");
    ntotal += x.shape()[1];
    req = req || want_grad(x);
  }
  Tensor<S> out({m, ntotal});
  int off = 0;
  for (const auto& x : xs) {
    const int w = x.shape()[1];
    for (int i = 0; i < m; ++i)
      std::copy(x.val().v.begin() + static_cast<std::size_t>(i) * w,
                x.val().v.begin() + static_cast<std::size_t>(i + 1) * w,
                out.v.begin() + static_cast<std::size_t>(i) * ntotal + off);
    off += w;
  }
  std::vector<NodeP<S>> parents;
  std::vector<int> widths;
  for (const auto& x : xs) {
    parents.push_back(x.n);
    widths.push_back(x.shape()[1]);
  }
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [parents, widths, on, m, ntotal] {
      int off2 = 0;
      for (std::size_t p = 0; p < parents.size(); ++p) {
        const int w = widths[p];
        if (parents[p]->requires_grad) {
          parents[p]->ensure_grad();
          for (int i = 0; i < m; ++i)
            kernels::vadd(
                parents[p]->grad.data() + static_cast<std::size_t>(i) * w,
                on->grad.data() + static_cast<std::size_t>(i) * ntotal + off2,
                parents[p]->grad.data() + static_cast<std::size_t>(i) * w,
                static_cast<std::size_t>(w));
        }
        off2 += w;
      }
    };
  }
  return o;
}

template <class S>
Var<S> scale(const Var<S>& a, S c) {
  Tensor<S> out = a.val();
  kernels::vscale(c, out.data(), out.numel());
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on, c] {
      an->ensure_grad();
      kernels::axpy(on->grad.numel(), c, on->grad.data(), an->grad.data());
    };
  }
  return o;
}

template <class S>
Var<S> sigmoid(const Var<S>& a) {
  Tensor<S> out(a.shape());
  const S* x = a.val().data();
  for (std::size_t i = 0; i < out.numel(); ++i)
    out.v[i] = S(1) / (S(1) + std::exp(-x[i]));
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] {
      an->ensure_grad();
      const std::size_t n = on->grad.numel();
      const S* y = on->val.data();
      const S* dy = on->grad.data();
      S* dst = an->grad.data();
      for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] * y[i] * (S(1) - y[i]);
    };
  }
  return o;
}

template <class S>
Var<S> tanh_op(const Var<S>& a) {
  Tensor<S> out(a.shape());
  const S* x = a.val().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] = std::tanh(x[i]);
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] {
      an->ensure_grad();
      const std::size_t n = on->grad.numel();
      const S* y = on->val.data();
      const S* dy = on->grad.data();
      S* dst = an->grad.data();
      for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] * (S(1) - y[i] * y[i]);
    };
  }
  return o;
}

template <class S>
Var<S> square(const Var<S>& a) {
  Tensor<S> out(a.shape());
  kernels::vmul(a.val().data(), a.val().data(), out.data(), out.numel());
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] {
      an->ensure_grad();
      const std::size_t n = on->grad.numel();
      const S* x = an->val.data();
      const S* dy = on->grad.data();
      S* dst = an->grad.data();
      for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] * S(2) * x[i];
    };
  }
  return o;
}

template <class S>
Var<S> sqrt_eps(const Var<S>& a, S eps) {
  Tensor<S> out(a.shape());
  const S* x = a.val().data();
  for (std::size_t i = 0; i < out.numel(); ++i) out.v[i] = std::sqrt(x[i] + eps);
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] {
      an->ensure_grad();
      const std::size_t n = on->grad.numel();
      const S* y = on->val.data();
      const S* dy = on->grad.data();
      S* dst = an->grad.data();
      for (std::size_t i = 0; i < n; ++i) dst[i] += dy[i] * S(0.5) / y[i];
    };
  }
  return o;
}

// ---------------------------------------------------- reductions / shape

template <class S>
Var<S> sum_all(const Var<S>& a) {
  Tensor<S> out({1});
  out.v[0] = kernels::sum(a.val().data(), a.val().numel());
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] {
      an->ensure_grad();
      const S g = on->grad.v[0];
      S* dst = an->grad.data();
      for (std::size_t i = 0; i < an->grad.numel(); ++i) dst[i] += g;
    };
  }
  return o;
}

template <class S>
Var<S> mean_all(const Var<S>& a) {
  const S inv = S(1) / static_cast<S>(a.val().numel());
  return scale(sum_all(a), inv);
}

template <class S>
Var<S> reshape(const Var<S>& a, std::vector<int> shape) {
  if (Tensor<S>::numel_of(shape) != a.val().numel())
    throw ShapeError("reshape: element count mismatch");
  Tensor<S> out(std::move(shape), a.val().v);
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on] { acc(an, on->grad.data(), on->grad.numel()); };
  }
  return o;
}

template <class S>
Var<S> permute3(const Var<S>& a, std::array<int, 3> perm) {
  if (a.val().rank() != 3) throw ShapeError("permute3: rank-3 input required");
  const auto& sh = a.shape();
  std::vector<int> osh{sh[perm[0]], sh[perm[1]], sh[perm[2]]};
  Tensor<S> out(osh);
  const int d0 = sh[0], d1 = sh[1], d2 = sh[2];
  std::array<std::size_t, 3> in_stride{static_cast<std::size_t>(d1) * d2,
                                       static_cast<std::size_t>(d2), 1};
  std::array<std::size_t, 3> os{in_stride[perm[0]], in_stride[perm[1]],
                                in_stride[perm[2]]};
  S* dst = out.data();
  const S* src = a.val().data();
  std::size_t w = 0;
  for (int i = 0; i < osh[0]; ++i)
    for (int j = 0; j < osh[1]; ++j)
      for (int k = 0; k < osh[2]; ++k)
        dst[w++] = src[i * os[0] + j * os[1] + k * os[2]];
  const bool req = want_grad(a);
  auto an = a.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, on, osh, os] {
      an->ensure_grad();
      const S* dy = on->grad.data();
      S* dst2 = an->grad.data();
      std::size_t r = 0;
      for (int i = 0; i < osh[0]; ++i)
        for (int j = 0; j < osh[1]; ++j)
          for (int k = 0; k < osh[2]; ++k)
            dst2[i * os[0] + j * os[1] + k * os[2]] += dy[r++];
    };
  }
  return o;
}

template <class S>
Var<S> concat_ch(const std::vector<Var<S>>& xs) {
  if (xs.empty()) throw ShapeError("concat_ch: empty input list");
  const int t = xs[0].shape()[1], f = xs[0].shape()[2];
  int ctotal = 0;
  bool req = false;
  for (const auto& x : xs) {
    if (x.val().rank() != 3 || x.shape()[1] != t || x.shape()[2] != f)
      throw ShapeError("concat_ch: incompatible shapes");
    ctotal += x.shape()[0];
    req = req || want_grad(x);
  }
  Tensor<S> out({ctotal, t, f});
  std::size_t off = 0;
  for (const auto& x : xs) {
    std::copy(x.val().v.begin(), x.val().v.end(), out.v.begin() + off);
    off += x.val().numel();
  }
  std::vector<NodeP<S>> parents;
  for (const auto& x : xs) parents.push_back(x.n);
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [parents, on] {
      std::size_t off2 = 0;
      for (const auto& p : parents) {
        acc(p, on->grad.data() + off2, p->val.numel());
        off2 += p->val.numel();
      }
    };
  }
  return o;
}

template <class S>
Var<S> slice_ch(const Var<S>& x, int c0, int c1) {
  if (x.val().rank() != 3) throw ShapeError("slice_ch: rank-3 input required");
  const int c = x.shape()[0], t = x.shape()[1], f = x.shape()[2];
  if (c0 < 0 || c1 > c || c0 >= c1) throw ShapeError("slice_ch: bad channel range");
  Tensor<S> out({c1 - c0, t, f});
  const std::size_t plane = static_cast<std::size_t>(t) * f;
  std::copy(x.val().v.begin() + c0 * plane, x.val().v.begin() + c1 * plane,
            out.v.begin());
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, c0, plane] {
      xn->ensure_grad();
      kernels::vadd(xn->grad.data() + c0 * plane, on->grad.data(),
                    xn->grad.data() + c0 * plane, on->grad.numel());
    };
  }
  return o;
}

template <class S>
Var<S> slice_cols(const Var<S>& x, int c0, int c1) {
  if (x.val().rank() != 2) throw ShapeError("slice_cols: rank-2 input required");
  const int m = x.shape()[0], n = x.shape()[1];
  if (c0 < 0 || c1 > n || c0 >= c1) throw ShapeError("slice_cols: bad range");
  const int w = c1 - c0;
  Tensor<S> out({m, w});
  for (int i = 0; i < m; ++i)
    std::copy(x.val().v.begin() + static_cast<std::size_t>(i) * n + c0,
              x.val().v.begin() + static_cast<std::size_t>(i) * n + c1,
              out.v.begin() + static_cast<std::size_t>(i) * w);
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, c0, m, n, w] {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i)
        kernels::vadd(xn->grad.data() + static_cast<std::size_t>(i) * n + c0,
                      on->grad.data() + static_cast<std::size_t>(i) * w,
                      xn->grad.data() + static_cast<std::size_t>(i) * n + c0,
                      static_cast<std::size_t>(w));
    };
  }
  return o;
}

template <class S>
Var<S> mean_axis0(const Var<S>& x) {
  if (x.val().rank() != 3) throw ShapeError("mean_axis0: rank-3 input required");
  const int t = x.shape()[0], f = x.shape()[1], h = x.shape()[2];
  Tensor<S> out({f, h});
  const std::size_t plane = static_cast<std::size_t>(f) * h;
  for (int i = 0; i < t; ++i)
    kernels::vadd(out.data(), x.val().data() + i * plane, out.data(), plane);
  kernels::vscale(S(1) / static_cast<S>(t), out.data(), plane);
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, t, plane] {
      xn->ensure_grad();
      const S inv = S(1) / static_cast<S>(t);
      for (int i = 0; i < t; ++i)
        kernels::axpy(plane, inv, on->grad.data(), xn->grad.data() + i * plane);
    };
  }
  return o;
}

template <class S>
Var<S> tile_time(const Var<S>& v, int t_frames) {
  if (v.val().rank() != 1) throw ShapeError("tile_time: rank-1 input required");
  const int f = v.shape()[0];
  Tensor<S> out({1, t_frames, f});
  for (int t = 0; t < t_frames; ++t)
    std::copy(v.val().v.begin(), v.val().v.end(),
              out.v.begin() + static_cast<std::size_t>(t) * f);
  const bool req = want_grad(v);
  auto vn = v.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [vn, on, t_frames, f] {
      vn->ensure_grad();
      for (int t = 0; t < t_frames; ++t)
        kernels::vadd(vn->grad.data(),
                      on->grad.data() + static_cast<std::size_t>(t) * f,
                      vn->grad.data(), static_cast<std::size_t>(f));
    };
  }
  return o;
}

template <class S>
Var<S> repeat_tail_time(const Var<S>& x, int t_frames) {
  if (x.val().rank() != 3) throw ShapeError("repeat_tail_time: rank-3 required");
  const int c = x.shape()[0], t0 = x.shape()[1], f = x.shape()[2];
  if (t_frames < t0) throw ShapeError("repeat_tail_time: cannot shrink");
  Tensor<S> out({c, t_frames, f});
  for (int ch = 0; ch < c; ++ch)
    for (int t = 0; t < t_frames; ++t) {
      const int ts = t < t0 ? t : t0 - 1;
      std::copy(x.val().v.begin() + (static_cast<std::size_t>(ch) * t0 + ts) * f,
                x.val().v.begin() + (static_cast<std::size_t>(ch) * t0 + ts + 1) * f,
                out.v.begin() + (static_cast<std::size_t>(ch) * t_frames + t) * f);
    }
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, c, t0, t_frames, f] {
      xn->ensure_grad();
      for (int ch = 0; ch < c; ++ch)
        for (int t = 0; t < t_frames; ++t) {
          const int ts = t < t0 ? t : t0 - 1;
          kernels::vadd(
              xn->grad.data() + (static_cast<std::size_t>(ch) * t0 + ts) * f,
              on->grad.data() + (static_cast<std::size_t>(ch) * t_frames + t) * f,
              xn->grad.data() + (static_cast<std::size_t>(ch) * t0 + ts) * f,
              static_cast<std::size_t>(f));
        }
    };
  }
  return o;
}

template <class S>
Var<S> frames_to_ctf(const Var<S>& x, int c, int f) {
  if (x.val().rank() != 2) throw ShapeError("frames_to_ctf: rank-2 required");
  const int t = x.shape()[0];
  if (x.shape()[1] != c * f) throw ShapeError("frames_to_ctf: column mismatch");
  Tensor<S> out({c, t, f});
  for (int tt = 0; tt < t; ++tt)
    for (int ch = 0; ch < c; ++ch)
      std::copy(
          x.val().v.begin() + (static_cast<std::size_t>(tt) * c + ch) * f,
          x.val().v.begin() + (static_cast<std::size_t>(tt) * c + ch + 1) * f,
          out.v.begin() + (static_cast<std::size_t>(ch) * t + tt) * f);
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, c, t, f] {
      xn->ensure_grad();
      for (int tt = 0; tt < t; ++tt)
        for (int ch = 0; ch < c; ++ch)
          kernels::vadd(
              xn->grad.data() + (static_cast<std::size_t>(tt) * c + ch) * f,
              on->grad.data() + (static_cast<std::size_t>(ch) * t + tt) * f,
              xn->grad.data() + (static_cast<std::size_t>(tt) * c + ch) * f,
              static_cast<std::size_t>(f));
    };
  }
  return o;
}

template <class S>
Var<S> softmax_rows(const Var<S>& x) {
  if (x.val().rank() != 2) throw ShapeError("softmax_rows: rank-2 required");
  const int m = x.shape()[0], k = x.shape()[1];
  Tensor<S> out({m, k});
  for (int i = 0; i < m; ++i) {
    const S* row = x.val().data() + static_cast<std::size_t>(i) * k;
    S* orow = out.data() + static_cast<std::size_t>(i) * k;
    S mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    S z = S(0);
    for (int j = 0; j < k; ++j) {
      orow[j] = std::exp(row[j] - mx);
      z += orow[j];
    }
    for (int j = 0; j < k; ++j) orow[j] /= z;
  }
  const bool req = want_grad(x);
  auto xn = x.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, on, m, k] {
      xn->ensure_grad();
      for (int i = 0; i < m; ++i) {
        const S* y = on->val.data() + static_cast<std::size_t>(i) * k;
        const S* dy = on->grad.data() + static_cast<std::size_t>(i) * k;
        S* dx = xn->grad.data() + static_cast<std::size_t>(i) * k;
        S dotp = S(0);
        for (int j = 0; j < k; ++j) dotp += dy[j] * y[j];
        for (int j = 0; j < k; ++j) dx[j] += y[j] * (dy[j] - dotp);
      }
    };
  }
  return o;
}

// ------------------------------------------------------- dense / conv

template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b, bool transA, bool transB) {
  if (transA && transB) throw ShapeError("matmul: double transpose unsupported");
  if (a.val().rank() != 2 || b.val().rank() != 2)
    throw ShapeError("matmul: rank-2 operands required");
  const int m = transA ? a.shape()[1] : a.shape()[0];
  const int k = transA ? a.shape()[0] : a.shape()[1];
  const int kb = transB ? b.shape()[1] : b.shape()[0];
  const int n = transB ? b.shape()[0] : b.shape()[1];
  if (k != kb) throw ShapeError("matmul: inner dimension mismatch");

  Tensor<S> out({m, n});
  kernels::gemm<S>(transA, transB, m, n, k, S(1), a.val().data(), a.shape()[1],
                   b.val().data(), b.shape()[1], S(0), out.data(), n);
  const bool req = want_grad(a) || want_grad(b);
  auto an = a.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [an, bn, on, transA, transB, m, n, k] {
      const S* dc = on->grad.data();
      if (an->requires_grad) {
        an->ensure_grad();
        if (!transA && !transB) {
          // dA += dC * B^T
          kernels::gemm<S>(false, true, m, k, n, S(1), dc, n, bn->val.data(),
                           bn->val.shape[1], S(1), an->grad.data(), k);
        } else if (transB) {
          // C = A * B^T : dA += dC * B
          kernels::gemm<S>(false, false, m, k, n, S(1), dc, n, bn->val.data(),
                           bn->val.shape[1], S(1), an->grad.data(), k);
        } else {
          // C = A^T * B, A is (K,M): dA += B * dC^T -> (K,M)
          kernels::gemm<S>(false, true, k, m, n, S(1), bn->val.data(),
                           bn->val.shape[1], dc, n, S(1), an->grad.data(), m);
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        if (!transA && !transB) {
          // dB += A^T * dC
          kernels::gemm<S>(true, false, k, n, m, S(1), an->val.data(),
                           an->val.shape[1], dc, n, S(1), bn->grad.data(), n);
        } else if (transB) {
          // B is (N,K): dB += dC^T * A
          kernels::gemm<S>(true, false, n, k, m, S(1), dc, n, an->val.data(),
                           an->val.shape[1], S(1), bn->grad.data(), k);
        } else {
          // C = A^T * B: dB += A * dC, A is (K,M)
          kernels::gemm<S>(false, false, k, n, m, S(1), an->val.data(),
                           an->val.shape[1], dc, n, S(1), bn->grad.data(), n);
        }
      }
    };
  }
  return o;
}

template <class S>
Var<S> add_bias_cols(const Var<S>& x, const Var<S>& b) {
  if (x.val().rank() != 2 || b.val().rank() != 1 || b.shape()[0] != x.shape()[1])
    throw ShapeError("add_bias_cols: shape mismatch");
  const int m = x.shape()[0], n = x.shape()[1];
  Tensor<S> out = x.val();
  for (int i = 0; i < m; ++i)
    kernels::vadd(out.data() + static_cast<std::size_t>(i) * n, b.val().data(),
                  out.data() + static_cast<std::size_t>(i) * n,
                  static_cast<std::size_t>(n));
  const bool req = want_grad(x) || want_grad(b);
  auto xn = x.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, bn, on, m, n] {
      acc(xn, on->grad.data(), on->grad.numel());
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int i = 0; i < m; ++i)
          kernels::vadd(bn->grad.data(),
                        on->grad.data() + static_cast<std::size_t>(i) * n,
                        bn->grad.data(), static_cast<std::size_t>(n));
      }
    };
  }
  return o;
}

template <class S>
Var<S> add_bias_ch(const Var<S>& x, const Var<S>& b) {
  if (x.val().rank() != 3 || b.val().rank() != 1 || b.shape()[0] != x.shape()[0])
    throw ShapeError("add_bias_ch: shape mismatch");
  const int c = x.shape()[0];
  const std::size_t plane = x.val().numel() / c;
  Tensor<S> out = x.val();
  for (int ch = 0; ch < c; ++ch) {
    S* p = out.data() + ch * plane;
    const S bv = b.val().v[static_cast<std::size_t>(ch)];
    for (std::size_t i = 0; i < plane; ++i) p[i] += bv;
  }
  const bool req = want_grad(x) || want_grad(b);
  auto xn = x.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, bn, on, c, plane] {
      acc(xn, on->grad.data(), on->grad.numel());
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int ch = 0; ch < c; ++ch)
          bn->grad.v[static_cast<std::size_t>(ch)] +=
              kernels::sum(on->grad.data() + ch * plane, plane);
      }
    };
  }
  return o;
}

namespace {

// Gathers the causal (2,3)/(1,2) receptive fields into rows of (T*F_out, C*6).
template <class S>
void enc_im2col(const Tensor<S>& x, int f_out, Tensor<S>& cols) {
  const int c = x.shape[0], t = x.shape[1], f = x.shape[2];
  const std::size_t row_len = static_cast<std::size_t>(c) * 6;
  for (int tt = 0; tt < t; ++tt)
    for (int ff = 0; ff < f_out; ++ff) {
      S* row = cols.data() + (static_cast<std::size_t>(tt) * f_out + ff) * row_len;
      for (int ch = 0; ch < c; ++ch)
        for (int kt = 0; kt < 2; ++kt) {
          const int ts = tt - 1 + kt;
          for (int kf = 0; kf < 3; ++kf) {
            const int fs = 2 * ff + kf;
            row[ch * 6 + kt * 3 + kf] =
                (ts >= 0 && fs < f) ? x.at(ch, ts, fs) : S(0);
          }
        }
    }
}

} // namespace

template <class S>
Var<S> conv_enc(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
  if (x.val().rank() != 3 || w.val().rank() != 2)
    throw ShapeError("conv_enc: bad operand ranks");
  const int c = x.shape()[0], t = x.shape()[1], f = x.shape()[2];
  const int o_ch = w.shape()[0];
  if (w.shape()[1] != c * 6 || b.shape()[0] != o_ch)
    throw ShapeError("conv_enc: weight/bias shape mismatch");
  const int f_out = conv_enc_f_out(f);
  if (f_out < 1) throw ShapeError("conv_enc: frequency axis too short");

  const int rows = t * f_out;
  Tensor<S> cols({rows, c * 6});
  enc_im2col(x.val(), f_out, cols);
  Tensor<S> ymat({rows, o_ch});
  kernels::gemm<S>(false, true, rows, o_ch, c * 6, S(1), cols.data(), c * 6,
                   w.val().data(), c * 6, S(0), ymat.data(), o_ch);
  Tensor<S> out({o_ch, t, f_out});
  for (int tt = 0; tt < t; ++tt)
    for (int ff = 0; ff < f_out; ++ff) {
      const S* src = ymat.data() + (static_cast<std::size_t>(tt) * f_out + ff) * o_ch;
      for (int oc = 0; oc < o_ch; ++oc)
        out.at(oc, tt, ff) = src[oc] + b.val().v[static_cast<std::size_t>(oc)];
    }

  const bool req = want_grad(x) || want_grad(w) || want_grad(b);
  auto xn = x.n, wn = w.n, bn = b.n;
  Var<S> ovar = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = ovar.n.get();
    ovar.n->backward = [xn, wn, bn, on, c, t, f, o_ch, f_out, rows] {
      // dY as (rows, O)
      Tensor<S> dymat({rows, o_ch});
      for (int tt = 0; tt < t; ++tt)
        for (int ff = 0; ff < f_out; ++ff) {
          S* dst = dymat.data() + (static_cast<std::size_t>(tt) * f_out + ff) * o_ch;
          for (int oc = 0; oc < o_ch; ++oc)
            dst[oc] = on->grad.at(oc, tt, ff);
        }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int r = 0; r < rows; ++r)
          kernels::vadd(bn->grad.data(),
                        dymat.data() + static_cast<std::size_t>(r) * o_ch,
                        bn->grad.data(), static_cast<std::size_t>(o_ch));
      }
      if (wn->requires_grad) {
        Tensor<S> cols({rows, c * 6});
        enc_im2col(xn->val, f_out, cols);
        wn->ensure_grad();
        // dW += dY^T * cols
        kernels::gemm<S>(true, false, o_ch, c * 6, rows, S(1), dymat.data(),
                         o_ch, cols.data(), c * 6, S(1), wn->grad.data(), c * 6);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        Tensor<S> dcols({rows, c * 6});
        kernels::gemm<S>(false, false, rows, c * 6, o_ch, S(1), dymat.data(),
                         o_ch, wn->val.data(), c * 6, S(0), dcols.data(), c * 6);
        // col2im scatter-add
        for (int tt = 0; tt < t; ++tt)
          for (int ff = 0; ff < f_out; ++ff) {
            const S* row =
                dcols.data() + (static_cast<std::size_t>(tt) * f_out + ff) * c * 6;
            for (int ch = 0; ch < c; ++ch)
              for (int kt = 0; kt < 2; ++kt) {
                const int ts = tt - 1 + kt;
                if (ts < 0) continue;
                for (int kf = 0; kf < 3; ++kf) {
                  const int fs = 2 * ff + kf;
                  if (fs >= f) continue;
                  xn->grad.at(ch, ts, fs) += row[ch * 6 + kt * 3 + kf];
                }
              }
          }
      }
    };
  }
  return ovar;
}

template <class S>
Var<S> conv_dec(const Var<S>& x, const Var<S>& w, const Var<S>& b, int f_out) {
  if (x.val().rank() != 3 || w.val().rank() != 2)
    throw ShapeError("conv_dec: bad operand ranks");
  const int c = x.shape()[0], t = x.shape()[1], f_in = x.shape()[2];
  if (w.shape()[0] != c) throw ShapeError("conv_dec: weight rows != channels");
  const int o6 = w.shape()[1];
  if (o6 % 6 != 0) throw ShapeError("conv_dec: weight columns not multiple of 6");
  const int o_ch = o6 / 6;
  if (b.shape()[0] != o_ch) throw ShapeError("conv_dec: bias shape mismatch");
  if (f_out < 2 * (f_in - 1) + 1)
    throw ShapeError("conv_dec: f_out smaller than the natural output");

  const int rows = t * f_in;
  // X as (rows, C)
  Tensor<S> xmat({rows, c});
  for (int tt = 0; tt < t; ++tt)
    for (int ff = 0; ff < f_in; ++ff) {
      S* dst = xmat.data() + (static_cast<std::size_t>(tt) * f_in + ff) * c;
      for (int ch = 0; ch < c; ++ch) dst[ch] = x.val().at(ch, tt, ff);
    }
  Tensor<S> ycol({rows, o6});
  kernels::gemm<S>(false, false, rows, o6, c, S(1), xmat.data(), c,
                   w.val().data(), o6, S(0), ycol.data(), o6);
  Tensor<S> out({o_ch, t, f_out});
  for (int oc = 0; oc < o_ch; ++oc) {
    const S bv = b.val().v[static_cast<std::size_t>(oc)];
    S* plane = out.data() + static_cast<std::size_t>(oc) * t * f_out;
    for (std::size_t i = 0; i < static_cast<std::size_t>(t) * f_out; ++i)
      plane[i] = bv;
  }
  for (int tt = 0; tt < t; ++tt)
    for (int ff = 0; ff < f_in; ++ff) {
      const S* row = ycol.data() + (static_cast<std::size_t>(tt) * f_in + ff) * o6;
      for (int oc = 0; oc < o_ch; ++oc)
        for (int kt = 0; kt < 2; ++kt) {
          const int to = tt + kt;
          if (to >= t) continue; // causal crop of the trailing frame
          for (int kf = 0; kf < 3; ++kf) {
            const int fo = 2 * ff + kf;
            if (fo >= f_out) continue;
            out.at(oc, to, fo) += row[oc * 6 + kt * 3 + kf];
          }
        }
    }

  const bool req = want_grad(x) || want_grad(w) || want_grad(b);
  auto xn = x.n, wn = w.n, bn = b.n;
  Var<S> ovar = make_op<S>(std::move(out), req, nullptr);
  if (req) {
    Node<S>* on = ovar.n.get();
    ovar.n->backward = [xn, wn, bn, on, c, t, f_in, f_out, o_ch, o6, rows] {
      // Gather dYcol[(t,f_in),(o,kt,kf)] = dout(o, t+kt, 2f+kf)
      Tensor<S> dycol({rows, o6});
      for (int tt = 0; tt < t; ++tt)
        for (int ff = 0; ff < f_in; ++ff) {
          S* row = dycol.data() + (static_cast<std::size_t>(tt) * f_in + ff) * o6;
          for (int oc = 0; oc < o_ch; ++oc)
            for (int kt = 0; kt < 2; ++kt) {
              const int to = tt + kt;
              for (int kf = 0; kf < 3; ++kf) {
                const int fo = 2 * ff + kf;
                row[oc * 6 + kt * 3 + kf] =
                    (to < t && fo < f_out) ? on->grad.at(oc, to, fo) : S(0);
              }
            }
        }
      if (bn->requires_grad) {
        bn->ensure_grad();
        const std::size_t plane = static_cast<std::size_t>(t) * f_out;
        for (int oc = 0; oc < o_ch; ++oc)
          bn->grad.v[static_cast<std::size_t>(oc)] +=
              kernels::sum(on->grad.data() + oc * plane, plane);
      }
      if (wn->requires_grad) {
        wn->ensure_grad();
        Tensor<S> xmat({rows, c});
        for (int tt = 0; tt < t; ++tt)
          for (int ff = 0; ff < f_in; ++ff) {
            S* dst = xmat.data() + (static_cast<std::size_t>(tt) * f_in + ff) * c;
            for (int ch = 0; ch < c; ++ch) dst[ch] = xn->val.at(ch, tt, ff);
          }
        // dW += X^T * dYcol
        kernels::gemm<S>(true, false, c, o6, rows, S(1), xmat.data(), c,
                         dycol.data(), o6, S(1), wn->grad.data(), o6);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        Tensor<S> dxmat({rows, c});
        // dX += dYcol * W^T
        kernels::gemm<S>(false, true, rows, c, o6, S(1), dycol.data(), o6,
                         wn->val.data(), o6, S(0), dxmat.data(), c);
        for (int tt = 0; tt < t; ++tt)
          for (int ff = 0; ff < f_in; ++ff) {
            const S* src = dxmat.data() + (static_cast<std::size_t>(tt) * f_in + ff) * c;
            for (int ch = 0; ch < c; ++ch) xn->grad.at(ch, tt, ff) += src[ch];
          }
      }
    };
  }
  return ovar;
}

// ------------------------------------------------------------- lstm

template <class S>
Var<S> lstm_seq(const Var<S>& x, const Var<S>& w_ih, const Var<S>& w_hh,
                const Var<S>& b, bool reverse) {
  if (x.val().rank() != 3) throw ShapeError("lstm_seq: rank-3 input required");
  const int batch = x.shape()[0], t_len = x.shape()[1], in_dim = x.shape()[2];
  const int h4 = w_ih.shape()[0];
  if (h4 % 4 != 0) throw ShapeError("lstm_seq: gate dimension not 4*H");
  const int h = h4 / 4;
  if (w_ih.shape()[1] != in_dim || w_hh.shape()[0] != h4 ||
      w_hh.shape()[1] != h || b.shape()[0] != h4)
    throw ShapeError("lstm_seq: weight shape mismatch");
  if (batch < 1 || t_len < 1) throw ShapeError("lstm_seq: empty input");

  const bool recording = Tape<S>::current() != nullptr;
  const bool req = recording && (x.n->requires_grad || w_ih.n->requires_grad ||
                                 w_hh.n->requires_grad || b.n->requires_grad);

  Tensor<S> y({batch, t_len, h});
  Tensor<S> hbuf({batch, h});
  Tensor<S> cbuf({batch, h});
  Tensor<S> gates({batch, h4});

  // Caches for BPTT (post-activation gates and cell states per step).
  std::vector<Tensor<S>> gate_cache, c_cache;
  if (req) {
    gate_cache.reserve(t_len);
    c_cache.reserve(t_len);
  }

  const std::size_t x_row = static_cast<std::size_t>(t_len) * in_dim;
  const std::size_t y_row = static_cast<std::size_t>(t_len) * h;
  for (int step = 0; step < t_len; ++step) {
    const int tt = reverse ? t_len - 1 - step : step;
    // G = X_t * Wih^T + H * Whh^T + b
    kernels::gemm<S>(false, true, batch, h4, in_dim, S(1),
                     x.val().data() + static_cast<std::size_t>(tt) * in_dim,
                     static_cast<int>(x_row), w_ih.val().data(), in_dim, S(0),
                     gates.data(), h4);
    kernels::gemm<S>(false, true, batch, h4, h, S(1), hbuf.data(), h,
                     w_hh.val().data(), h, S(1), gates.data(), h4);
    for (int bb = 0; bb < batch; ++bb)
      kernels::vadd(gates.data() + static_cast<std::size_t>(bb) * h4,
                    b.val().data(),
                    gates.data() + static_cast<std::size_t>(bb) * h4,
                    static_cast<std::size_t>(h4));
    for (int bb = 0; bb < batch; ++bb) {
      S* g = gates.data() + static_cast<std::size_t>(bb) * h4;
      S* cb = cbuf.data() + static_cast<std::size_t>(bb) * h;
      S* hb = hbuf.data() + static_cast<std::size_t>(bb) * h;
      S* yo = y.data() + bb * y_row + static_cast<std::size_t>(tt) * h;
      for (int j = 0; j < h; ++j) {
        const S ig = S(1) / (S(1) + std::exp(-g[j]));
        const S fg = S(1) / (S(1) + std::exp(-g[h + j]));
        const S gg = std::tanh(g[2 * h + j]);
        const S og = S(1) / (S(1) + std::exp(-g[3 * h + j]));
        g[j] = ig;
        g[h + j] = fg;
        g[2 * h + j] = gg;
        g[3 * h + j] = og;
        cb[j] = fg * cb[j] + ig * gg;
        const S th = std::tanh(cb[j]);
        hb[j] = og * th;
        yo[j] = hb[j];
      }
    }
    if (req) {
      gate_cache.push_back(gates);
      c_cache.push_back(cbuf);
    }
  }

  auto xn = x.n;
  auto wihn = w_ih.n, whhn = w_hh.n, bn = b.n;
  Var<S> o = make_op<S>(std::move(y), req, nullptr);
  if (req) {
    Node<S>* on = o.n.get();
    o.n->backward = [xn, wihn, whhn, bn, on, gate_cache = std::move(gate_cache),
                     c_cache = std::move(c_cache), batch, t_len, in_dim, h, h4,
                     reverse, x_row, y_row] {
      Tensor<S> dh({batch, h}), dc({batch, h}), dgates({batch, h4});
      if (xn->requires_grad) xn->ensure_grad();
      if (wihn->requires_grad) wihn->ensure_grad();
      if (whhn->requires_grad) whhn->ensure_grad();
      if (bn->requires_grad) bn->ensure_grad();
      for (int step = t_len - 1; step >= 0; --step) {
        const int tt = reverse ? t_len - 1 - step : step;
        const Tensor<S>& g = gate_cache[static_cast<std::size_t>(step)];
        const Tensor<S>& cs = c_cache[static_cast<std::size_t>(step)];
        const Tensor<S>* cprev =
            step > 0 ? &c_cache[static_cast<std::size_t>(step) - 1] : nullptr;
        for (int bb = 0; bb < batch; ++bb) {
          const S* gr = g.data() + static_cast<std::size_t>(bb) * h4;
          const S* cr = cs.data() + static_cast<std::size_t>(bb) * h;
          const S* cp = cprev ? cprev->data() + static_cast<std::size_t>(bb) * h
                              : nullptr;
          const S* dy =
              on->grad.data() + bb * y_row + static_cast<std::size_t>(tt) * h;
          S* dhr = dh.data() + static_cast<std::size_t>(bb) * h;
          S* dcr = dc.data() + static_cast<std::size_t>(bb) * h;
          S* dgr = dgates.data() + static_cast<std::size_t>(bb) * h4;
          for (int j = 0; j < h; ++j) {
            const S ig = gr[j], fg = gr[h + j], gg = gr[2 * h + j],
                    og = gr[3 * h + j];
            const S th = std::tanh(cr[j]);
            const S dhj = dhr[j] + dy[j];
            const S doj = dhj * th;
            S dcj = dcr[j] + dhj * og * (S(1) - th * th);
            const S dij = dcj * gg;
            const S dfj = cp ? dcj * cp[j] : S(0);
            const S dgj = dcj * ig;
            dgr[j] = dij * ig * (S(1) - ig);
            dgr[h + j] = dfj * fg * (S(1) - fg);
            dgr[2 * h + j] = dgj * (S(1) - gg * gg);
            dgr[3 * h + j] = doj * og * (S(1) - og);
            dcr[j] = dcj * fg; // feeds the previous step
          }
        }
        if (xn->requires_grad)
          kernels::gemm<S>(false, false, batch, in_dim, h4, S(1), dgates.data(),
                           h4, wihn->val.data(), in_dim, S(1),
                           xn->grad.data() + static_cast<std::size_t>(tt) * in_dim,
                           static_cast<int>(x_row));
        if (wihn->requires_grad)
          kernels::gemm<S>(true, false, h4, in_dim, batch, S(1), dgates.data(),
                           h4, xn->val.data() + static_cast<std::size_t>(tt) * in_dim,
                           static_cast<int>(x_row), S(1), wihn->grad.data(),
                           in_dim);
        if (whhn->requires_grad && step > 0) {
          // h_prev lives in the output at the previously processed frame.
          const int tprev = reverse ? t_len - step : step - 1;
          kernels::gemm<S>(true, false, h4, h, batch, S(1), dgates.data(), h4,
                           on->val.data() + static_cast<std::size_t>(tprev) * h,
                           static_cast<int>(y_row), S(1), whhn->grad.data(), h);
        }
        if (bn->requires_grad)
          for (int bb = 0; bb < batch; ++bb)
            kernels::vadd(bn->grad.data(),
                          dgates.data() + static_cast<std::size_t>(bb) * h4,
                          bn->grad.data(), static_cast<std::size_t>(h4));
        // dh for the previous step: dG * Whh
        kernels::gemm<S>(false, false, batch, h, h4, S(1), dgates.data(), h4,
                         whhn->val.data(), h, S(0), dh.data(), h);
      }
    };
  }
  return o;
}

// ------------------------------------------------------ instantiation

#define PAEC_INSTANTIATE(S)                                                    \
  template class Tape<S>;                                                      \
  template Var<S> constant<S>(Tensor<S>);                                      \
  template Var<S> parameter<S>(Tensor<S>);                                     \
  template Var<S> add<S>(const Var<S>&, const Var<S>&);                        \
  template Var<S> sub<S>(const Var<S>&, const Var<S>&);                        \
  template Var<S> mul<S>(const Var<S>&, const Var<S>&);                        \
  template Var<S> div<S>(const Var<S>&, const Var<S>&);                        \
  template Var<S> concat_cols<S>(const std::vector<Var<S>>&);                  \
  template Var<S> scale<S>(const Var<S>&, S);                                  \
  template Var<S> sigmoid<S>(const Var<S>&);                                   \
  template Var<S> tanh_op<S>(const Var<S>&);                                   \
  template Var<S> square<S>(const Var<S>&);                                    \
  template Var<S> sqrt_eps<S>(const Var<S>&, S);                               \
  template Var<S> sum_all<S>(const Var<S>&);                                   \
  template Var<S> mean_all<S>(const Var<S>&);                                  \
  template Var<S> reshape<S>(const Var<S>&, std::vector<int>);                 \
  template Var<S> permute3<S>(const Var<S>&, std::array<int, 3>);              \
  template Var<S> concat_ch<S>(const std::vector<Var<S>>&);                    \
  template Var<S> slice_ch<S>(const Var<S>&, int, int);                        \
  template Var<S> slice_cols<S>(const Var<S>&, int, int);                      \
  template Var<S> mean_axis0<S>(const Var<S>&);                                \
  template Var<S> tile_time<S>(const Var<S>&, int);                            \
  template Var<S> repeat_tail_time<S>(const Var<S>&, int);                     \
  template Var<S> frames_to_ctf<S>(const Var<S>&, int, int);                   \
  template Var<S> softmax_rows<S>(const Var<S>&);                              \
  template Var<S> matmul<S>(const Var<S>&, const Var<S>&, bool, bool);         \
  template Var<S> add_bias_cols<S>(const Var<S>&, const Var<S>&);              \
  template Var<S> add_bias_ch<S>(const Var<S>&, const Var<S>&);                \
  template Var<S> conv_enc<S>(const Var<S>&, const Var<S>&, const Var<S>&);    \
  template Var<S> conv_dec<S>(const Var<S>&, const Var<S>&, const Var<S>&, int); \
  template Var<S> lstm_seq<S>(const Var<S>&, const Var<S>&, const Var<S>&,     \
                              const Var<S>&, bool);

PAEC_INSTANTIATE(float)
PAEC_INSTANTIATE(double)

#undef PAEC_INSTANTIATE

} // namespace paec
