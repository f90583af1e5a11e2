#pragma once
// Reverse-mode autodiff over Tensor<S>. A Tape records nodes in creation
// order; backward() replays them in reverse. With no tape active, ops run
// eagerly and intermediates free themselves when their handles go out of
// scope, which keeps long-clip inference memory flat.
//
// Parameters are leaf nodes owned by a ParamStore, not by any tape; their
// gradients accumulate across backward() until zero_grads().

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "paec/tensor.hpp"

namespace paec {

template <class S>
struct Node {
  Tensor<S> val;
  Tensor<S> grad; // empty until touched by backward
  std::function<void()> backward;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.v.empty()) grad = Tensor<S>(val.shape);
  }
};

template <class S>
using NodeP = std::shared_ptr<Node<S>>;

template <class S>
class Tape {
 public:
  Tape() : prev_(current_ref()) { current_ref() = this; }
  ~Tape() { current_ref() = prev_; }
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* current() { return current_ref(); }

  void record(const NodeP<S>& n) { nodes_.push_back(n); }

  // Seeds d(root)/d(root) = 1 and sweeps the recorded graph in reverse.
  void backward(const NodeP<S>& root);

  std::size_t size() const { return nodes_.size(); }

 private:
  static Tape*& current_ref() {
    thread_local Tape* cur = nullptr;
    return cur;
  }
  std::vector<NodeP<S>> nodes_;
  Tape* prev_;
};

template <class S>
struct Var {
  NodeP<S> n;

  Var() = default;
  explicit Var(NodeP<S> node) : n(std::move(node)) {}

  Tensor<S>& val() { return n->val; }
  const Tensor<S>& val() const { return n->val; }
  const std::vector<int>& shape() const { return n->val.shape; }
  bool defined() const { return n != nullptr; }
};

// Leaf holding a value that needs no gradient (network inputs).
template <class S>
Var<S> constant(Tensor<S> t);
// Leaf parameter; requires_grad from birth.
template <class S>
Var<S> parameter(Tensor<S> t);

// ---- elementwise ----
template <class S> Var<S> add(const Var<S>& a, const Var<S>& b);
template <class S> Var<S> sub(const Var<S>& a, const Var<S>& b);
template <class S> Var<S> mul(const Var<S>& a, const Var<S>& b);
// Elementwise a / b; b must be bounded away from zero.
template <class S> Var<S> div(const Var<S>& a, const Var<S>& b);
template <class S> Var<S> scale(const Var<S>& a, S c);
template <class S> Var<S> sigmoid(const Var<S>& a);
template <class S> Var<S> tanh_op(const Var<S>& a);
template <class S> Var<S> square(const Var<S>& a);
// sqrt(a + eps): safe magnitude root
template <class S> Var<S> sqrt_eps(const Var<S>& a, S eps);

// ---- reductions / shape ----
template <class S> Var<S> sum_all(const Var<S>& a);
template <class S> Var<S> mean_all(const Var<S>& a);
template <class S> Var<S> reshape(const Var<S>& a, std::vector<int> shape);
// Generic rank-3 permute: out dims are in.shape reordered by perm.
template <class S> Var<S> permute3(const Var<S>& a, std::array<int, 3> perm);
template <class S> Var<S> concat_ch(const std::vector<Var<S>>& xs);
template <class S> Var<S> slice_ch(const Var<S>& x, int c0, int c1);
// Columns of a rank-2 tensor.
template <class S> Var<S> slice_cols(const Var<S>& x, int c0, int c1);
template <class S> Var<S> concat_cols(const std::vector<Var<S>>& xs);
// Mean over axis 0 of a rank-3 tensor: (T,F,H) -> (F,H).
template <class S> Var<S> mean_axis0(const Var<S>& x);
// (F) -> (1,T,F), value broadcast over frames.
template <class S> Var<S> tile_time(const Var<S>& v, int t_frames);
// Extend (C,t0,F) to (C,T,F) by repeating the last frame.
template <class S> Var<S> repeat_tail_time(const Var<S>& x, int t_frames);
// (T, C*F) per-frame rows -> (C,T,F).
template <class S> Var<S> frames_to_ctf(const Var<S>& x, int c, int f);
// Softmax over the last axis of a rank-2 tensor.
template <class S> Var<S> softmax_rows(const Var<S>& x);

// ---- dense / conv / recurrent ----
// (M,K)x(K,N) with optional operand transposes (not both).
template <class S>
Var<S> matmul(const Var<S>& a, const Var<S>& b, bool transA = false,
              bool transB = false);
template <class S> Var<S> add_bias_cols(const Var<S>& x, const Var<S>& b);
template <class S> Var<S> add_bias_ch(const Var<S>& x, const Var<S>& b);

// Gated-encoder convolution: kernel (2,3), stride (1,2), causal time pad,
// no frequency pad. x (C,T,F), w (O, C*6) flattened (c,kt,kf), b (O).
template <class S>
Var<S> conv_enc(const Var<S>& x, const Var<S>& w, const Var<S>& b);
// Transposed counterpart: x (C,T,F_in), w (C, O*6), output (O,T,f_out).
template <class S>
Var<S> conv_dec(const Var<S>& x, const Var<S>& w, const Var<S>& b, int f_out);

inline int conv_enc_f_out(int f_in) { return (f_in - 3) / 2 + 1; }

// Fused unidirectional LSTM over sequences in parallel. x (B,T,I),
// w_ih (4H,I), w_hh (4H,H), b (4H); returns hidden states (B,T,H).
// Gate layout i,f,g,o. reverse=true runs right-to-left (still emitting
// y[:,t,:] for input t).
template <class S>
Var<S> lstm_seq(const Var<S>& x, const Var<S>& w_ih, const Var<S>& w_hh,
                const Var<S>& b, bool reverse);

} // namespace paec
