#pragma once
// Dense row-major tensor of rank <= 4. Element type is float for training
// speed or double for finite-difference verification.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "paec/errors.hpp"

namespace paec {

template <class S>
struct Tensor {
  std::vector<int> shape;
  std::vector<S> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> sh) : shape(std::move(sh)) {
    v.assign(numel_of(shape), S(0));
  }
  Tensor(std::vector<int> sh, std::vector<S> data)
      : shape(std::move(sh)), v(std::move(data)) {
    if (v.size() != numel_of(shape)) throw ShapeError("tensor: data/shape mismatch");
  }

  static std::size_t numel_of(const std::vector<int>& sh) {
    std::size_t n = 1;
    for (int d : sh) {
      if (d < 0) throw ShapeError("tensor: negative dimension");
      n *= static_cast<std::size_t>(d);
    }
    return n;
  }

  std::size_t numel() const { return v.size(); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<std::size_t>(i)]; }

  S* data() { return v.data(); }
  const S* data() const { return v.data(); }

  // (a, b) for rank 2; (c, t, f) for rank 3.
  S& at(int a, int b) { return v[static_cast<std::size_t>(a) * shape[1] + b]; }
  const S& at(int a, int b) const {
    return v[static_cast<std::size_t>(a) * shape[1] + b];
  }
  S& at(int a, int b, int c) {
    return v[(static_cast<std::size_t>(a) * shape[1] + b) * shape[2] + c];
  }
  const S& at(int a, int b, int c) const {
    return v[(static_cast<std::size_t>(a) * shape[1] + b) * shape[2] + c];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

} // namespace paec
