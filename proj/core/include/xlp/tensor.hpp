#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace xlp {

// Dense row-major matrix. Rank is always 2: scalars are 1x1, row vectors 1xd.
template <class Real>
struct Tensor {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<Real> v;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), v(r * c, Real(0)) {}
  Tensor(std::size_t r, std::size_t c, std::vector<Real> data)
      : n_rows(r), n_cols(c), v(std::move(data)) {
    if (v.size() != r * c) throw std::invalid_argument("tensor: data size does not match shape");
  }

  static Tensor zeros(std::size_t r, std::size_t c) { return Tensor(r, c); }
  static Tensor scalar(Real x) {
    Tensor t(1, 1);
    t.v[0] = x;
    return t;
  }
  static Tensor row(std::vector<Real> xs) {
    const std::size_t d = xs.size();
    return Tensor(1, d, std::move(xs));
  }
  static Tensor ones(std::size_t r, std::size_t c) {
    Tensor t(r, c);
    for (auto& x : t.v) x = Real(1);
    return t;
  }

  std::size_t rows() const { return n_rows; }
  std::size_t cols() const { return n_cols; }
  std::size_t size() const { return v.size(); }
  bool empty() const { return v.empty(); }

  Real& at(std::size_t i, std::size_t j) { return v[i * n_cols + j]; }
  Real at(std::size_t i, std::size_t j) const { return v[i * n_cols + j]; }

  Real* data() { return v.data(); }
  const Real* data() const { return v.data(); }

  bool same_shape(const Tensor& o) const { return n_rows == o.n_rows && n_cols == o.n_cols; }

  std::string shape_str() const {
    return std::to_string(n_rows) + "x" + std::to_string(n_cols);
  }
};

// A value with an optional gradient buffer. Parameters are created with
// requires_grad=true; frozen lookup tables stay outside the parameter store
// and never carry gradients.
template <class Real>
struct DiffTensor {
  Tensor<Real> value;
  Tensor<Real> grad;  // empty until a backward pass touches this tensor
  bool requires_grad = true;

  std::size_t rows() const { return value.rows(); }
  std::size_t cols() const { return value.cols(); }
  std::size_t size() const { return value.size(); }

  void ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor<Real>::zeros(value.rows(), value.cols());
  }
  void zero_grad() {
    for (auto& g : grad.v) g = Real(0);
  }
};

}  // namespace xlp
