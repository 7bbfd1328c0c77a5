#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "xlp/rng.hpp"
#include "xlp/tensor.hpp"

namespace xlp {

template <class Real>
class Graph;

// Lightweight handle to a node on a recorded tape.
template <class Real>
struct Var {
  Graph<Real>* graph = nullptr;
  std::size_t idx = 0;

  bool valid() const { return graph != nullptr; }
  const Tensor<Real>& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

namespace detail {

template <class Real>
void mm(const Tensor<Real>& a, const Tensor<Real>& b, Tensor<Real>& out) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    Real* out_row = out.data() + i * n;
    const Real* a_row = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real s = a_row[p];
      if (s == Real(0)) continue;
      const Real* b_row = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += s * b_row[j];
    }
  }
}

// out += a * b^T
template <class Real>
void add_mm_nt(Tensor<Real>& out, const Tensor<Real>& a, const Tensor<Real>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (std::size_t i = 0; i < m; ++i) {
    const Real* a_row = a.data() + i * k;
    Real* out_row = out.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* b_row = b.data() + j * k;
      Real acc = Real(0);
      for (std::size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
      out_row[j] += acc;
    }
  }
}

// out += a^T * b
template <class Real>
void add_mm_tn(Tensor<Real>& out, const Tensor<Real>& a, const Tensor<Real>& b) {
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (std::size_t i = 0; i < m; ++i) {
    const Real* a_row = a.data() + i * k;
    const Real* b_row = b.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Real s = a_row[p];
      if (s == Real(0)) continue;
      Real* out_row = out.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) out_row[j] += s * b_row[j];
    }
  }
}

[[noreturn]] inline void shape_error(const std::string& op, const std::string& detail) {
  throw std::invalid_argument(op + ": shape mismatch " + detail);
}

}  // namespace detail

// Reverse-mode tape. One Graph records one forward pass; backward() runs once
// and writes gradients through to the bound parameters, after which the graph
// is spent. Graphs are confined to a single thread.
template <class Real>
class Graph {
 public:
  struct Node {
    Tensor<Real> value;
    Tensor<Real> grad;  // allocated lazily during backward
    bool needs_grad = false;
    std::function<void(Graph&, std::size_t)> backprop;
    DiffTensor<Real>* param = nullptr;
  };

  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<Real> param(DiffTensor<Real>& p) {
    Node n;
    n.value = p.value;
    n.needs_grad = grad_enabled_ && p.requires_grad;
    n.param = n.needs_grad ? &p : nullptr;
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Var<Real> constant(Tensor<Real> t) {
    Node n;
    n.value = std::move(t);
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  template <class F>
  Var<Real> emit(Tensor<Real> value, const std::vector<std::size_t>& parents, F&& back) {
    Node n;
    n.value = std::move(value);
    if (grad_enabled_) {
      for (std::size_t p : parents) {
        if (nodes_[p].needs_grad) {
          n.needs_grad = true;
          break;
        }
      }
      if (n.needs_grad) n.backprop = std::forward<F>(back);
    }
    nodes_.push_back(std::move(n));
    return {this, nodes_.size() - 1};
  }

  Node& node(std::size_t i) { return nodes_[i]; }
  const Node& node(std::size_t i) const { return nodes_[i]; }
  std::size_t size() const { return nodes_.size(); }
  bool grad_enabled() const { return grad_enabled_; }

  Tensor<Real>& grad_buffer(std::size_t i) {
    Node& n = nodes_[i];
    if (n.grad.size() != n.value.size())
      n.grad = Tensor<Real>::zeros(n.value.rows(), n.value.cols());
    return n.grad;
  }

  void backward(Var<Real> loss) {
    if (loss.graph != this) throw std::logic_error("backward: loss belongs to a different graph");
    if (backward_done_) throw std::logic_error("backward: already run on this graph");
    const Node& ln = nodes_.at(loss.idx);
    if (ln.value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    if (!ln.needs_grad)
      throw std::logic_error("backward: loss is detached from all trainable parameters");
    grad_buffer(loss.idx).v[0] = Real(1);
    for (std::size_t i = loss.idx + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.needs_grad || n.grad.empty()) continue;
      if (n.param != nullptr) {
        n.param->ensure_grad();
        for (std::size_t j = 0; j < n.grad.size(); ++j) n.param->grad.v[j] += n.grad.v[j];
      } else if (n.backprop) {
        n.backprop(*this, i);
      }
    }
    backward_done_ = true;
  }

 private:
  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
  bool backward_done_ = false;
};

template <class Real>
const Tensor<Real>& Var<Real>::value() const {
  return graph->node(idx).value;
}

namespace detail {
template <class Real>
Graph<Real>& same_graph(const char* op, Var<Real> a, Var<Real> b) {
  if (a.graph == nullptr || a.graph != b.graph)
    throw std::logic_error(std::string(op) + ": operands from different graphs");
  return *a.graph;
}
}  // namespace detail

// ---------------------------------------------------------------------------
// kernels

template <class Real>
Var<Real> matmul(Var<Real> a, Var<Real> b) {
  Graph<Real>& g = detail::same_graph("matmul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.cols() != bv.rows())
    detail::shape_error("matmul", "(" + av.shape_str() + ")*(" + bv.shape_str() + ")");
  Tensor<Real> out(av.rows(), bv.cols());
  detail::mm(av, bv, out);
  const std::size_t ai = a.idx, bi = b.idx;
  return g.emit(std::move(out), {ai, bi}, [ai, bi](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    if (gr.node(ai).needs_grad) detail::add_mm_nt(gr.grad_buffer(ai), go, gr.node(bi).value);
    if (gr.node(bi).needs_grad) detail::add_mm_tn(gr.grad_buffer(bi), gr.node(ai).value, go);
  });
}

template <class Real>
Var<Real> transpose(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  const auto& av = a.value();
  Tensor<Real> out(av.cols(), av.rows());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out.at(j, i) = av.at(i, j);
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    if (!gr.node(ai).needs_grad) return;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) ga.at(j, i) += go.at(i, j);
  });
}

// add supports equal shapes and broadcasting a 1xN row over an MxN operand.
template <class Real>
Var<Real> add(Var<Real> a, Var<Real> b) {
  Graph<Real>& g = detail::same_graph("add", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  const bool broadcast = !av.same_shape(bv);
  if (broadcast && !(bv.rows() == 1 && bv.cols() == av.cols()))
    detail::shape_error("add", av.shape_str() + " + " + bv.shape_str());
  Tensor<Real> out = av;
  if (broadcast) {
    for (std::size_t i = 0; i < out.rows(); ++i)
      for (std::size_t j = 0; j < out.cols(); ++j) out.at(i, j) += bv.at(0, j);
  } else {
    for (std::size_t k = 0; k < out.size(); ++k) out.v[k] += bv.v[k];
  }
  const std::size_t ai = a.idx, bi = b.idx;
  return g.emit(std::move(out), {ai, bi}, [ai, bi, broadcast](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    if (gr.node(ai).needs_grad) {
      Tensor<Real>& ga = gr.grad_buffer(ai);
      for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += go.v[k];
    }
    if (gr.node(bi).needs_grad) {
      Tensor<Real>& gb = gr.grad_buffer(bi);
      if (broadcast) {
        for (std::size_t i = 0; i < go.rows(); ++i)
          for (std::size_t j = 0; j < go.cols(); ++j) gb.at(0, j) += go.at(i, j);
      } else {
        for (std::size_t k = 0; k < go.size(); ++k) gb.v[k] += go.v[k];
      }
    }
  });
}

template <class Real>
Var<Real> scale(Var<Real> a, Real c) {
  Graph<Real>& g = *a.graph;
  Tensor<Real> out = a.value();
  for (auto& x : out.v) x *= c;
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai, c](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += c * go.v[k];
  });
}

template <class Real>
Var<Real> mul(Var<Real> a, Var<Real> b) {
  Graph<Real>& g = detail::same_graph("mul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (!av.same_shape(bv)) detail::shape_error("mul", av.shape_str() + " * " + bv.shape_str());
  Tensor<Real> out = av;
  for (std::size_t k = 0; k < out.size(); ++k) out.v[k] *= bv.v[k];
  const std::size_t ai = a.idx, bi = b.idx;
  return g.emit(std::move(out), {ai, bi}, [ai, bi](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    if (gr.node(ai).needs_grad) {
      Tensor<Real>& ga = gr.grad_buffer(ai);
      const auto& bv2 = gr.node(bi).value;
      for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += go.v[k] * bv2.v[k];
    }
    if (gr.node(bi).needs_grad) {
      Tensor<Real>& gb = gr.grad_buffer(bi);
      const auto& av2 = gr.node(ai).value;
      for (std::size_t k = 0; k < go.size(); ++k) gb.v[k] += go.v[k] * av2.v[k];
    }
  });
}

template <class Real>
Var<Real> tanh(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  Tensor<Real> out = a.value();
  for (auto& x : out.v) x = std::tanh(x);
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& y = gr.node(self).value;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += go.v[k] * (Real(1) - y.v[k] * y.v[k]);
  });
}

template <class Real>
Var<Real> sigmoid(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  Tensor<Real> out = a.value();
  for (auto& x : out.v) x = Real(1) / (Real(1) + std::exp(-x));
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& y = gr.node(self).value;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += go.v[k] * y.v[k] * (Real(1) - y.v[k]);
  });
}

template <class Real>
Var<Real> concat_cols(Var<Real> a, Var<Real> b) {
  Graph<Real>& g = detail::same_graph("concat", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rows() != bv.rows())
    detail::shape_error("concat", av.shape_str() + " | " + bv.shape_str());
  Tensor<Real> out(av.rows(), av.cols() + bv.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) out.at(i, j) = av.at(i, j);
    for (std::size_t j = 0; j < bv.cols(); ++j) out.at(i, av.cols() + j) = bv.at(i, j);
  }
  const std::size_t ai = a.idx, bi = b.idx;
  const std::size_t ac = av.cols(), bc = bv.cols();
  return g.emit(std::move(out), {ai, bi}, [ai, bi, ac, bc](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    if (gr.node(ai).needs_grad) {
      Tensor<Real>& ga = gr.grad_buffer(ai);
      for (std::size_t i = 0; i < ga.rows(); ++i)
        for (std::size_t j = 0; j < ac; ++j) ga.at(i, j) += go.at(i, j);
    }
    if (gr.node(bi).needs_grad) {
      Tensor<Real>& gb = gr.grad_buffer(bi);
      for (std::size_t i = 0; i < gb.rows(); ++i)
        for (std::size_t j = 0; j < bc; ++j) gb.at(i, j) += go.at(i, ac + j);
    }
  });
}

template <class Real>
Var<Real> concat_rows(const std::vector<Var<Real>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no parts");
  Graph<Real>& g = *parts.front().graph;
  std::size_t rows = 0;
  const std::size_t cols = parts.front().value().cols();
  std::vector<std::size_t> parents;
  parents.reserve(parts.size());
  for (const auto& p : parts) {
    if (p.graph != parts.front().graph)
      throw std::logic_error("concat: operands from different graphs");
    if (p.value().cols() != cols)
      detail::shape_error("concat", p.value().shape_str() + " vs cols=" + std::to_string(cols));
    rows += p.value().rows();
    parents.push_back(p.idx);
  }
  Tensor<Real> out(rows, cols);
  std::size_t r = 0;
  for (const auto& p : parts) {
    const auto& pv = p.value();
    for (std::size_t i = 0; i < pv.rows(); ++i, ++r)
      for (std::size_t j = 0; j < cols; ++j) out.at(r, j) = pv.at(i, j);
  }
  return g.emit(std::move(out), parents, [parents](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    std::size_t r = 0;
    for (std::size_t pi : parents) {
      const std::size_t pr = gr.node(pi).value.rows();
      if (gr.node(pi).needs_grad) {
        Tensor<Real>& gp = gr.grad_buffer(pi);
        for (std::size_t i = 0; i < pr; ++i)
          for (std::size_t j = 0; j < go.cols(); ++j) gp.at(i, j) += go.at(r + i, j);
      }
      r += pr;
    }
  });
}

template <class Real>
Var<Real> slice_rows(Var<Real> a, std::size_t r0, std::size_t r1) {
  Graph<Real>& g = *a.graph;
  const auto& av = a.value();
  if (r0 >= r1 || r1 > av.rows())
    detail::shape_error("split", "rows [" + std::to_string(r0) + "," + std::to_string(r1) +
                                     ") of " + av.shape_str());
  Tensor<Real> out(r1 - r0, av.cols());
  for (std::size_t i = r0; i < r1; ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out.at(i - r0, j) = av.at(i, j);
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai, r0](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) ga.at(r0 + i, j) += go.at(i, j);
  });
}

template <class Real>
Var<Real> row(Var<Real> a, std::size_t i) {
  return slice_rows(a, i, i + 1);
}

template <class Real>
Var<Real> slice_cols(Var<Real> a, std::size_t c0, std::size_t c1) {
  Graph<Real>& g = *a.graph;
  const auto& av = a.value();
  if (c0 >= c1 || c1 > av.cols())
    detail::shape_error("split", "cols [" + std::to_string(c0) + "," + std::to_string(c1) +
                                     ") of " + av.shape_str());
  Tensor<Real> out(av.rows(), c1 - c0);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = c0; j < c1; ++j) out.at(i, j - c0) = av.at(i, j);
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai, c0](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t i = 0; i < go.rows(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) ga.at(i, c0 + j) += go.at(i, j);
  });
}

template <class Real>
std::vector<Var<Real>> split_cols(Var<Real> a, std::size_t parts) {
  const std::size_t cols = a.value().cols();
  if (parts == 0 || cols % parts != 0)
    detail::shape_error("split", a.value().shape_str() + " into " + std::to_string(parts));
  const std::size_t w = cols / parts;
  std::vector<Var<Real>> out;
  out.reserve(parts);
  for (std::size_t p = 0; p < parts; ++p) out.push_back(slice_cols(a, p * w, (p + 1) * w));
  return out;
}

template <class Real>
Var<Real> row_softmax(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  Tensor<Real> out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    Real* r = out.data() + i * out.cols();
    Real mx = r[0];
    for (std::size_t j = 1; j < out.cols(); ++j) mx = std::max(mx, r[j]);
    // Double accumulation keeps the result insensitive to summation order,
    // which the sequence-reversal equivariance of relative attention needs.
    double z = 0.0;
    for (std::size_t j = 0; j < out.cols(); ++j) {
      r[j] = std::exp(r[j] - mx);
      z += static_cast<double>(r[j]);
    }
    for (std::size_t j = 0; j < out.cols(); ++j)
      r[j] = static_cast<Real>(static_cast<double>(r[j]) / z);
  }
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& y = gr.node(self).value;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      Real dot = Real(0);
      for (std::size_t j = 0; j < y.cols(); ++j) dot += go.at(i, j) * y.at(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j)
        ga.at(i, j) += y.at(i, j) * (go.at(i, j) - dot);
    }
  });
}

template <class Real>
Var<Real> log_softmax(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  Tensor<Real> out = a.value();
  for (std::size_t i = 0; i < out.rows(); ++i) {
    Real* r = out.data() + i * out.cols();
    Real mx = r[0];
    for (std::size_t j = 1; j < out.cols(); ++j) mx = std::max(mx, r[j]);
    Real z = Real(0);
    for (std::size_t j = 0; j < out.cols(); ++j) z += std::exp(r[j] - mx);
    const Real lse = mx + std::log(z);
    for (std::size_t j = 0; j < out.cols(); ++j) r[j] -= lse;
  }
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& y = gr.node(self).value;  // log-probabilities
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      Real gsum = Real(0);
      for (std::size_t j = 0; j < y.cols(); ++j) gsum += go.at(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j)
        ga.at(i, j) += go.at(i, j) - std::exp(y.at(i, j)) * gsum;
    }
  });
}

template <class Real>
Var<Real> embedding_lookup(Var<Real> table, const std::vector<int>& ids) {
  Graph<Real>& g = *table.graph;
  const auto& tv = table.value();
  Tensor<Real> out(ids.size(), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int id = ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= tv.rows())
      throw std::out_of_range("embedding-lookup: id " + std::to_string(id) + " outside table " +
                              tv.shape_str());
    for (std::size_t j = 0; j < tv.cols(); ++j) out.at(i, j) = tv.at(id, j);
  }
  const std::size_t ti = table.idx;
  return g.emit(std::move(out), {ti}, [ti, ids](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ti).needs_grad) return;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& gt = gr.grad_buffer(ti);
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < go.cols(); ++j) gt.at(ids[i], j) += go.at(i, j);
  });
}

// Inverted dropout: surviving entries scaled by 1/keep so inference is a no-op.
template <class Real>
Var<Real> dropout(Var<Real> a, Real keep, bool training, Rng& rng) {
  if (!(keep > Real(0) && keep <= Real(1)))
    throw std::invalid_argument("inverted-dropout: keep probability out of (0,1]");
  if (!training || keep == Real(1)) return a;
  Graph<Real>& g = *a.graph;
  const auto& av = a.value();
  auto mask = std::make_shared<std::vector<Real>>(av.size());
  const Real inv = Real(1) / keep;
  for (auto& m : *mask) m = rng.uniform() < static_cast<double>(keep) ? inv : Real(0);
  Tensor<Real> out = av;
  for (std::size_t k = 0; k < out.size(); ++k) out.v[k] *= (*mask)[k];
  const std::size_t ai = a.idx;
  return g.emit(std::move(out), {ai}, [ai, mask](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Tensor<Real>& go = gr.node(self).grad;
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (std::size_t k = 0; k < go.size(); ++k) ga.v[k] += go.v[k] * (*mask)[k];
  });
}

template <class Real>
Var<Real> layer_norm(Var<Real> a, Var<Real> gain, Var<Real> bias, Real eps = Real(1e-5)) {
  Graph<Real>& g = detail::same_graph("layer-norm", a, gain);
  const auto& av = a.value();
  const auto& gv = gain.value();
  const auto& bv = bias.value();
  if (gv.rows() != 1 || gv.cols() != av.cols() || bv.rows() != 1 || bv.cols() != av.cols())
    detail::shape_error("layer-norm", av.shape_str() + " with gain " + gv.shape_str() +
                                          ", bias " + bv.shape_str());
  Tensor<Real> out(av.rows(), av.cols());
  const std::size_t d = av.cols();
  for (std::size_t i = 0; i < av.rows(); ++i) {
    Real mu = Real(0);
    for (std::size_t j = 0; j < d; ++j) mu += av.at(i, j);
    mu /= Real(d);
    Real var = Real(0);
    for (std::size_t j = 0; j < d; ++j) {
      const Real c = av.at(i, j) - mu;
      var += c * c;
    }
    var /= Real(d);
    const Real inv = Real(1) / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j)
      out.at(i, j) = (av.at(i, j) - mu) * inv * gv.at(0, j) + bv.at(0, j);
  }
  const std::size_t ai = a.idx, gi = gain.idx, bi = bias.idx;
  return g.emit(std::move(out), {ai, gi, bi}, [ai, gi, bi, eps](Graph<Real>& gr, std::size_t self) {
    const Tensor<Real>& go = gr.node(self).grad;
    const Tensor<Real>& x = gr.node(ai).value;
    const Tensor<Real>& gv2 = gr.node(gi).value;
    const std::size_t d = x.cols();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      Real mu = Real(0);
      for (std::size_t j = 0; j < d; ++j) mu += x.at(i, j);
      mu /= Real(d);
      Real var = Real(0);
      for (std::size_t j = 0; j < d; ++j) {
        const Real c = x.at(i, j) - mu;
        var += c * c;
      }
      var /= Real(d);
      const Real inv = Real(1) / std::sqrt(var + eps);
      // dxhat, plus reductions needed for the mean/variance terms
      Real sum_dxhat = Real(0), sum_dxhat_xhat = Real(0);
      for (std::size_t j = 0; j < d; ++j) {
        const Real xhat = (x.at(i, j) - mu) * inv;
        const Real dxhat = go.at(i, j) * gv2.at(0, j);
        sum_dxhat += dxhat;
        sum_dxhat_xhat += dxhat * xhat;
      }
      if (gr.node(ai).needs_grad) {
        Tensor<Real>& ga = gr.grad_buffer(ai);
        for (std::size_t j = 0; j < d; ++j) {
          const Real xhat = (x.at(i, j) - mu) * inv;
          const Real dxhat = go.at(i, j) * gv2.at(0, j);
          ga.at(i, j) += inv * (dxhat - sum_dxhat / Real(d) - xhat * sum_dxhat_xhat / Real(d));
        }
      }
      if (gr.node(gi).needs_grad) {
        Tensor<Real>& gg = gr.grad_buffer(gi);
        for (std::size_t j = 0; j < d; ++j)
          gg.at(0, j) += go.at(i, j) * (x.at(i, j) - mu) * inv;
      }
      if (gr.node(bi).needs_grad) {
        Tensor<Real>& gb = gr.grad_buffer(bi);
        for (std::size_t j = 0; j < d; ++j) gb.at(0, j) += go.at(i, j);
      }
    }
  });
}

enum class Reduction { Sum, Mean };

// Row-wise negative log-likelihood of the target class, reduced to a scalar.
template <class Real>
Var<Real> cross_entropy(Var<Real> logits, const std::vector<int>& targets,
                        Reduction reduction = Reduction::Sum) {
  Graph<Real>& g = *logits.graph;
  const auto& lv = logits.value();
  if (targets.size() != lv.rows())
    detail::shape_error("cross-entropy",
                        lv.shape_str() + " with " + std::to_string(targets.size()) + " targets");
  const std::size_t n = lv.rows(), c = lv.cols();
  Real total = Real(0);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= c)
      throw std::out_of_range("cross-entropy: target " + std::to_string(t) + " outside " +
                              lv.shape_str());
    const Real* r = lv.data() + i * c;
    Real mx = r[0];
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, r[j]);
    Real z = Real(0);
    for (std::size_t j = 0; j < c; ++j) z += std::exp(r[j] - mx);
    total += mx + std::log(z) - r[t];
  }
  const Real scale_f = reduction == Reduction::Mean ? Real(1) / Real(n) : Real(1);
  const std::size_t li = logits.idx;
  return g.emit(Tensor<Real>::scalar(total * scale_f), {li},
                [li, targets, scale_f](Graph<Real>& gr, std::size_t self) {
                  if (!gr.node(li).needs_grad) return;
                  const Real go = gr.node(self).grad.v[0] * scale_f;
                  const Tensor<Real>& lv2 = gr.node(li).value;
                  Tensor<Real>& gl = gr.grad_buffer(li);
                  const std::size_t c2 = lv2.cols();
                  for (std::size_t i = 0; i < lv2.rows(); ++i) {
                    const Real* r = lv2.data() + i * c2;
                    Real mx = r[0];
                    for (std::size_t j = 1; j < c2; ++j) mx = std::max(mx, r[j]);
                    Real z = Real(0);
                    for (std::size_t j = 0; j < c2; ++j) z += std::exp(r[j] - mx);
                    for (std::size_t j = 0; j < c2; ++j) {
                      const Real p = std::exp(r[j] - mx) / z;
                      gl.at(i, j) += go * (p - (static_cast<int>(j) == targets[i] ? Real(1) : Real(0)));
                    }
                  }
                });
}

template <class Real>
Var<Real> sum(Var<Real> a) {
  Graph<Real>& g = *a.graph;
  Real total = Real(0);
  for (const auto& x : a.value().v) total += x;
  const std::size_t ai = a.idx;
  return g.emit(Tensor<Real>::scalar(total), {ai}, [ai](Graph<Real>& gr, std::size_t self) {
    if (!gr.node(ai).needs_grad) return;
    const Real go = gr.node(self).grad.v[0];
    Tensor<Real>& ga = gr.grad_buffer(ai);
    for (auto& x : ga.v) x += go;
  });
}

template <class Real>
Var<Real> mean(Var<Real> a) {
  return scale(sum(a), Real(1) / Real(a.value().size()));
}

// ---------------------------------------------------------------------------
// fused attention kernels with shared relative-offset tables
//
// rel_index holds, for every (i, j) pair of sequence positions, the row of the
// offset table to use. scores: E[i][j] = scale * q_i . (k_j + rel_k[r_ij]);
// combine: Z[i] = sum_j P[i][j] * (v_j + rel_v[r_ij]).

using RelIndex = std::vector<std::vector<int>>;

template <class Real>
Var<Real> relative_scores(Var<Real> q, Var<Real> k, Var<Real> rel_k,
                          std::shared_ptr<const RelIndex> rel_index, Real scale_f) {
  Graph<Real>& g = detail::same_graph("relative-scores", q, k);
  const auto& qv = q.value();
  const auto& kv = k.value();
  const auto& rv = rel_k.value();
  if (qv.cols() != kv.cols() || qv.cols() != rv.cols() || qv.rows() != kv.rows())
    detail::shape_error("relative-scores", qv.shape_str() + ", " + kv.shape_str() + ", " +
                                               rv.shape_str());
  const std::size_t n = qv.rows(), d = qv.cols();
  Tensor<Real> out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const Real* qi = qv.data() + i * d;
    for (std::size_t j = 0; j < n; ++j) {
      const Real* kj = kv.data() + j * d;
      const Real* rj = rv.data() + static_cast<std::size_t>((*rel_index)[i][j]) * d;
      Real acc = Real(0);
      for (std::size_t p = 0; p < d; ++p) acc += qi[p] * (kj[p] + rj[p]);
      out.at(i, j) = acc * scale_f;
    }
  }
  const std::size_t qi_ = q.idx, ki_ = k.idx, ri_ = rel_k.idx;
  return g.emit(std::move(out), {qi_, ki_, ri_},
                [qi_, ki_, ri_, rel_index, scale_f](Graph<Real>& gr, std::size_t self) {
                  const Tensor<Real>& go = gr.node(self).grad;
                  const Tensor<Real>& qv2 = gr.node(qi_).value;
                  const Tensor<Real>& kv2 = gr.node(ki_).value;
                  const Tensor<Real>& rv2 = gr.node(ri_).value;
                  const std::size_t n2 = qv2.rows(), d2 = qv2.cols();
                  const bool nq = gr.node(qi_).needs_grad;
                  const bool nk = gr.node(ki_).needs_grad;
                  const bool nr = gr.node(ri_).needs_grad;
                  for (std::size_t i = 0; i < n2; ++i) {
                    for (std::size_t j = 0; j < n2; ++j) {
                      const Real e = go.at(i, j) * scale_f;
                      if (e == Real(0)) continue;
                      const std::size_t r = static_cast<std::size_t>((*rel_index)[i][j]);
                      if (nq) {
                        Tensor<Real>& gq = gr.grad_buffer(qi_);
                        for (std::size_t p = 0; p < d2; ++p)
                          gq.at(i, p) += e * (kv2.at(j, p) + rv2.at(r, p));
                      }
                      if (nk) {
                        Tensor<Real>& gk = gr.grad_buffer(ki_);
                        for (std::size_t p = 0; p < d2; ++p) gk.at(j, p) += e * qv2.at(i, p);
                      }
                      if (nr) {
                        Tensor<Real>& grt = gr.grad_buffer(ri_);
                        for (std::size_t p = 0; p < d2; ++p) grt.at(r, p) += e * qv2.at(i, p);
                      }
                    }
                  }
                });
}

template <class Real>
Var<Real> relative_combine(Var<Real> probs, Var<Real> v, Var<Real> rel_v,
                           std::shared_ptr<const RelIndex> rel_index) {
  Graph<Real>& g = detail::same_graph("relative-combine", probs, v);
  const auto& pv = probs.value();
  const auto& vv = v.value();
  const auto& rv = rel_v.value();
  if (pv.rows() != pv.cols() || pv.cols() != vv.rows() || vv.cols() != rv.cols())
    detail::shape_error("relative-combine", pv.shape_str() + ", " + vv.shape_str() + ", " +
                                                rv.shape_str());
  const std::size_t n = vv.rows(), d = vv.cols();
  Tensor<Real> out(n, d);
  std::vector<double> acc(d);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const Real p = pv.at(i, j);
      if (p == Real(0)) continue;
      const Real* vj = vv.data() + j * d;
      const Real* rj = rv.data() + static_cast<std::size_t>((*rel_index)[i][j]) * d;
      for (std::size_t q = 0; q < d; ++q)
        acc[q] += static_cast<double>(p) * static_cast<double>(vj[q] + rj[q]);
    }
    Real* oi = out.data() + i * d;
    for (std::size_t q = 0; q < d; ++q) oi[q] = static_cast<Real>(acc[q]);
  }
  const std::size_t pi_ = probs.idx, vi_ = v.idx, ri_ = rel_v.idx;
  return g.emit(std::move(out), {pi_, vi_, ri_},
                [pi_, vi_, ri_, rel_index](Graph<Real>& gr, std::size_t self) {
                  const Tensor<Real>& go = gr.node(self).grad;
                  const Tensor<Real>& pv2 = gr.node(pi_).value;
                  const Tensor<Real>& vv2 = gr.node(vi_).value;
                  const Tensor<Real>& rv2 = gr.node(ri_).value;
                  const std::size_t n2 = vv2.rows(), d2 = vv2.cols();
                  const bool np = gr.node(pi_).needs_grad;
                  const bool nv = gr.node(vi_).needs_grad;
                  const bool nr = gr.node(ri_).needs_grad;
                  for (std::size_t i = 0; i < n2; ++i) {
                    const Real* gi = go.data() + i * d2;
                    for (std::size_t j = 0; j < n2; ++j) {
                      const std::size_t r = static_cast<std::size_t>((*rel_index)[i][j]);
                      if (np) {
                        Real acc = Real(0);
                        for (std::size_t q = 0; q < d2; ++q)
                          acc += gi[q] * (vv2.at(j, q) + rv2.at(r, q));
                        gr.grad_buffer(pi_).at(i, j) += acc;
                      }
                      const Real p = pv2.at(i, j);
                      if (p == Real(0)) continue;
                      if (nv) {
                        Tensor<Real>& gv = gr.grad_buffer(vi_);
                        for (std::size_t q = 0; q < d2; ++q) gv.at(j, q) += p * gi[q];
                      }
                      if (nr) {
                        Tensor<Real>& grt = gr.grad_buffer(ri_);
                        for (std::size_t q = 0; q < d2; ++q) grt.at(r, q) += p * gi[q];
                      }
                    }
                  }
                });
}

// Fused per-label biaffine scorer. u_all stacks one d x d block per label;
// heads[m] selects the head row in h for modifier row m+1 in d_rep (both carry
// the root row at index 0). Output is one score row per modifier (n x L).
template <class Real>
Var<Real> label_scores(Var<Real> h_rep, Var<Real> d_rep, const std::vector<int>& heads,
                       Var<Real> u_all, Var<Real> w_head, Var<Real> w_dep, Var<Real> bias) {
  Graph<Real>& g = detail::same_graph("label-scores", h_rep, d_rep);
  const auto& hv = h_rep.value();
  const auto& dv = d_rep.value();
  const auto& uv = u_all.value();
  const auto& whv = w_head.value();
  const auto& wdv = w_dep.value();
  const auto& bv = bias.value();
  const std::size_t d = hv.cols();
  const std::size_t labels = bv.cols();
  if (dv.cols() != d || uv.rows() != labels * d || uv.cols() != d || whv.rows() != d ||
      whv.cols() != labels || wdv.rows() != d || wdv.cols() != labels || bv.rows() != 1)
    detail::shape_error("label-scores", hv.shape_str() + ", " + dv.shape_str() + ", " +
                                            uv.shape_str());
  const std::size_t n = heads.size();
  Tensor<Real> out(n, labels);
  std::vector<Real> tmp(d);
  for (std::size_t m = 0; m < n; ++m) {
    const std::size_t h = static_cast<std::size_t>(heads[m]);
    const Real* hr = hv.data() + h * d;
    const Real* dr = dv.data() + (m + 1) * d;
    for (std::size_t l = 0; l < labels; ++l) {
      const Real* ub = uv.data() + l * d * d;
      Real acc = bv.at(0, l);
      for (std::size_t a = 0; a < d; ++a) {
        const Real ha = hr[a];
        acc += ha * whv.at(a, l);
        const Real* ur = ub + a * d;
        Real dot = Real(0);
        for (std::size_t b = 0; b < d; ++b) dot += ur[b] * dr[b];
        acc += ha * dot;
      }
      for (std::size_t b = 0; b < d; ++b) acc += dr[b] * wdv.at(b, l);
      out.at(m, l) = acc;
    }
  }
  const std::size_t hi = h_rep.idx, di = d_rep.idx, ui = u_all.idx, whi = w_head.idx,
                    wdi = w_dep.idx, bi = bias.idx;
  return g.emit(
      std::move(out), {hi, di, ui, whi, wdi, bi},
      [hi, di, ui, whi, wdi, bi, heads](Graph<Real>& gr, std::size_t self) {
        const Tensor<Real>& go = gr.node(self).grad;
        const Tensor<Real>& hv2 = gr.node(hi).value;
        const Tensor<Real>& dv2 = gr.node(di).value;
        const Tensor<Real>& uv2 = gr.node(ui).value;
        const Tensor<Real>& whv2 = gr.node(whi).value;
        const Tensor<Real>& wdv2 = gr.node(wdi).value;
        const std::size_t d = hv2.cols();
        const std::size_t labels = go.cols();
        const bool nh = gr.node(hi).needs_grad, nd = gr.node(di).needs_grad,
                   nu = gr.node(ui).needs_grad, nwh = gr.node(whi).needs_grad,
                   nwd = gr.node(wdi).needs_grad, nb = gr.node(bi).needs_grad;
        for (std::size_t m = 0; m < heads.size(); ++m) {
          const std::size_t h = static_cast<std::size_t>(heads[m]);
          const Real* hr = hv2.data() + h * d;
          const Real* dr = dv2.data() + (m + 1) * d;
          for (std::size_t l = 0; l < labels; ++l) {
            const Real e = go.at(m, l);
            if (e == Real(0)) continue;
            const Real* ub = uv2.data() + l * d * d;
            if (nb) gr.grad_buffer(bi).at(0, l) += e;
            for (std::size_t a = 0; a < d; ++a) {
              const Real* ur = ub + a * d;
              if (nh) {
                Real dot = whv2.at(a, l);
                for (std::size_t b = 0; b < d; ++b) dot += ur[b] * dr[b];
                gr.grad_buffer(hi).at(h, a) += e * dot;
              }
              if (nu) {
                Tensor<Real>& gu = gr.grad_buffer(ui);
                Real* gur = gu.data() + (l * d + a) * d;
                const Real eh = e * hr[a];
                for (std::size_t b = 0; b < d; ++b) gur[b] += eh * dr[b];
              }
              if (nwh) gr.grad_buffer(whi).at(a, l) += e * hr[a];
            }
            if (nd || nwd) {
              for (std::size_t b = 0; b < d; ++b) {
                if (nd) {
                  Real dot = wdv2.at(b, l);
                  for (std::size_t a = 0; a < d; ++a) dot += hr[a] * ub[a * d + b];
                  gr.grad_buffer(di).at(m + 1, b) += e * dot;
                }
                if (nwd) gr.grad_buffer(wdi).at(b, l) += e * dr[b];
              }
            }
          }
        }
      });
}

}  // namespace xlp
