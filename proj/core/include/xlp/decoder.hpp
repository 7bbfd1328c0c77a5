#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "xlp/graph.hpp"
#include "xlp/mst.hpp"
#include "xlp/params.hpp"

namespace xlp {

// Bilinear-plus-head-bias arc scores: S[h][m] = H_h . U . D_m + u . H_h.
// Exposed separately so the raw form can be exercised with fixed weights.
template <class Real>
Var<Real> arc_biaffine_scores(Graph<Real>& g, Var<Real> h_rep, Var<Real> d_rep, Var<Real> u_mat,
                              Var<Real> u_bias) {
  const Var<Real> bilinear = matmul(matmul(h_rep, u_mat), transpose(d_rep));
  const Var<Real> head_bias = matmul(h_rep, u_bias);  // (n+1) x 1
  const Var<Real> ones = g.constant(Tensor<Real>::ones(1, d_rep.rows()));
  return add(bilinear, matmul(head_bias, ones));
}

// Deep biaffine attentional arc scorer over root-prepended encodings.
template <class Real>
class ArcBiaffine {
 public:
  ArcBiaffine(int enc_width, int arc_mlp, ParameterStore<Real>& store) {
    wh_ = &store.add("dec.arc.head.W", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(arc_mlp), Init::XavierUniform);
    bh_ = &store.add("dec.arc.head.b", 1, static_cast<std::size_t>(arc_mlp), Init::Zeros);
    wd_ = &store.add("dec.arc.dep.W", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(arc_mlp), Init::XavierUniform);
    bd_ = &store.add("dec.arc.dep.b", 1, static_cast<std::size_t>(arc_mlp), Init::Zeros);
    u_ = &store.add("dec.arc.U", static_cast<std::size_t>(arc_mlp),
                    static_cast<std::size_t>(arc_mlp), Init::XavierUniform);
    bias_ = &store.add("dec.arc.u", static_cast<std::size_t>(arc_mlp), 1, Init::XavierUniform);
  }

  // enc_root: (n+1) x enc_width with the root vector at row 0.
  Var<Real> score_arcs(Graph<Real>& g, Var<Real> enc_root) const {
    const Var<Real> h = tanh(add(matmul(enc_root, g.param(*wh_)), g.param(*bh_)));
    const Var<Real> d = tanh(add(matmul(enc_root, g.param(*wd_)), g.param(*bd_)));
    return arc_biaffine_scores(g, h, d, g.param(*u_), g.param(*bias_));
  }

 private:
  DiffTensor<Real>* wh_;
  DiffTensor<Real>* bh_;
  DiffTensor<Real>* wd_;
  DiffTensor<Real>* bd_;
  DiffTensor<Real>* u_;
  DiffTensor<Real>* bias_;
};

// Per-label biaffine scorer over (head, modifier) representation pairs.
template <class Real>
class LabelScorer {
 public:
  LabelScorer(int enc_width, int label_mlp, int num_labels, ParameterStore<Real>& store)
      : num_labels_(num_labels) {
    wh_ = &store.add("dec.label.head.W", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(label_mlp), Init::XavierUniform);
    bh_ = &store.add("dec.label.head.b", 1, static_cast<std::size_t>(label_mlp), Init::Zeros);
    wd_ = &store.add("dec.label.dep.W", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(label_mlp), Init::XavierUniform);
    bd_ = &store.add("dec.label.dep.b", 1, static_cast<std::size_t>(label_mlp), Init::Zeros);
    u_all_ = &store.add("dec.label.U", static_cast<std::size_t>(num_labels * label_mlp),
                        static_cast<std::size_t>(label_mlp), Init::XavierUniform);
    w_head_ = &store.add("dec.label.wh", static_cast<std::size_t>(label_mlp),
                         static_cast<std::size_t>(num_labels), Init::XavierUniform);
    w_dep_ = &store.add("dec.label.wd", static_cast<std::size_t>(label_mlp),
                        static_cast<std::size_t>(num_labels), Init::XavierUniform);
    b_ = &store.add("dec.label.b", 1, static_cast<std::size_t>(num_labels), Init::Zeros);
  }

  int num_labels() const { return num_labels_; }

  // heads[m] is the head position (0..n) of token m+1. Returns n x L scores.
  Var<Real> score(Graph<Real>& g, Var<Real> enc_root, const std::vector<int>& heads) const {
    const Var<Real> h = tanh(add(matmul(enc_root, g.param(*wh_)), g.param(*bh_)));
    const Var<Real> d = tanh(add(matmul(enc_root, g.param(*wd_)), g.param(*bd_)));
    return label_scores(h, d, heads, g.param(*u_all_), g.param(*w_head_), g.param(*w_dep_),
                        g.param(*b_));
  }

 private:
  int num_labels_;
  DiffTensor<Real>* wh_;
  DiffTensor<Real>* bh_;
  DiffTensor<Real>* wd_;
  DiffTensor<Real>* bd_;
  DiffTensor<Real>* u_all_;
  DiffTensor<Real>* w_head_;
  DiffTensor<Real>* w_dep_;
  DiffTensor<Real>* b_;
};

// --------------------------------------------------------------------------
// stack-pointer decoding
//
// The stack starts with the root. Each step points at an unattached token
// (attach: push it) or at the stack top itself (pop). Popping is masked while
// it would strand unattached tokens below a bare root, which also keeps the
// root at exactly one child, so any parameter setting yields a valid tree.

struct PointerState {
  std::vector<int> stack{0};
  std::vector<bool> attached;  // index 1..n
  std::vector<int> heads;      // result, heads[m-1] for token m
  std::size_t remaining = 0;

  explicit PointerState(int n)
      : attached(static_cast<std::size_t>(n + 1), false),
        heads(static_cast<std::size_t>(n), -1),
        remaining(static_cast<std::size_t>(n)) {}

  bool done() const { return stack.empty(); }
  int top() const { return stack.back(); }

  bool allowed(int j) const {
    const int t = top();
    if (j == t) return remaining == 0 || stack.size() > 2;
    return j >= 1 && !attached[static_cast<std::size_t>(j)];
  }

  void apply(int j) {
    const int t = top();
    if (j == t) {
      stack.pop_back();
      return;
    }
    attached[static_cast<std::size_t>(j)] = true;
    heads[static_cast<std::size_t>(j - 1)] = t;
    --remaining;
    stack.push_back(j);
  }
};

// Drives the stack discipline with an arbitrary scorer; the scorer sees the
// current stack top and returns one score per position 0..n. Masked argmax,
// ties to the smaller index.
inline std::vector<int> stackptr_walk(
    int n, const std::function<std::vector<double>(const PointerState&)>& scorer) {
  PointerState state(n);
  while (!state.done()) {
    const std::vector<double> scores = scorer(state);
    if (scores.size() != static_cast<std::size_t>(n + 1))
      throw std::invalid_argument("stackptr_walk: scorer returned " +
                                  std::to_string(scores.size()) + " scores for n=" +
                                  std::to_string(n));
    int best = -1;
    double best_score = 0.0;
    for (int j = 0; j <= n; ++j) {
      if (!state.allowed(j)) continue;
      if (best < 0 || scores[static_cast<std::size_t>(j)] > best_score) {
        best = j;
        best_score = scores[static_cast<std::size_t>(j)];
      }
    }
    state.apply(best);
  }
  return state.heads;
}

struct DerivationStep {
  int stack_top = 0;
  int target = 0;  // == stack_top means pop
};

// Teacher-forcing derivation for a gold tree: depth-first, children visited
// inside-out (closer to the head first, left before right on distance ties).
std::vector<DerivationStep> gold_derivation(const std::vector<int>& gold_heads);

template <class Real>
class StackPtrCore {
 public:
  StackPtrCore(int enc_width, int hidden, int ptr_mlp, ParameterStore<Real>& store)
      : hidden_(hidden) {
    wx_ = &store.add("dec.ptr.lstm.Wx", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(4 * hidden), Init::XavierUniform);
    wh_ = &store.add("dec.ptr.lstm.Wh", static_cast<std::size_t>(hidden),
                     static_cast<std::size_t>(4 * hidden), Init::XavierUniform);
    b_ = &store.add("dec.ptr.lstm.b", 1, static_cast<std::size_t>(4 * hidden), Init::Zeros);
    ws_ = &store.add("dec.ptr.state.W", static_cast<std::size_t>(hidden),
                     static_cast<std::size_t>(ptr_mlp), Init::XavierUniform);
    bs_ = &store.add("dec.ptr.state.b", 1, static_cast<std::size_t>(ptr_mlp), Init::Zeros);
    wc_ = &store.add("dec.ptr.child.W", static_cast<std::size_t>(enc_width),
                     static_cast<std::size_t>(ptr_mlp), Init::XavierUniform);
    bc_ = &store.add("dec.ptr.child.b", 1, static_cast<std::size_t>(ptr_mlp), Init::Zeros);
    u_ = &store.add("dec.ptr.U", static_cast<std::size_t>(ptr_mlp),
                    static_cast<std::size_t>(ptr_mlp), Init::XavierUniform);
    v_ = &store.add("dec.ptr.v", static_cast<std::size_t>(ptr_mlp), 1, Init::XavierUniform);
  }

  // Summed pointer cross-entropy along the gold derivation.
  Var<Real> pointer_loss(Graph<Real>& g, Var<Real> enc_root,
                         const std::vector<int>& gold_heads) const {
    const int n = static_cast<int>(gold_heads.size());
    const auto derivation = gold_derivation(gold_heads);
    const Var<Real> children = child_reps(g, enc_root);
    LstmState state = initial_state(g);
    PointerState mask_state(n);
    std::vector<Var<Real>> step_scores;
    std::vector<int> targets;
    step_scores.reserve(derivation.size());
    targets.reserve(derivation.size());
    for (const DerivationStep& step : derivation) {
      state = lstm_step(g, row(enc_root, static_cast<std::size_t>(step.stack_top)), state);
      step_scores.push_back(masked_scores(g, state, children, mask_state));
      targets.push_back(step.target);
      mask_state.apply(step.target);
    }
    return cross_entropy(concat_rows(step_scores), targets, Reduction::Sum);
  }

  // Greedy decode; valid for any parameters by construction.
  std::vector<int> decode(Graph<Real>& g, Var<Real> enc_root) const {
    const int n = static_cast<int>(enc_root.rows()) - 1;
    const Var<Real> children = child_reps(g, enc_root);
    LstmState state = initial_state(g);
    PointerState ptr(n);
    while (!ptr.done()) {
      state = lstm_step(g, row(enc_root, static_cast<std::size_t>(ptr.top())), state);
      const Var<Real> scores = masked_scores(g, state, children, ptr);
      const Tensor<Real>& sv = scores.value();
      int best = -1;
      Real best_score = Real(0);
      for (int j = 0; j <= n; ++j) {
        if (!ptr.allowed(j)) continue;
        if (best < 0 || sv.v[static_cast<std::size_t>(j)] > best_score) {
          best = j;
          best_score = sv.v[static_cast<std::size_t>(j)];
        }
      }
      ptr.apply(best);
    }
    return ptr.heads;
  }

 private:
  struct LstmState {
    Var<Real> h;
    Var<Real> c;
  };

  LstmState initial_state(Graph<Real>& g) const {
    return {g.constant(Tensor<Real>::zeros(1, static_cast<std::size_t>(hidden_))),
            g.constant(Tensor<Real>::zeros(1, static_cast<std::size_t>(hidden_)))};
  }

  LstmState lstm_step(Graph<Real>& g, Var<Real> x, const LstmState& prev) const {
    Var<Real> gates = add(add(matmul(x, g.param(*wx_)), matmul(prev.h, g.param(*wh_))), g.param(*b_));
    const auto parts = split_cols(gates, 4);
    const Var<Real> i_gate = sigmoid(parts[0]);
    const Var<Real> f_gate = sigmoid(parts[1]);
    const Var<Real> g_gate = tanh(parts[2]);
    const Var<Real> o_gate = sigmoid(parts[3]);
    const Var<Real> c = add(mul(f_gate, prev.c), mul(i_gate, g_gate));
    return {mul(o_gate, tanh(c)), c};
  }

  Var<Real> child_reps(Graph<Real>& g, Var<Real> enc_root) const {
    return tanh(add(matmul(enc_root, g.param(*wc_)), g.param(*bc_)));
  }

  // Biaffine pointer scores with invalid outcomes pushed to -1e9.
  Var<Real> masked_scores(Graph<Real>& g, const LstmState& state, Var<Real> children,
                          const PointerState& ptr) const {
    const Var<Real> srep = tanh(add(matmul(state.h, g.param(*ws_)), g.param(*bs_)));
    const Var<Real> bilinear = matmul(matmul(srep, g.param(*u_)), transpose(children));
    const Var<Real> child_bias = transpose(matmul(children, g.param(*v_)));
    Var<Real> scores = add(bilinear, child_bias);
    const int n = static_cast<int>(children.rows()) - 1;
    Tensor<Real> mask(1, static_cast<std::size_t>(n + 1));
    for (int j = 0; j <= n; ++j)
      mask.v[static_cast<std::size_t>(j)] = ptr.allowed(j) ? Real(0) : Real(-1e9);
    return add(scores, g.constant(std::move(mask)));
  }

  int hidden_;
  DiffTensor<Real>* wx_;
  DiffTensor<Real>* wh_;
  DiffTensor<Real>* b_;
  DiffTensor<Real>* ws_;
  DiffTensor<Real>* bs_;
  DiffTensor<Real>* wc_;
  DiffTensor<Real>* bc_;
  DiffTensor<Real>* u_;
  DiffTensor<Real>* v_;
};

}  // namespace xlp
