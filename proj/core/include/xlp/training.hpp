#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/evaluation.hpp"
#include "xlp/model.hpp"
#include "xlp/params.hpp"

namespace xlp {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 80;
  double learning_rate = 1e-4;
  std::size_t max_sentence_length = 140;
  std::uint64_t seed = 1;

  // Per-architecture defaults: RNN models train with lr 1e-3 / batch 32,
  // self-attention models with lr 1e-4 / batch 80.
  static TrainConfig for_encoder(EncoderVariant v) {
    TrainConfig c;
    if (v == EncoderVariant::Rnn) {
      c.batch_size = 32;
      c.learning_rate = 1e-3;
    }
    return c;
  }

  void validate() const {
    if (epochs < 0) throw std::invalid_argument("train config: negative epochs");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be positive");
    if (!(learning_rate > 0)) throw std::invalid_argument("train config: learning rate must be positive");
    if (max_sentence_length < 1)
      throw std::invalid_argument("train config: max_sentence_length must be >= 1");
  }
};

// Standard bias-corrected Adam. Moments are keyed by parameter name and
// allocated on first use.
template <class Real>
struct AdamState {
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
  std::int64_t step = 0;
  std::unordered_map<std::string, std::pair<std::vector<Real>, std::vector<Real>>> moments;
};

template <class Real>
void adam_step(ParameterStore<Real>& params, AdamState<Real>& state, Real lr) {
  ++state.step;
  const Real bc1 = Real(1) - std::pow(state.beta1, static_cast<Real>(state.step));
  const Real bc2 = Real(1) - std::pow(state.beta2, static_cast<Real>(state.step));
  for (auto& entry : params.entries()) {
    auto& t = entry->tensor;
    if (t.grad.size() != t.value.size())
      throw std::logic_error("adam_step: parameter " + entry->name + " has no gradient");
    auto& [m, v] = state.moments[entry->name];
    if (m.size() != t.size()) {
      m.assign(t.size(), Real(0));
      v.assign(t.size(), Real(0));
    }
    for (std::size_t k = 0; k < t.size(); ++k) {
      const Real g = t.grad.v[k];
      m[k] = state.beta1 * m[k] + (Real(1) - state.beta1) * g;
      v[k] = state.beta2 * v[k] + (Real(1) - state.beta2) * g * g;
      const Real m_hat = m[k] / bc1;
      const Real v_hat = v[k] / bc2;
      t.value.v[k] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_uas = -1.0;  // -1 when no dev treebank was supplied
  double dev_las = -1.0;
  double wall_seconds = 0.0;
};

template <class Real>
EvalReport evaluate_model(const Parser<Real>& model, const Treebank& tb, bool exclude_punct = true) {
  std::vector<ParseTree> pred;
  pred.reserve(tb.sentences.size());
  for (const Sentence& s : tb.sentences) pred.push_back(model.predict(s));
  return attachment_scores(pred, tb.sentences, exclude_punct);
}

// One seeded training run: shuffled mini-batches, Adam updates, per-epoch dev
// scores when a dev treebank is given. The model keeps the parameters of the
// best dev UAS epoch (final parameters when dev is absent).
template <class Real>
std::vector<EpochLog> train(Parser<Real>& model, const Treebank& train_tb, const Treebank* dev_tb,
                            const TrainConfig& cfg) {
  cfg.validate();
  const Treebank filtered = filter_by_length(train_tb, cfg.max_sentence_length);
  if (filtered.sentences.empty())
    throw std::invalid_argument("train: no sentences within the length threshold");

  Rng rng(cfg.seed);
  AdamState<Real> adam;
  std::vector<EpochLog> log;
  std::vector<std::size_t> order(filtered.sentences.size());
  std::iota(order.begin(), order.end(), 0);

  double best_dev_uas = -1.0;
  std::vector<Tensor<Real>> best_params;
  const auto snapshot = [&]() {
    best_params.clear();
    for (const auto& e : model.params().entries()) best_params.push_back(e->tensor.value);
  };
  const auto restore = [&]() {
    std::size_t i = 0;
    for (auto& e : model.params().entries()) e->tensor.value = best_params[i++];
  };

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<const Sentence*> batch;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      for (std::size_t i = start; i < end; ++i) batch.push_back(&filtered.sentences[order[i]]);
      Graph<Real> g;
      const Var<Real> loss = model.batch_loss(g, batch, true, rng);
      loss_sum += static_cast<double>(loss.value().v[0]);
      ++batches;
      model.params().zero_grads();
      g.backward(loss);
      adam_step(model.params(), adam, static_cast<Real>(cfg.learning_rate));
    }

    EpochLog row;
    row.epoch = epoch;
    row.train_loss = loss_sum / static_cast<double>(batches);
    if (dev_tb != nullptr) {
      const EvalReport dev = evaluate_model(model, *dev_tb);
      row.dev_uas = dev.uas;
      row.dev_las = dev.las;
      if (dev.uas > best_dev_uas) {
        best_dev_uas = dev.uas;
        snapshot();
      }
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log.push_back(row);
  }
  if (dev_tb != nullptr && !best_params.empty()) restore();
  return log;
}

inline std::string training_log_tsv(const std::vector<EpochLog>& log) {
  std::string out = "epoch\ttrain_loss\tdev_uas\tdev_las\twall_seconds\n";
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.4f\t%.4f\t%.3f\n", row.epoch, row.train_loss,
                  row.dev_uas, row.dev_las, row.wall_seconds);
    out += buf;
  }
  return out;
}

}  // namespace xlp
