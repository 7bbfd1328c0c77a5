#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/graph.hpp"
#include "xlp/params.hpp"
#include "xlp/vocab.hpp"

namespace xlp {

enum class EncoderVariant { Rnn, SelfAttRelative, SelfAttRelativeDir, SelfAttAbsolute, SelfAttNoPosi };

inline const char* encoder_variant_name(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::Rnn: return "rnn";
    case EncoderVariant::SelfAttRelative: return "selfatt-relative";
    case EncoderVariant::SelfAttRelativeDir: return "selfatt-relative-dir";
    case EncoderVariant::SelfAttAbsolute: return "selfatt-absolute";
    case EncoderVariant::SelfAttNoPosi: return "selfatt-noposi";
  }
  return "?";
}

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::SelfAttRelative;
  int layers = 6;
  int d_model = 350;    // word_dim + pos_dim
  int rnn_hidden = 300; // per direction
  int d_ff = 512;
  int heads = 7;
  int clip_k = 10;
  double dropout = 0.2;
  int word_dim = 300;
  int pos_dim = 50;

  static EncoderConfig rnn() {
    EncoderConfig c;
    c.variant = EncoderVariant::Rnn;
    c.layers = 3;
    c.dropout = 0.33;
    return c;
  }
  static EncoderConfig self_attention(EncoderVariant v = EncoderVariant::SelfAttRelative) {
    EncoderConfig c;
    c.variant = v;
    return c;
  }

  bool is_rnn() const { return variant == EncoderVariant::Rnn; }
  int output_width() const { return is_rnn() ? 2 * rnn_hidden : d_model; }
  int head_dim() const { return d_model / heads; }

  void validate() const {
    if (word_dim + pos_dim != d_model)
      throw std::invalid_argument("encoder config: word_dim + pos_dim must equal d_model");
    if (layers < 1) throw std::invalid_argument("encoder config: layers must be positive");
    if (clip_k < 1) throw std::invalid_argument("encoder config: clip_k must be >= 1");
    if (!is_rnn() && d_model % heads != 0)
      throw std::invalid_argument("encoder config: d_model must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0))
      throw std::invalid_argument("encoder config: dropout must be in [0,1)");
  }
};

// Table row for the offset between 1-based positions i and j, clipped at k.
// Undirected tables have k+1 rows; directed ones 2k+1.
inline int relative_index(int i, int j, int k, bool directed) {
  if (directed) {
    int d = j - i;
    if (d < -k) d = -k;
    if (d > k) d = k;
    return d + k;
  }
  const int d = std::abs(j - i);
  return d < k ? d : k;
}

inline std::shared_ptr<const RelIndex> build_rel_index(int n, int k, bool directed) {
  auto idx = std::make_shared<RelIndex>(static_cast<std::size_t>(n),
                                        std::vector<int>(static_cast<std::size_t>(n), 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      (*idx)[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          relative_index(i + 1, j + 1, k, directed);
  return idx;
}

// Fixed sinusoidal position signal added to inputs by the absolute variant.
template <class Real>
Tensor<Real> sinusoidal_positions(int n, int d) {
  Tensor<Real> t(static_cast<std::size_t>(n), static_cast<std::size_t>(d));
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -2.0 * static_cast<double>(i / 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      t.at(static_cast<std::size_t>(pos), static_cast<std::size_t>(i)) =
          static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return t;
}

// Word part comes from a frozen pretrained table (OOV and delexicalized mode
// both map to the zero vector); the POS part is a trainable embedding.
template <class Real>
class InputEmbedder {
 public:
  InputEmbedder(const std::vector<std::string>& words, const std::vector<float>& word_matrix,
                Vocabulary pos_vocab, int word_dim, int pos_dim, bool delexicalized,
                ParameterStore<Real>& store)
      : pos_vocab_(std::move(pos_vocab)),
        word_dim_(word_dim),
        pos_dim_(pos_dim),
        delexicalized_(delexicalized) {
    if (!delexicalized_ && word_matrix.size() != words.size() * static_cast<std::size_t>(word_dim))
      throw std::invalid_argument("embedder: word matrix does not match word list");
    word_table_ = Tensor<Real>(words.size(), static_cast<std::size_t>(word_dim));
    for (std::size_t k = 0; k < word_matrix.size(); ++k)
      word_table_.v[k] = static_cast<Real>(word_matrix[k]);
    for (std::size_t i = 0; i < words.size(); ++i) word_index_.emplace(words[i], static_cast<int>(i));
    pos_table_ = &store.add("embed.pos", pos_vocab_.size(), static_cast<std::size_t>(pos_dim),
                            Init::Normal001);
  }

  const Vocabulary& pos_vocab() const { return pos_vocab_; }
  bool delexicalized() const { return delexicalized_; }
  const Tensor<Real>& word_table() const { return word_table_; }
  int width() const { return word_dim_ + pos_dim_; }

  Var<Real> embed(Graph<Real>& g, const Sentence& s) const {
    const std::size_t n = s.size();
    Tensor<Real> words(n, static_cast<std::size_t>(word_dim_));
    std::vector<int> pos_ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Token& t = s.tokens[i];
      pos_ids[i] = pos_vocab_.require(t.upos);
      if (delexicalized_) continue;
      auto it = word_index_.find(t.form);
      if (it == word_index_.end()) continue;  // OOV: zero word part
      const Real* src = word_table_.data() + static_cast<std::size_t>(it->second) * static_cast<std::size_t>(word_dim_);
      Real* dst = words.data() + i * static_cast<std::size_t>(word_dim_);
      for (int j = 0; j < word_dim_; ++j) dst[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(j)];
    }
    const Var<Real> word_part = g.constant(std::move(words));
    const Var<Real> pos_part = embedding_lookup(g.param(*pos_table_), pos_ids);
    return concat_cols(word_part, pos_part);
  }

 private:
  Tensor<Real> word_table_;  // frozen; never registered as a parameter
  std::unordered_map<std::string, int> word_index_;
  Vocabulary pos_vocab_;
  DiffTensor<Real>* pos_table_;
  int word_dim_;
  int pos_dim_;
  bool delexicalized_;
};

// Contextual encoder over embedded inputs: a stacked BiLSTM or a multi-head
// self-attention stack whose position handling depends on the variant.
template <class Real>
class Encoder {
 public:
  Encoder(const EncoderConfig& cfg, ParameterStore<Real>& store) : cfg_(cfg) {
    cfg_.validate();
    if (cfg_.is_rnn()) {
      int in_dim = cfg_.d_model;
      for (int l = 0; l < cfg_.layers; ++l) {
        for (const char* dir : {"fw", "bw"}) {
          const std::string prefix =
              "enc.rnn.l" + std::to_string(l) + "." + dir + ".";
          LstmParams p;
          p.wx = &store.add(prefix + "Wx", static_cast<std::size_t>(in_dim),
                            static_cast<std::size_t>(4 * cfg_.rnn_hidden), Init::XavierUniform);
          p.wh = &store.add(prefix + "Wh", static_cast<std::size_t>(cfg_.rnn_hidden),
                            static_cast<std::size_t>(4 * cfg_.rnn_hidden), Init::XavierUniform);
          p.b = &store.add(prefix + "b", 1, static_cast<std::size_t>(4 * cfg_.rnn_hidden),
                           Init::Zeros);
          lstm_.push_back(p);
        }
        in_dim = 2 * cfg_.rnn_hidden;
      }
    } else {
      const int dz = cfg_.head_dim();
      for (int l = 0; l < cfg_.layers; ++l) {
        AttLayer layer;
        const std::string lp = "enc.att.l" + std::to_string(l) + ".";
        for (int h = 0; h < cfg_.heads; ++h) {
          const std::string hp = lp + "h" + std::to_string(h) + ".";
          AttHead head;
          head.wq = &store.add(hp + "Wq", static_cast<std::size_t>(cfg_.d_model),
                               static_cast<std::size_t>(dz), Init::XavierUniform);
          head.wk = &store.add(hp + "Wk", static_cast<std::size_t>(cfg_.d_model),
                               static_cast<std::size_t>(dz), Init::XavierUniform);
          head.wv = &store.add(hp + "Wv", static_cast<std::size_t>(cfg_.d_model),
                               static_cast<std::size_t>(dz), Init::XavierUniform);
          layer.heads.push_back(head);
        }
        layer.wo = &store.add(lp + "Wo", static_cast<std::size_t>(cfg_.d_model),
                              static_cast<std::size_t>(cfg_.d_model), Init::XavierUniform);
        layer.ff_w1 = &store.add(lp + "ff.W1", static_cast<std::size_t>(cfg_.d_model),
                                 static_cast<std::size_t>(cfg_.d_ff), Init::XavierUniform);
        layer.ff_b1 = &store.add(lp + "ff.b1", 1, static_cast<std::size_t>(cfg_.d_ff), Init::Zeros);
        layer.ff_w2 = &store.add(lp + "ff.W2", static_cast<std::size_t>(cfg_.d_ff),
                                 static_cast<std::size_t>(cfg_.d_model), Init::XavierUniform);
        layer.ff_b2 = &store.add(lp + "ff.b2", 1, static_cast<std::size_t>(cfg_.d_model), Init::Zeros);
        layer.ln1_g = &store.add(lp + "ln1.g", 1, static_cast<std::size_t>(cfg_.d_model), Init::Ones);
        layer.ln1_b = &store.add(lp + "ln1.b", 1, static_cast<std::size_t>(cfg_.d_model), Init::Zeros);
        layer.ln2_g = &store.add(lp + "ln2.g", 1, static_cast<std::size_t>(cfg_.d_model), Init::Ones);
        layer.ln2_b = &store.add(lp + "ln2.b", 1, static_cast<std::size_t>(cfg_.d_model), Init::Zeros);
        if (uses_relative()) {
          const std::size_t rows = cfg_.variant == EncoderVariant::SelfAttRelativeDir
                                       ? static_cast<std::size_t>(2 * cfg_.clip_k + 1)
                                       : static_cast<std::size_t>(cfg_.clip_k + 1);
          layer.rel_k = &store.add(lp + "rel.K", rows, static_cast<std::size_t>(dz),
                                   Init::XavierUniform);
          layer.rel_v = &store.add(lp + "rel.V", rows, static_cast<std::size_t>(dz),
                                   Init::XavierUniform);
        }
        att_.push_back(std::move(layer));
      }
    }
  }

  const EncoderConfig& config() const { return cfg_; }

  Var<Real> encode(Graph<Real>& g, Var<Real> x, bool training, Rng& rng) const {
    if (x.rows() == 0) throw std::invalid_argument("encoder: empty input sequence");
    return cfg_.is_rnn() ? encode_rnn(g, x, training, rng) : encode_selfatt(g, x, training, rng);
  }

 private:
  bool uses_relative() const {
    return cfg_.variant == EncoderVariant::SelfAttRelative ||
           cfg_.variant == EncoderVariant::SelfAttRelativeDir;
  }

  struct LstmParams {
    DiffTensor<Real>* wx;
    DiffTensor<Real>* wh;
    DiffTensor<Real>* b;
  };
  struct AttHead {
    DiffTensor<Real>* wq;
    DiffTensor<Real>* wk;
    DiffTensor<Real>* wv;
  };
  struct AttLayer {
    std::vector<AttHead> heads;
    DiffTensor<Real>* wo;
    DiffTensor<Real>* ff_w1;
    DiffTensor<Real>* ff_b1;
    DiffTensor<Real>* ff_w2;
    DiffTensor<Real>* ff_b2;
    DiffTensor<Real>* ln1_g;
    DiffTensor<Real>* ln1_b;
    DiffTensor<Real>* ln2_g;
    DiffTensor<Real>* ln2_b;
    DiffTensor<Real>* rel_k = nullptr;
    DiffTensor<Real>* rel_v = nullptr;
  };

  // One LSTM direction over the rows of x; gate layout [i, f, g, o].
  std::vector<Var<Real>> lstm_direction(Graph<Real>& g, Var<Real> x, const LstmParams& p,
                                        bool backward) const {
    const std::size_t n = x.rows();
    const std::size_t hidden = static_cast<std::size_t>(cfg_.rnn_hidden);
    const Var<Real> wx = g.param(*p.wx);
    const Var<Real> wh = g.param(*p.wh);
    const Var<Real> b = g.param(*p.b);
    Var<Real> h = g.constant(Tensor<Real>::zeros(1, hidden));
    Var<Real> c = g.constant(Tensor<Real>::zeros(1, hidden));
    std::vector<Var<Real>> outputs(n);
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t t = backward ? n - 1 - step : step;
      const Var<Real> xt = row(x, t);
      Var<Real> gates = add(add(matmul(xt, wx), matmul(h, wh)), b);
      const auto parts = split_cols(gates, 4);
      const Var<Real> i_gate = sigmoid(parts[0]);
      const Var<Real> f_gate = sigmoid(parts[1]);
      const Var<Real> g_gate = tanh(parts[2]);
      const Var<Real> o_gate = sigmoid(parts[3]);
      c = add(mul(f_gate, c), mul(i_gate, g_gate));
      h = mul(o_gate, tanh(c));
      outputs[t] = h;
    }
    return outputs;
  }

  Var<Real> encode_rnn(Graph<Real>& g, Var<Real> x, bool training, Rng& rng) const {
    const Real keep = static_cast<Real>(1.0 - cfg_.dropout);
    Var<Real> input = x;
    for (int l = 0; l < cfg_.layers; ++l) {
      if (l > 0) input = dropout(input, keep, training, rng);
      const auto fw = lstm_direction(g, input, lstm_[static_cast<std::size_t>(2 * l)], false);
      const auto bw = lstm_direction(g, input, lstm_[static_cast<std::size_t>(2 * l + 1)], true);
      input = concat_cols(concat_rows(fw), concat_rows(bw));
    }
    return input;
  }

  Var<Real> attention_head(Graph<Real>& g, Var<Real> x, const AttLayer& layer, const AttHead& head,
                           const std::shared_ptr<const RelIndex>& rel_index) const {
    const Real inv_sqrt_dz = static_cast<Real>(1.0 / std::sqrt(static_cast<double>(cfg_.head_dim())));
    const Var<Real> q = matmul(x, g.param(*head.wq));
    const Var<Real> k = matmul(x, g.param(*head.wk));
    const Var<Real> v = matmul(x, g.param(*head.wv));
    if (rel_index != nullptr) {
      const Var<Real> scores =
          relative_scores(q, k, g.param(*layer.rel_k), rel_index, inv_sqrt_dz);
      const Var<Real> probs = row_softmax(scores);
      return relative_combine(probs, v, g.param(*layer.rel_v), rel_index);
    }
    const Var<Real> scores = scale(matmul(q, transpose(k)), inv_sqrt_dz);
    return matmul(row_softmax(scores), v);
  }

  Var<Real> encode_selfatt(Graph<Real>& g, Var<Real> x, bool training, Rng& rng) const {
    const Real keep = static_cast<Real>(1.0 - cfg_.dropout);
    const int n = static_cast<int>(x.rows());
    std::shared_ptr<const RelIndex> rel_index;
    if (uses_relative())
      rel_index = build_rel_index(n, cfg_.clip_k,
                                  cfg_.variant == EncoderVariant::SelfAttRelativeDir);
    if (cfg_.variant == EncoderVariant::SelfAttAbsolute)
      x = add(x, g.constant(sinusoidal_positions<Real>(n, cfg_.d_model)));

    for (const AttLayer& layer : att_) {
      std::vector<Var<Real>> head_outputs;
      head_outputs.reserve(layer.heads.size());
      for (const AttHead& head : layer.heads)
        head_outputs.push_back(attention_head(g, x, layer, head, rel_index));
      Var<Real> att = head_outputs.front();
      for (std::size_t h = 1; h < head_outputs.size(); ++h)
        att = concat_cols(att, head_outputs[h]);
      att = matmul(att, g.param(*layer.wo));
      att = dropout(att, keep, training, rng);
      x = layer_norm(add(x, att), g.param(*layer.ln1_g), g.param(*layer.ln1_b));

      Var<Real> ff = matmul(tanh(add(matmul(x, g.param(*layer.ff_w1)), g.param(*layer.ff_b1))),
                            g.param(*layer.ff_w2));
      ff = add(ff, g.param(*layer.ff_b2));
      ff = dropout(ff, keep, training, rng);
      x = layer_norm(add(x, ff), g.param(*layer.ln2_g), g.param(*layer.ln2_b));
    }
    return x;
  }

  EncoderConfig cfg_;
  std::vector<LstmParams> lstm_;  // layer-major, fw then bw
  std::vector<AttLayer> att_;
};

}  // namespace xlp
