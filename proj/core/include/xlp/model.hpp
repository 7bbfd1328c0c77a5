#pragma once

#include <memory>
#include <string>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/decoder.hpp"
#include "xlp/encoder.hpp"
#include "xlp/evaluation.hpp"
#include "xlp/graph.hpp"
#include "xlp/params.hpp"
#include "xlp/vocab.hpp"

namespace xlp {

enum class DecoderKind { Graph, StackPtr };

inline const char* decoder_kind_name(DecoderKind k) {
  return k == DecoderKind::Graph ? "graph" : "stack";
}

struct ModelConfig {
  EncoderConfig encoder;
  DecoderKind decoder = DecoderKind::Graph;
  int arc_mlp = 512;
  int label_mlp = 128;
  int dec_hidden = 300;  // stack-pointer trajectory LSTM
  int ptr_mlp = 512;
  bool delexicalized = false;

  static ModelConfig make(EncoderVariant enc, DecoderKind dec) {
    ModelConfig c;
    c.encoder = enc == EncoderVariant::Rnn ? EncoderConfig::rnn() : EncoderConfig::self_attention(enc);
    c.decoder = dec;
    return c;
  }

  std::string arch_name() const {
    const std::string enc = encoder.is_rnn() ? "rnn" : "selfatt";
    return enc + "-" + decoder_kind_name(decoder);
  }
};

// Full parser: embedder + contextual encoder + structured decoder. One
// instance owns one ParameterStore; everything trainable lives there.
template <class Real>
class Parser {
 public:
  Parser(const ModelConfig& cfg, const std::vector<std::string>& words,
         const std::vector<float>& word_matrix, Vocabulary pos_vocab, Vocabulary label_vocab,
         std::uint64_t seed)
      : cfg_(cfg), labels_(std::move(label_vocab)), store_(seed) {
    cfg_.encoder.validate();
    embedder_ = std::make_unique<InputEmbedder<Real>>(words, word_matrix, std::move(pos_vocab),
                                                      cfg_.encoder.word_dim, cfg_.encoder.pos_dim,
                                                      cfg_.delexicalized, store_);
    encoder_ = std::make_unique<Encoder<Real>>(cfg_.encoder, store_);
    const int width = cfg_.encoder.output_width();
    root_ = &store_.add("dec.root", 1, static_cast<std::size_t>(width), Init::Normal001);
    if (cfg_.decoder == DecoderKind::Graph)
      arc_ = std::make_unique<ArcBiaffine<Real>>(width, cfg_.arc_mlp, store_);
    else
      stackptr_ = std::make_unique<StackPtrCore<Real>>(width, cfg_.dec_hidden, cfg_.ptr_mlp, store_);
    label_scorer_ = std::make_unique<LabelScorer<Real>>(width, cfg_.label_mlp,
                                                        static_cast<int>(labels_.size()), store_);
  }

  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& labels() const { return labels_; }
  const InputEmbedder<Real>& embedder() const { return *embedder_; }
  ParameterStore<Real>& params() { return store_; }
  const ParameterStore<Real>& params() const { return store_; }

  // Root-prepended contextual encoding: (n+1) x width.
  Var<Real> encode_with_root(Graph<Real>& g, const Sentence& s, bool training, Rng& rng) const {
    const Var<Real> embedded = embedder_->embed(g, s);
    const Var<Real> enc = encoder_->encode(g, embedded, training, rng);
    return concat_rows(std::vector<Var<Real>>{g.param(*root_), enc});
  }

  Var<Real> arc_scores(Graph<Real>& g, Var<Real> enc_root) const {
    if (!arc_) throw std::logic_error("arc_scores: model has a stack-pointer decoder");
    return arc_->score_arcs(g, enc_root);
  }

  Var<Real> label_scores_at(Graph<Real>& g, Var<Real> enc_root, const std::vector<int>& heads) const {
    return label_scorer_->score(g, enc_root, heads);
  }

  // Summed head + label cross-entropy for one sentence (graph decoder).
  Var<Real> graph_loss_sentence(Graph<Real>& g, const Sentence& s, bool training, Rng& rng) const {
    const Var<Real> enc_root = encode_with_root(g, s, training, rng);
    const Var<Real> scores = arc_scores(g, enc_root);
    const std::vector<int> gold = gold_heads(s);
    // Head distribution for modifier m is column m of the score matrix.
    const Var<Real> per_modifier = slice_rows(transpose(scores), 1, scores.rows());
    const Var<Real> head_loss = cross_entropy(per_modifier, gold, Reduction::Sum);
    const Var<Real> label_logits = label_scorer_->score(g, enc_root, gold);
    const Var<Real> label_loss = cross_entropy(label_logits, gold_label_ids(s), Reduction::Sum);
    return add(head_loss, label_loss);
  }

  // Summed pointer + label cross-entropy for one sentence (stack-pointer).
  Var<Real> stackptr_loss_sentence(Graph<Real>& g, const Sentence& s, bool training, Rng& rng) const {
    if (!stackptr_) throw std::logic_error("stackptr_loss: model has a graph decoder");
    const Var<Real> enc_root = encode_with_root(g, s, training, rng);
    const std::vector<int> gold = gold_heads(s);
    const Var<Real> pointer = stackptr_->pointer_loss(g, enc_root, gold);
    const Var<Real> label_logits = label_scorer_->score(g, enc_root, gold);
    const Var<Real> label_loss = cross_entropy(label_logits, gold_label_ids(s), Reduction::Sum);
    return add(pointer, label_loss);
  }

  // Batch loss averaged over tokens.
  Var<Real> batch_loss(Graph<Real>& g, const std::vector<const Sentence*>& batch, bool training,
                       Rng& rng) const {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    std::size_t tokens = 0;
    Var<Real> total;
    for (const Sentence* s : batch) {
      tokens += s->size();
      const Var<Real> loss = cfg_.decoder == DecoderKind::Graph
                                 ? graph_loss_sentence(g, *s, training, rng)
                                 : stackptr_loss_sentence(g, *s, training, rng);
      total = total.valid() ? add(total, loss) : loss;
    }
    return scale(total, Real(1) / static_cast<Real>(tokens));
  }

  ArcMatrix arc_matrix(const Sentence& s) const {
    Graph<Real> g(false);
    Rng rng(0);
    const Var<Real> enc_root = encode_with_root(g, s, false, rng);
    const Tensor<Real>& sv = arc_->score_arcs(g, enc_root).value();
    ArcMatrix m(sv.rows(), std::vector<double>(sv.cols()));
    for (std::size_t i = 0; i < sv.rows(); ++i)
      for (std::size_t j = 0; j < sv.cols(); ++j) m[i][j] = static_cast<double>(sv.at(i, j));
    return m;
  }

  ParseTree predict(const Sentence& s) const {
    Graph<Real> g(false);
    Rng rng(0);
    const Var<Real> enc_root = encode_with_root(g, s, false, rng);
    std::vector<int> heads;
    if (cfg_.decoder == DecoderKind::Graph) {
      const Tensor<Real>& sv = arc_->score_arcs(g, enc_root).value();
      ArcMatrix m(sv.rows(), std::vector<double>(sv.cols()));
      for (std::size_t i = 0; i < sv.rows(); ++i)
        for (std::size_t j = 0; j < sv.cols(); ++j) m[i][j] = static_cast<double>(sv.at(i, j));
      heads = decode_mst(m);
    } else {
      heads = stackptr_->decode(g, enc_root);
    }
    ParseTree tree;
    tree.heads = heads;
    tree.labels.reserve(heads.size());
    const Tensor<Real>& lv = label_scorer_->score(g, enc_root, heads).value();
    for (std::size_t m = 0; m < heads.size(); ++m) {
      std::size_t best = 0;
      for (std::size_t l = 1; l < lv.cols(); ++l)
        if (lv.at(m, l) > lv.at(m, best)) best = l;
      tree.labels.push_back(labels_.at(best));
    }
    return tree;
  }

  std::vector<int> gold_label_ids(const Sentence& s) const {
    std::vector<int> ids;
    ids.reserve(s.size());
    for (const Token& t : s.tokens) ids.push_back(labels_.require(t.deprel));
    return ids;
  }

  static std::vector<int> gold_heads(const Sentence& s) {
    std::vector<int> heads;
    heads.reserve(s.size());
    for (const Token& t : s.tokens) heads.push_back(t.head);
    return heads;
  }

 private:
  ModelConfig cfg_;
  Vocabulary labels_;
  ParameterStore<Real> store_;
  std::unique_ptr<InputEmbedder<Real>> embedder_;
  std::unique_ptr<Encoder<Real>> encoder_;
  DiffTensor<Real>* root_;
  std::unique_ptr<ArcBiaffine<Real>> arc_;
  std::unique_ptr<StackPtrCore<Real>> stackptr_;
  std::unique_ptr<LabelScorer<Real>> label_scorer_;
};

}  // namespace xlp
