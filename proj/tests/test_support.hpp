#pragma once

#include <string>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/model.hpp"
#include "xlp/rng.hpp"
#include "xlp/vocab.hpp"

namespace xlp::test {

// Builds a sentence from parallel arrays; forms default to w<id>.
inline Sentence make_sentence(const std::vector<std::string>& upos, const std::vector<int>& heads,
                              const std::vector<std::string>& deprels,
                              const std::vector<std::string>& forms = {}) {
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i + 1);
    t.form = forms.empty() ? "w" + std::to_string(i + 1) : forms[i];
    t.upos = upos[i];
    t.head = heads[i];
    t.deprel = deprels[i];
    s.tokens.push_back(std::move(t));
  }
  return s;
}

// Random valid sentence: heads drawn so that every token attaches to a
// previously numbered node (guarantees acyclicity), exactly one root child.
inline Sentence random_sentence(Rng& rng, int n) {
  std::vector<int> heads(static_cast<std::size_t>(n));
  heads[0] = 0;
  for (int m = 2; m <= n; ++m)
    heads[static_cast<std::size_t>(m - 1)] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(m - 1)));
  const std::vector<std::string> tags = {"NOUN", "VERB", "ADJ", "ADP", "PUNCT", "DET"};
  const std::vector<std::string> rels = {"root", "nsubj", "obj", "amod", "case", "punct"};
  Sentence s;
  for (int i = 1; i <= n; ++i) {
    Token t;
    t.id = i;
    t.form = "w" + std::to_string(rng.below(40));
    t.upos = tags[rng.below(tags.size())];
    t.head = heads[static_cast<std::size_t>(i - 1)];
    t.deprel = t.head == 0 ? "root" : rels[1 + rng.below(rels.size() - 1)];
    s.tokens.push_back(std::move(t));
  }
  return s;
}

inline Treebank random_treebank(Rng& rng, int sentences, int max_len = 9) {
  Treebank tb;
  tb.language = "xx";
  for (int i = 0; i < sentences; ++i)
    tb.sentences.push_back(random_sentence(rng, 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len)))));
  refresh_counts(tb);
  return tb;
}

// Model dimensions small enough for finite differences and quick training.
inline ModelConfig tiny_config(EncoderVariant enc, DecoderKind dec) {
  ModelConfig cfg = ModelConfig::make(enc, dec);
  cfg.encoder.word_dim = 8;
  cfg.encoder.pos_dim = 4;
  cfg.encoder.d_model = 12;
  cfg.encoder.heads = 2;
  cfg.encoder.layers = 2;
  cfg.encoder.d_ff = 16;
  cfg.encoder.clip_k = 3;
  cfg.encoder.rnn_hidden = 6;
  cfg.encoder.dropout = enc == EncoderVariant::Rnn ? 0.33 : 0.2;
  cfg.arc_mlp = 10;
  cfg.label_mlp = 6;
  cfg.dec_hidden = 8;
  cfg.ptr_mlp = 10;
  return cfg;
}

// Deterministic frozen word vectors for a small vocabulary.
inline void tiny_vectors(int dim, std::vector<std::string>& words, std::vector<float>& matrix,
                         std::uint64_t seed = 99) {
  words = {"w1", "w2", "w3", "w4", "w5", "w6", "w7", "the", "cat", "sat"};
  Rng rng(seed);
  matrix.resize(words.size() * static_cast<std::size_t>(dim));
  for (auto& x : matrix) x = static_cast<float>(rng.uniform(-0.5, 0.5));
}

template <class Real>
Parser<Real> tiny_parser(EncoderVariant enc, DecoderKind dec, std::uint64_t seed = 42) {
  const ModelConfig cfg = tiny_config(enc, dec);
  std::vector<std::string> words;
  std::vector<float> matrix;
  tiny_vectors(cfg.encoder.word_dim, words, matrix);
  Vocabulary pos;
  for (const char* t : {"NOUN", "VERB", "ADJ", "ADP", "PUNCT", "DET", "INTJ"}) pos.add(t);
  Vocabulary labels;
  for (const char* l : {"root", "nsubj", "obj", "amod", "case", "punct", "det"}) labels.add(l);
  return Parser<Real>(cfg, words, matrix, pos, labels, seed);
}

// Fixed 8-sentence synthetic treebank used by the overfitting checks. No two
// sentences are order-reversals of each other with conflicting analyses: the
// undirected-relative encoder cannot separate a sequence from its reversal.
inline Treebank synthetic_treebank() {
  Treebank tb;
  tb.language = "xx";
  tb.sentences.push_back(make_sentence({"NOUN", "VERB"}, {2, 0}, {"nsubj", "root"},
                                       {"w1", "w2"}));
  tb.sentences.push_back(make_sentence({"VERB", "NOUN"}, {0, 1}, {"root", "obj"},
                                       {"sat", "cat"}));
  tb.sentences.push_back(make_sentence({"ADJ", "NOUN", "VERB"}, {2, 3, 0},
                                       {"amod", "nsubj", "root"}, {"w3", "w1", "w2"}));
  tb.sentences.push_back(make_sentence({"VERB", "ADP", "NOUN"}, {0, 3, 1},
                                       {"root", "case", "obj"}, {"w2", "w4", "w5"}));
  tb.sentences.push_back(make_sentence({"NOUN", "VERB", "NOUN", "PUNCT"}, {2, 0, 2, 2},
                                       {"nsubj", "root", "obj", "punct"},
                                       {"w1", "w2", "w5", "w6"}));
  tb.sentences.push_back(make_sentence({"DET", "NOUN", "VERB", "ADJ"}, {2, 3, 0, 3},
                                       {"det", "nsubj", "root", "amod"},
                                       {"w7", "w1", "w2", "w3"}));
  tb.sentences.push_back(make_sentence({"VERB", "NOUN", "ADP", "NOUN"}, {0, 1, 4, 2},
                                       {"root", "obj", "case", "amod"},
                                       {"w2", "w5", "w4", "w1"}));
  tb.sentences.push_back(make_sentence({"INTJ"}, {0}, {"root"}, {"w6"}));
  refresh_counts(tb);
  return tb;
}

}  // namespace xlp::test
