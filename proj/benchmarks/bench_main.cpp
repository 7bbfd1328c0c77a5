#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/decoder.hpp"
#include "xlp/encoder.hpp"
#include "xlp/model.hpp"
#include "xlp/mst.hpp"
#include "xlp/rng.hpp"
#include "xlp/typology.hpp"

using namespace xlp;

namespace {

Sentence chain_sentence(int n) {
  Sentence s;
  for (int i = 1; i <= n; ++i) {
    Token t;
    t.id = i;
    t.form = "w" + std::to_string(i % 23);
    t.upos = i % 5 == 0 ? "VERB" : "NOUN";
    t.head = i == 1 ? 0 : i - 1;
    t.deprel = i == 1 ? "root" : "dep";
    s.tokens.push_back(std::move(t));
  }
  return s;
}

ModelConfig bench_config(EncoderVariant enc, DecoderKind dec) {
  ModelConfig cfg = ModelConfig::make(enc, dec);
  cfg.encoder.word_dim = 40;
  cfg.encoder.pos_dim = 10;
  cfg.encoder.d_model = 50;
  cfg.encoder.heads = 5;
  cfg.encoder.layers = 2;
  cfg.encoder.d_ff = 64;
  cfg.encoder.rnn_hidden = 32;
  cfg.arc_mlp = 64;
  cfg.label_mlp = 32;
  cfg.dec_hidden = 32;
  cfg.ptr_mlp = 64;
  cfg.delexicalized = true;
  return cfg;
}

Parser<float> bench_parser(EncoderVariant enc, DecoderKind dec) {
  Vocabulary labels;
  labels.add("root");
  labels.add("dep");
  return Parser<float>(bench_config(enc, dec), {}, {}, Vocabulary::universal_pos(), labels, 3);
}

void BM_Matmul(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor<float> a(n, n), b(n, n);
  for (auto& x : a.v) x = static_cast<float>(rng.uniform(-1, 1));
  for (auto& x : b.v) x = static_cast<float>(rng.uniform(-1, 1));
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(matmul(g.constant(a), g.constant(b)).value().v.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_SelfAttForward(benchmark::State& state) {
  auto parser = bench_parser(EncoderVariant::SelfAttRelative, DecoderKind::Graph);
  const Sentence s = chain_sentence(static_cast<int>(state.range(0)));
  Rng rng(2);
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(parser.encode_with_root(g, s, false, rng).value().size());
  }
}
BENCHMARK(BM_SelfAttForward)->Arg(10)->Arg(40)->Arg(140);

void BM_RnnForward(benchmark::State& state) {
  auto parser = bench_parser(EncoderVariant::Rnn, DecoderKind::Graph);
  const Sentence s = chain_sentence(static_cast<int>(state.range(0)));
  Rng rng(2);
  for (auto _ : state) {
    Graph<float> g(false);
    benchmark::DoNotOptimize(parser.encode_with_root(g, s, false, rng).value().size());
  }
}
BENCHMARK(BM_RnnForward)->Arg(10)->Arg(40)->Arg(140);

void BM_TrainStep(benchmark::State& state) {
  auto parser = bench_parser(EncoderVariant::SelfAttRelative, DecoderKind::Graph);
  const Sentence s = chain_sentence(20);
  Rng rng(2);
  for (auto _ : state) {
    Graph<float> g;
    const Var<float> loss = parser.batch_loss(g, {&s}, true, rng);
    parser.params().zero_grads();
    g.backward(loss);
    benchmark::DoNotOptimize(parser.params());
  }
}
BENCHMARK(BM_TrainStep);

void BM_DecodeMst(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(7);
  ArcMatrix scores(static_cast<std::size_t>(n + 1),
                   std::vector<double>(static_cast<std::size_t>(n + 1)));
  for (auto& row : scores)
    for (auto& x : row) x = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(decode_mst(scores));
}
BENCHMARK(BM_DecodeMst)->Arg(10)->Arg(40)->Arg(140);

void BM_StackPtrDecode(benchmark::State& state) {
  auto parser = bench_parser(EncoderVariant::SelfAttRelative, DecoderKind::StackPtr);
  const Sentence s = chain_sentence(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(parser.predict(s));
}
BENCHMARK(BM_StackPtrDecode)->Arg(10)->Arg(40);

void BM_ConlluRead(benchmark::State& state) {
  Treebank tb;
  tb.language = "xx";
  for (int i = 0; i < 200; ++i) tb.sentences.push_back(chain_sentence(20));
  refresh_counts(tb);
  const std::string text = write_treebank(tb);
  for (auto _ : state) benchmark::DoNotOptimize(read_treebank(text, "xx"));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ConlluRead);

void BM_SingleLinkage(benchmark::State& state) {
  Rng rng(9);
  std::vector<WordOrderVector> vectors;
  for (int i = 0; i < 31; ++i) {
    WordOrderVector v{"l" + std::to_string(i), {}, {}};
    for (int k = 0; k < 52; ++k) v.values.push_back(rng.uniform());
    vectors.push_back(std::move(v));
  }
  const DistanceMatrix dm = distance_matrix(vectors);
  for (auto _ : state) benchmark::DoNotOptimize(cluster_single_linkage(dm));
}
BENCHMARK(BM_SingleLinkage);

}  // namespace

BENCHMARK_MAIN();
