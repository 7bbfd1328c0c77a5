#include "doctest.h"

#include "xlp/io.hpp"
#include "xlp/rng.hpp"
#include "xlp/typology.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace xlp;

namespace {

Treebank one_sentence_tb(const Sentence& s) {
  Treebank tb;
  tb.language = "xx";
  tb.sentences.push_back(s);
  refresh_counts(tb);
  return tb;
}

}  // namespace

TEST_CASE("typology: collect_type_stats counts direction per augmented triple") {
  // ADJ modifier before its NOUN head; the NOUN is the root.
  const Sentence left =
      test::make_sentence({"ADJ", "NOUN"}, {2, 0}, {"amod", "root"});
  TypeStats stats = collect_type_stats(one_sentence_tb(left));
  const AugmentedType amod{"ADJ", "NOUN", "amod"};
  REQUIRE(stats.counts.count(amod) == 1);
  CHECK(stats.counts[amod].total == 1);
  CHECK(stats.counts[amod].left == 1);
  CHECK(stats.total_edges == 1);  // root edge excluded

  const Sentence right =
      test::make_sentence({"NOUN", "ADJ"}, {0, 1}, {"root", "amod"});
  stats = collect_type_stats(one_sentence_tb(right));
  CHECK(stats.counts[amod].total == 1);
  CHECK(stats.counts[amod].left == 0);
}

TEST_CASE("typology: left frequency 0.75 on a hand corpus") {
  // Four (ADP,NOUN,case) edges, three with the adposition before the noun.
  Treebank tb;
  tb.language = "xx";
  tb.sentences.push_back(test::make_sentence({"ADP", "NOUN"}, {2, 0}, {"case", "root"}));
  tb.sentences.push_back(test::make_sentence({"ADP", "NOUN"}, {2, 0}, {"case", "root"}));
  tb.sentences.push_back(test::make_sentence({"ADP", "NOUN"}, {2, 0}, {"case", "root"}));
  tb.sentences.push_back(test::make_sentence({"NOUN", "ADP"}, {0, 1}, {"root", "case"}));
  tb.sentences.push_back(test::make_sentence({"NOUN"}, {0}, {"root"}));
  refresh_counts(tb);
  const TypeStats stats = collect_type_stats(tb);
  const AugmentedType type{"ADP", "NOUN", "case"};
  CHECK(stats.counts.at(type).total == 4);
  CHECK(stats.counts.at(type).left == 3);

  TypeSelection sel;
  sel.types = {type};
  const WordOrderVector v = order_vector(tb, sel);
  CHECK(v.values[0] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("typology: select_types keeps every type for one language with open thresholds") {
  Treebank tb;
  tb.language = "aa";
  tb.sentences.push_back(
      test::make_sentence({"DET", "ADJ", "NOUN"}, {3, 3, 0}, {"det", "amod", "root"}));
  tb.sentences.push_back(test::make_sentence({"DET", "NOUN"}, {2, 0}, {"det", "root"}));
  refresh_counts(tb);
  std::map<std::string, TypeStats> stats{{"aa", collect_type_stats(tb)}};
  const TypeSelection sel = select_types(stats, 0.0, 1);
  REQUIRE(sel.types.size() == 2);
  // (DET,NOUN,det) has frequency 2/3, (ADJ,NOUN,amod) 1/3.
  CHECK(sel.types[0] == AugmentedType{"DET", "NOUN", "det"});
  CHECK(sel.types[1] == AugmentedType{"ADJ", "NOUN", "amod"});
}

TEST_CASE("typology: select_types enforces the minimum language count") {
  const Sentence both = test::make_sentence({"DET", "ADJ", "NOUN"}, {3, 3, 0},
                                            {"det", "amod", "root"});
  const Sentence amod_only = test::make_sentence({"ADJ", "NOUN"}, {2, 0}, {"amod", "root"});
  std::map<std::string, TypeStats> stats;
  stats["aa"] = collect_type_stats(one_sentence_tb(both));
  stats["bb"] = collect_type_stats(one_sentence_tb(both));
  stats["cc"] = collect_type_stats(one_sentence_tb(amod_only));

  const TypeSelection sel = select_types(stats, 0.0, 3);
  // (DET,NOUN,det) appears in 2 of 3 languages and is pruned.
  CHECK(sel.types == std::vector<AugmentedType>{{"ADJ", "NOUN", "amod"}});

  CHECK_THROWS_AS(select_types({}, 0.0, 1), std::invalid_argument);
}

TEST_CASE("typology: order_vector imputes 0.5 for absent types") {
  const Treebank tb = one_sentence_tb(test::make_sentence({"ADJ", "NOUN"}, {2, 0}, {"amod", "root"}));
  TypeSelection sel;
  sel.types = {{"ADJ", "NOUN", "amod"}, {"ADP", "NOUN", "case"}};
  const WordOrderVector v = order_vector(tb, sel);
  CHECK(v.values == std::vector<double>{1.0, 0.5});
  CHECK(v.imputed == std::vector<bool>{false, true});
}

TEST_CASE("typology: order_vector left 2 of 3") {
  Treebank tb;
  tb.language = "xx";
  tb.sentences.push_back(test::make_sentence({"ADJ", "NOUN"}, {2, 0}, {"amod", "root"}));
  tb.sentences.push_back(test::make_sentence({"ADJ", "NOUN"}, {2, 0}, {"amod", "root"}));
  tb.sentences.push_back(test::make_sentence({"NOUN", "ADJ"}, {0, 1}, {"root", "amod"}));
  refresh_counts(tb);
  TypeSelection sel;
  sel.types = {{"ADJ", "NOUN", "amod"}};
  CHECK(order_vector(tb, sel).values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("typology: order_vector is invariant under duplicating sentences") {
  Rng rng(5);
  Treebank tb = test::random_treebank(rng, 6);
  std::map<std::string, TypeStats> stats{{"xx", collect_type_stats(tb)}};
  const TypeSelection sel = select_types(stats, 0.0, 1);
  if (sel.types.empty()) return;
  const WordOrderVector base = order_vector(tb, sel);
  Treebank doubled = tb;
  for (const Sentence& s : tb.sentences) doubled.sentences.push_back(s);
  refresh_counts(doubled);
  const WordOrderVector twice = order_vector(doubled, sel);
  for (std::size_t i = 0; i < base.values.size(); ++i)
    CHECK(twice.values[i] == doctest::Approx(base.values[i]).epsilon(1e-12));
}

TEST_CASE("typology: manhattan distance") {
  WordOrderVector a{"aa", {0.2, 0.8}, {false, false}};
  WordOrderVector b{"bb", {0.5, 0.4}, {false, false}};
  CHECK(manhattan_distance(a, a) == 0.0);
  CHECK(manhattan_distance(a, b) == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(manhattan_distance(a, b) == manhattan_distance(b, a));

  WordOrderVector c{"cc", {0.1}, {false}};
  CHECK_THROWS_AS(manhattan_distance(a, c), std::invalid_argument);

  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    WordOrderVector x{"x", {}, {}}, y{"y", {}, {}};
    for (int i = 0; i < 5; ++i) {
      x.values.push_back(rng.uniform());
      y.values.push_back(rng.uniform());
    }
    CHECK(manhattan_distance(x, y) == doctest::Approx(manhattan_distance(y, x)).epsilon(1e-15));
  }
}

TEST_CASE("typology: distance_matrix entries and metric properties") {
  WordOrderVector a{"aa", {0.0, 1.0}, {false, false}};
  WordOrderVector b{"bb", {1.0, 1.0}, {false, false}};
  WordOrderVector c{"cc", {1.0, 0.0}, {false, false}};
  const DistanceMatrix dm = distance_matrix({a, b, c});
  CHECK(dm.entries[0][1] == doctest::Approx(1.0));
  CHECK(dm.entries[0][2] == doctest::Approx(2.0));
  CHECK(dm.entries[1][2] == doctest::Approx(1.0));

  SUBCASE("identical vectors give a zero matrix") {
    WordOrderVector a2 = a;
    a2.language = "zz";
    const DistanceMatrix z = distance_matrix({a, a2});
    CHECK(z.entries[0][1] == 0.0);
    CHECK(z.entries[1][0] == 0.0);
  }
  SUBCASE("duplicate language codes are rejected") {
    CHECK_THROWS_AS(distance_matrix({a, a}), std::invalid_argument);
  }
  SUBCASE("permuting the language list permutes rows and columns consistently") {
    const DistanceMatrix permuted = distance_matrix({c, a, b});
    CHECK(permuted.entries[1][2] == dm.entries[0][1]);  // aa-bb
    CHECK(permuted.entries[0][1] == dm.entries[2][0]);  // cc-aa
    CHECK(permuted.entries[0][2] == dm.entries[2][1]);  // cc-bb
  }
  SUBCASE("triangle inequality on random vectors") {
    Rng rng(17);
    std::vector<WordOrderVector> vs;
    for (int i = 0; i < 5; ++i) {
      WordOrderVector v{"l" + std::to_string(i), {}, {}};
      for (int k = 0; k < 4; ++k) v.values.push_back(rng.uniform());
      vs.push_back(std::move(v));
    }
    const DistanceMatrix m = distance_matrix(vs);
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = 0; j < vs.size(); ++j)
        for (std::size_t k = 0; k < vs.size(); ++k)
          CHECK(m.entries[i][j] <= m.entries[i][k] + m.entries[k][j] + 1e-12);
  }
}

TEST_CASE("typology: single-linkage clustering") {
  SUBCASE("two languages merge at their distance") {
    DistanceMatrix dm;
    dm.languages = {"aa", "bb"};
    dm.entries = {{0.0, 0.7}, {0.7, 0.0}};
    const Dendrogram d = cluster_single_linkage(dm);
    REQUIRE(d.merges.size() == 1);
    CHECK(d.merges[0].cluster_a == 0);
    CHECK(d.merges[0].cluster_b == 1);
    CHECK(d.merges[0].height == doctest::Approx(0.7));
    CHECK(d.merges[0].id == 2);
  }
  SUBCASE("three points follow the hand trace") {
    DistanceMatrix dm;
    dm.languages = {"A", "B", "C"};
    dm.entries = {{0, 1, 2}, {1, 0, 3}, {2, 3, 0}};
    const Dendrogram d = cluster_single_linkage(dm);
    REQUIRE(d.merges.size() == 2);
    CHECK(d.merges[0].cluster_a == 0);
    CHECK(d.merges[0].cluster_b == 1);
    CHECK(d.merges[0].height == doctest::Approx(1.0));
    // single linkage: d({A,B}, C) = min(2, 3) = 2
    CHECK(d.merges[1].cluster_a == 2);
    CHECK(d.merges[1].cluster_b == 3);
    CHECK(d.merges[1].height == doctest::Approx(2.0));
  }
  SUBCASE("deterministic and non-decreasing") {
    Rng rng(23);
    std::vector<WordOrderVector> vs;
    for (int i = 0; i < 7; ++i) {
      WordOrderVector v{"l" + std::to_string(i), {}, {}};
      for (int k = 0; k < 3; ++k) v.values.push_back(rng.uniform());
      vs.push_back(std::move(v));
    }
    const DistanceMatrix dm = distance_matrix(vs);
    const Dendrogram d1 = cluster_single_linkage(dm);
    const Dendrogram d2 = cluster_single_linkage(dm);
    REQUIRE(d1.merges.size() == vs.size() - 1);
    for (std::size_t i = 0; i < d1.merges.size(); ++i) {
      CHECK(d1.merges[i].cluster_a == d2.merges[i].cluster_a);
      CHECK(d1.merges[i].cluster_b == d2.merges[i].cluster_b);
      CHECK(d1.merges[i].height == d2.merges[i].height);
      if (i > 0) CHECK(d1.merges[i].height >= d1.merges[i - 1].height);
    }
  }
  SUBCASE("fewer than two languages is an error") {
    DistanceMatrix dm;
    dm.languages = {"aa"};
    dm.entries = {{0.0}};
    CHECK_THROWS_AS(cluster_single_linkage(dm), std::invalid_argument);
  }
}

TEST_CASE("typology: newick serialization carries branch lengths") {
  DistanceMatrix dm;
  dm.languages = {"aa", "bb", "cc"};
  dm.entries = {{0, 1, 2}, {1, 0, 2}, {2, 2, 0}};
  const Dendrogram d = cluster_single_linkage(dm);
  CHECK(d.newick() == "(cc:2.000000,(aa:1.000000,bb:1.000000):1.000000);");
}

TEST_CASE("typology: dependency distance histogram hand trace") {
  // heads [2,0,2]: token1 -> d = -1, token3 -> d = +1.
  const Treebank tb = one_sentence_tb(
      test::make_sentence({"NOUN", "VERB", "NOUN"}, {2, 0, 2}, {"nsubj", "root", "obj"}));
  const DepDistHistogram h = dep_distance_histogram(tb);
  CHECK(h.total_edges == 2);
  const auto p = h.percent();
  CHECK(p[2] == doctest::Approx(50.0));  // d = -1
  CHECK(p[3] == doctest::Approx(50.0));  // d = +1
  CHECK(p[0] + p[1] + p[4] + p[5] == 0.0);
}

TEST_CASE("typology: histogram of a single-token sentence is empty") {
  const Treebank tb = one_sentence_tb(test::make_sentence({"INTJ"}, {0}, {"root"}));
  const DepDistHistogram h = dep_distance_histogram(tb);
  CHECK(h.empty());
  for (const double p : h.percent()) CHECK(p == 0.0);
}

TEST_CASE("typology: histogram percentages sum to 100") {
  Rng rng(31);
  for (int t = 0; t < 10; ++t) {
    const Treebank tb = test::random_treebank(rng, 8);
    const DepDistHistogram h = dep_distance_histogram(tb);
    if (h.empty()) continue;
    double total = 0.0;
    for (const double p : h.percent()) total += p;
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
  }
}

TEST_CASE("typology: root edges never reach stats or histogram") {
  const Treebank tb = one_sentence_tb(test::make_sentence({"INTJ"}, {0}, {"root"}));
  CHECK(collect_type_stats(tb).total_edges == 0);
  CHECK(dep_distance_histogram(tb).total_edges == 0);
}
