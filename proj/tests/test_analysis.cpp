#include "doctest.h"

#include "xlp/analysis.hpp"
#include "xlp/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace xlp;

namespace {

// Raw-moment closed form, independent of the implementation's centered form.
double pearson_closed_form(const std::vector<double>& xs, const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    syy += ys[i] * ys[i];
    sxy += xs[i] * ys[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

std::vector<double> ranks_by_sort(const std::vector<double>& xs) {
  std::vector<double> r(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double rank = 1.0;
    double ties = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (xs[j] < xs[i]) rank += 1.0;
      if (j != i && xs[j] == xs[i]) ties += 1.0;
    }
    r[i] = rank + ties / 2.0;
  }
  return r;
}

}  // namespace

TEST_CASE("analysis: performance distance") {
  EvalReport source;
  source.uas = 0.9;
  source.las = 0.88;
  EvalReport target;
  target.uas = 0.6;
  target.las = 0.5;
  CHECK(performance_distance(source, source) == 0.0);
  CHECK(performance_distance(target, source) == doctest::Approx(0.34).epsilon(1e-12));
  CHECK(performance_distance(source, target) == doctest::Approx(-0.34).epsilon(1e-12));
}

TEST_CASE("analysis: correlate on exact linear data") {
  const std::vector<double> xs = {1, 2, 3, 4, 5};
  std::vector<double> ys;
  for (const double x : xs) ys.push_back(2.0 * x + 1.0);
  const CorrelationReport r = correlate(xs, ys);
  CHECK(r.pearson == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.spearman == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.n == 5);
}

TEST_CASE("analysis: reversed distinct values give spearman -1") {
  const std::vector<double> xs = {0.3, 1.1, 2.0, 5.5, 9.9};
  std::vector<double> ys(xs.rbegin(), xs.rend());
  const CorrelationReport r = correlate(xs, ys);
  CHECK(r.spearman == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("analysis: correlations match the closed form on random samples") {
  Rng rng(50);
  std::vector<double> xs, ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(rng.uniform());
    ys.push_back(0.4 * xs.back() + rng.uniform(-0.2, 0.2));
  }
  const CorrelationReport r = correlate(xs, ys);
  CHECK(std::abs(r.pearson - pearson_closed_form(xs, ys)) < 1e-12);
  CHECK(std::abs(r.spearman - pearson_closed_form(ranks_by_sort(xs), ranks_by_sort(ys))) < 1e-12);
}

TEST_CASE("analysis: spearman is invariant under strictly monotone transforms") {
  Rng rng(51);
  std::vector<double> xs, ys;
  for (int i = 0; i < 20; ++i) {
    xs.push_back(rng.uniform(0.1, 5.0));
    ys.push_back(rng.uniform(0.1, 5.0));
  }
  const CorrelationReport base = correlate(xs, ys);
  std::vector<double> exp_xs;
  for (const double x : xs) exp_xs.push_back(std::exp(x));
  const CorrelationReport transformed = correlate(exp_xs, ys);
  CHECK(transformed.spearman == doctest::Approx(base.spearman).epsilon(1e-12));
}

TEST_CASE("analysis: correlate error cases") {
  CHECK_THROWS_AS(correlate({1, 2}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(correlate({1, 2, 3}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(correlate({1, 1, 1}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("analysis: pearson is symmetric in its arguments") {
  Rng rng(52);
  std::vector<double> xs, ys;
  for (int i = 0; i < 9; ++i) {
    xs.push_back(rng.uniform());
    ys.push_back(rng.uniform());
  }
  CHECK(correlate(xs, ys).pearson == doctest::Approx(correlate(ys, xs).pearson).epsilon(1e-14));
}

TEST_CASE("analysis: component contrast hand table") {
  std::map<std::string, std::map<std::string, double>> scores;
  scores["de"] = {{"selfatt-graph", 70.0}, {"selfatt-stack", 68.0}, {"rnn-graph", 66.0},
                  {"rnn-stack", 69.0}};
  const auto rows = component_contrast(scores);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].encoder_diff == doctest::Approx(1.0));
  CHECK(rows[0].decoder_diff == doctest::Approx(1.0));

  SUBCASE("equal cells give zero contrast") {
    scores["de"] = {{"selfatt-graph", 50.0}, {"selfatt-stack", 50.0}, {"rnn-graph", 50.0},
                    {"rnn-stack", 50.0}};
    const auto zero = component_contrast(scores);
    CHECK(zero[0].encoder_diff == 0.0);
    CHECK(zero[0].decoder_diff == 0.0);
  }
  SUBCASE("constant shifts cancel") {
    std::map<std::string, std::map<std::string, double>> shifted = scores;
    for (auto& [k, v] : shifted["de"]) v += 7.5;
    const auto base = component_contrast(scores);
    const auto moved = component_contrast(shifted);
    CHECK(moved[0].encoder_diff == doctest::Approx(base[0].encoder_diff).epsilon(1e-12));
    CHECK(moved[0].decoder_diff == doctest::Approx(base[0].decoder_diff).epsilon(1e-12));
  }
  SUBCASE("missing cell is an error") {
    scores["de"].erase("rnn-stack");
    CHECK_THROWS_AS(component_contrast(scores), std::invalid_argument);
  }
  SUBCASE("swapping encoder labels flips the encoder contrast sign") {
    std::map<std::string, std::map<std::string, double>> swapped;
    swapped["de"] = {{"selfatt-graph", scores["de"]["rnn-graph"]},
                     {"selfatt-stack", scores["de"]["rnn-stack"]},
                     {"rnn-graph", scores["de"]["selfatt-graph"]},
                     {"rnn-stack", scores["de"]["selfatt-stack"]}};
    const auto base = component_contrast(scores);
    const auto flipped = component_contrast(swapped);
    CHECK(flipped[0].encoder_diff == doctest::Approx(-base[0].encoder_diff).epsilon(1e-12));
  }
}

TEST_CASE("analysis: contrast rows are ordered by distance when given") {
  std::map<std::string, std::map<std::string, double>> scores;
  for (const char* lang : {"ja", "fr", "de"})
    scores[lang] = {{"selfatt-graph", 1.0}, {"selfatt-stack", 0.0}, {"rnn-graph", 0.0},
                    {"rnn-stack", 0.0}};
  const std::map<std::string, double> dist = {{"fr", 0.09}, {"de", 0.14}, {"ja", 0.49}};
  const auto rows = component_contrast(scores, &dist);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].language == "fr");
  CHECK(rows[1].language == "de");
  CHECK(rows[2].language == "ja");
}

TEST_CASE("analysis: transfer summaries on a hand matrix") {
  TransferMatrix a;
  a.languages = {"en", "fr", "ja"};
  a.scores = {{90.0, 70.0, 30.0}, {72.0, 88.0, 28.0}, {35.0, 33.0, 80.0}};
  DistanceMatrix d;
  d.languages = a.languages;
  d.entries = {{0.0, 0.1, 0.5}, {0.1, 0.0, 0.52}, {0.5, 0.52, 0.0}};

  const TransferSummary s = transfer_summaries(a, d);
  CHECK(s.as_source[0] == doctest::Approx(50.0));   // (70 + 30) / 2
  CHECK(s.as_source[1] == doctest::Approx(50.0));   // (72 + 28) / 2
  CHECK(s.as_source[2] == doctest::Approx(34.0));   // (35 + 33) / 2
  CHECK(s.as_target[0] == doctest::Approx(53.5));   // (72 + 35) / 2
  CHECK(s.as_target[1] == doctest::Approx(51.5));   // (70 + 33) / 2
  CHECK(s.as_target[2] == doctest::Approx(29.0));   // (30 + 28) / 2
  CHECK(s.mean_distance[0] == doctest::Approx(0.3));
  CHECK(s.source_correlation.pearson < 0.0);  // farther languages transfer worse

  SUBCASE("diagonal entries never contribute") {
    TransferMatrix altered = a;
    altered.scores[0][0] = -999.0;
    altered.scores[1][1] = 0.0;
    altered.scores[2][2] = 123.0;
    const TransferSummary s2 = transfer_summaries(altered, d);
    CHECK(s2.as_source == s.as_source);
    CHECK(s2.as_target == s.as_target);
  }
  SUBCASE("constant matrix surfaces the zero-variance error") {
    TransferMatrix flat;
    flat.languages = a.languages;
    flat.scores = {{1, 1, 1}, {1, 1, 1}, {1, 1, 1}};
    CHECK_THROWS_AS(transfer_summaries(flat, d), std::invalid_argument);
  }
  SUBCASE("misaligned language sets are rejected") {
    DistanceMatrix wrong = d;
    wrong.languages = {"en", "fr", "zh"};
    CHECK_THROWS_AS(transfer_summaries(a, wrong), std::invalid_argument);
  }
}
