#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "xlp/conllu.hpp"
#include "xlp/typology.hpp"

namespace xlp {

struct ParseTree {
  std::vector<int> heads;           // heads[i] for token i+1, 0 = root
  std::vector<std::string> labels;  // aligned with heads

  std::size_t size() const { return heads.size(); }
};

ParseTree tree_of(const Sentence& s);

struct EvalReport {
  double uas = 0.0;
  double las = 0.0;
  std::size_t evaluated_tokens = 0;
  bool punct_excluded = true;
};

// Corpus-level (micro-averaged) attachment scores. When exclude_punct is set,
// PUNCT and SYM tokens leave the denominator.
EvalReport attachment_scores(const std::vector<ParseTree>& pred, const std::vector<Sentence>& gold,
                             bool exclude_punct);

struct BreakdownCell {
  std::size_t gold_count = 0;
  std::size_t head_correct = 0;
  std::size_t both_correct = 0;
  double frequency = 0.0;  // share within the parent key
  bool unstable = false;   // frequency below the configured floor

  double uas() const { return gold_count == 0 ? 0.0 : static_cast<double>(head_correct) / static_cast<double>(gold_count); }
  double las() const { return gold_count == 0 ? 0.0 : static_cast<double>(both_correct) / static_cast<double>(gold_count); }
};

// Recall-style breakdown conditioned on the gold augmented type and gold
// direction. "all" is the frequency-weighted combination of both directions.
struct TypeBreakdown {
  AugmentedType type;
  BreakdownCell mod_first;
  BreakdownCell head_first;
  BreakdownCell all;
};

struct BreakdownReport {
  std::vector<TypeBreakdown> rows;  // ordered by descending gold frequency
  std::uint64_t total_edges = 0;
};

BreakdownReport breakdown_by_type(const std::vector<ParseTree>& pred,
                                  const std::vector<Sentence>& gold,
                                  double unstable_floor = 0.01);

// Per-bucket scores over the signed dependency distance of gold edges;
// bucket frequencies coincide with dep_distance_histogram on the gold corpus.
struct DistanceBreakdown {
  std::array<BreakdownCell, DepDistHistogram::kBuckets> buckets{};
  std::uint64_t total_edges = 0;
};

DistanceBreakdown breakdown_by_distance(const std::vector<ParseTree>& pred,
                                        const std::vector<Sentence>& gold);

// 4-decimal fixed-point serializations.
std::string report_tsv(const EvalReport& r);
std::string report_json(const EvalReport& r, const BreakdownReport* by_type = nullptr,
                        const DistanceBreakdown* by_distance = nullptr);
std::string breakdown_tsv(const BreakdownReport& r);
std::string distance_breakdown_tsv(const DistanceBreakdown& r);

}  // namespace xlp
