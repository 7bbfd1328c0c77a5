#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "xlp/conllu.hpp"

namespace xlp {

// Fine-grained dependency relation category: the ordered triple of modifier
// POS, head POS, and universal label.
struct AugmentedType {
  std::string modifier_upos;
  std::string head_upos;
  std::string deprel;

  auto operator<=>(const AugmentedType&) const = default;
};

std::string type_label(const AugmentedType& t);  // "(ADP,NOUN,case)"

struct DirCount {
  std::uint64_t total = 0;
  std::uint64_t left = 0;  // modifier before head
};

struct TypeStats {
  std::map<AugmentedType, DirCount> counts;
  std::uint64_t total_edges = 0;
};

// Counts every non-root edge once under (modifier POS, head POS, label).
// Root edges carry no head POS and are excluded.
TypeStats collect_type_stats(const Treebank& tb);

struct TypeSelection {
  std::vector<AugmentedType> types;  // descending average frequency, ties lexicographic
  double min_avg_freq = 0.0;
  int min_langs = 0;
};

// Keeps a type iff its average relative frequency (over edges, averaged over
// all input languages) exceeds min_avg_freq and it occurs in at least
// min_langs languages.
TypeSelection select_types(const std::map<std::string, TypeStats>& stats_by_language,
                           double min_avg_freq, int min_langs);

struct WordOrderVector {
  std::string language;
  std::vector<double> values;  // left-direction relative frequency per selected type
  std::vector<bool> imputed;   // true where the type is absent and 0.5 was substituted
};

WordOrderVector order_vector(const TypeStats& stats, const std::string& language,
                             const TypeSelection& sel);
WordOrderVector order_vector(const Treebank& tb, const TypeSelection& sel);

double manhattan_distance(const WordOrderVector& a, const WordOrderVector& b);

struct DistanceMatrix {
  std::vector<std::string> languages;
  std::vector<std::vector<double>> entries;
};

DistanceMatrix distance_matrix(const std::vector<WordOrderVector>& vectors);

// Agglomerative merge list. Leaves are numbered 0..L-1 in language order;
// merge i creates cluster id L+i. Ties break on the smallest (a, b) pair.
struct Merge {
  int cluster_a = 0;
  int cluster_b = 0;
  double height = 0.0;
  int id = 0;
};

struct Dendrogram {
  std::vector<std::string> leaves;
  std::vector<Merge> merges;

  // Branch lengths are the height difference between a node and its parent.
  std::string newick() const;
};

// Nearest-point (single-linkage) clustering of a distance matrix.
Dendrogram cluster_single_linkage(const DistanceMatrix& dm);

// Signed dependency distance d = modifier position - head position, bucketed
// into {<-2, -2, -1, 1, 2, >2}. Root edges are excluded; d = 0 cannot occur.
struct DepDistHistogram {
  static constexpr int kBuckets = 6;
  std::array<std::uint64_t, kBuckets> counts{};
  std::uint64_t total_edges = 0;

  bool empty() const { return total_edges == 0; }
  std::array<double, kBuckets> percent() const;
  static const char* bucket_name(int b);
  static int bucket_of(int d);
};

DepDistHistogram dep_distance_histogram(const Treebank& tb);

}  // namespace xlp
