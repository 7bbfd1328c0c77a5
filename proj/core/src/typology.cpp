#include "xlp/typology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

namespace xlp {

std::string type_label(const AugmentedType& t) {
  return "(" + t.modifier_upos + "," + t.head_upos + "," + t.deprel + ")";
}

TypeStats collect_type_stats(const Treebank& tb) {
  TypeStats stats;
  for (const Sentence& s : tb.sentences) {
    for (const Token& t : s.tokens) {
      if (t.head == 0) continue;
      const Token& head = s.tokens[static_cast<std::size_t>(t.head - 1)];
      AugmentedType type{t.upos, head.upos, t.deprel};
      DirCount& c = stats.counts[type];
      ++c.total;
      if (t.id < t.head) ++c.left;
      ++stats.total_edges;
    }
  }
  return stats;
}

TypeSelection select_types(const std::map<std::string, TypeStats>& stats_by_language,
                           double min_avg_freq, int min_langs) {
  if (stats_by_language.empty())
    throw std::invalid_argument("select_types: no languages supplied");
  const double lang_count = static_cast<double>(stats_by_language.size());

  std::map<AugmentedType, std::pair<double, int>> acc;  // sum of rel. freqs, #languages
  for (const auto& [lang, stats] : stats_by_language) {
    (void)lang;
    if (stats.total_edges == 0) continue;
    for (const auto& [type, c] : stats.counts) {
      auto& slot = acc[type];
      slot.first += static_cast<double>(c.total) / static_cast<double>(stats.total_edges);
      if (c.total > 0) slot.second += 1;
    }
  }

  std::vector<std::pair<AugmentedType, double>> kept;
  for (const auto& [type, slot] : acc) {
    const double avg = slot.first / lang_count;
    if (avg > min_avg_freq && slot.second >= min_langs) kept.emplace_back(type, avg);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  TypeSelection sel;
  sel.min_avg_freq = min_avg_freq;
  sel.min_langs = min_langs;
  sel.types.reserve(kept.size());
  for (auto& [type, avg] : kept) {
    (void)avg;
    sel.types.push_back(std::move(type));
  }
  return sel;
}

WordOrderVector order_vector(const TypeStats& stats, const std::string& language,
                             const TypeSelection& sel) {
  if (sel.types.empty()) throw std::invalid_argument("order_vector: empty type selection");
  WordOrderVector v;
  v.language = language;
  v.values.reserve(sel.types.size());
  v.imputed.reserve(sel.types.size());
  for (const AugmentedType& type : sel.types) {
    const auto it = stats.counts.find(type);
    if (it == stats.counts.end() || it->second.total == 0) {
      // Absent type: neutral midpoint, flagged so analyses can report it.
      v.values.push_back(0.5);
      v.imputed.push_back(true);
    } else {
      v.values.push_back(static_cast<double>(it->second.left) /
                         static_cast<double>(it->second.total));
      v.imputed.push_back(false);
    }
  }
  return v;
}

WordOrderVector order_vector(const Treebank& tb, const TypeSelection& sel) {
  return order_vector(collect_type_stats(tb), tb.language, sel);
}

double manhattan_distance(const WordOrderVector& a, const WordOrderVector& b) {
  if (a.values.size() != b.values.size())
    throw std::invalid_argument("manhattan_distance: vectors of length " +
                                std::to_string(a.values.size()) + " and " +
                                std::to_string(b.values.size()) + " are not aligned");
  double d = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) d += std::abs(a.values[i] - b.values[i]);
  return d;
}

DistanceMatrix distance_matrix(const std::vector<WordOrderVector>& vectors) {
  if (vectors.size() < 2)
    throw std::invalid_argument("distance_matrix: need at least 2 languages");
  std::set<std::string> seen;
  for (const auto& v : vectors)
    if (!seen.insert(v.language).second)
      throw std::invalid_argument("distance_matrix: duplicate language " + v.language);

  DistanceMatrix dm;
  const std::size_t n = vectors.size();
  dm.languages.reserve(n);
  for (const auto& v : vectors) dm.languages.push_back(v.language);
  dm.entries.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = manhattan_distance(vectors[i], vectors[j]);
      dm.entries[i][j] = d;
      dm.entries[j][i] = d;
    }
  return dm;
}

Dendrogram cluster_single_linkage(const DistanceMatrix& dm) {
  const int n = static_cast<int>(dm.languages.size());
  if (n < 2) throw std::invalid_argument("cluster_single_linkage: need at least 2 languages");

  Dendrogram out;
  out.leaves = dm.languages;

  struct Cluster {
    int id;
    std::vector<int> members;  // leaf indices
  };
  std::vector<Cluster> active;
  active.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) active.push_back({i, {i}});

  auto linkage = [&](const Cluster& a, const Cluster& b) {
    double best = std::numeric_limits<double>::infinity();
    for (int x : a.members)
      for (int y : b.members) best = std::min(best, dm.entries[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)]);
    return best;
  };

  int next_id = n;
  while (active.size() > 1) {
    std::size_t best_i = 0, best_j = 1;
    double best = std::numeric_limits<double>::infinity();
    // Scanning pairs in ascending (id_a, id_b) order with a strict '<' keeps
    // the smallest pair on ties.
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j) {
        const double d = linkage(active[i], active[j]);
        if (d < best) {
          best = d;
          best_i = i;
          best_j = j;
        }
      }
    Merge m;
    m.cluster_a = std::min(active[best_i].id, active[best_j].id);
    m.cluster_b = std::max(active[best_i].id, active[best_j].id);
    m.height = best;
    m.id = next_id++;
    out.merges.push_back(m);

    Cluster merged;
    merged.id = m.id;
    merged.members = active[best_i].members;
    merged.members.insert(merged.members.end(), active[best_j].members.begin(),
                          active[best_j].members.end());
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_j));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best_i));
    active.push_back(std::move(merged));
  }
  return out;
}

namespace {

void newick_node(const Dendrogram& d, int id, double parent_height, std::ostringstream& out) {
  const int n = static_cast<int>(d.leaves.size());
  char buf[32];
  if (id < n) {
    std::snprintf(buf, sizeof(buf), ":%.6f", parent_height);
    out << d.leaves[static_cast<std::size_t>(id)] << buf;
    return;
  }
  const Merge& m = d.merges[static_cast<std::size_t>(id - n)];
  out << '(';
  newick_node(d, m.cluster_a, m.height, out);
  out << ',';
  newick_node(d, m.cluster_b, m.height, out);
  out << ')';
  std::snprintf(buf, sizeof(buf), ":%.6f", parent_height - m.height);
  out << buf;
}

}  // namespace

std::string Dendrogram::newick() const {
  if (merges.empty()) return ";";
  std::ostringstream out;
  const Merge& root = merges.back();
  out << '(';
  newick_node(*this, root.cluster_a, root.height, out);
  out << ',';
  newick_node(*this, root.cluster_b, root.height, out);
  out << ");";
  return out.str();
}

int DepDistHistogram::bucket_of(int d) {
  if (d < -2) return 0;
  if (d == -2) return 1;
  if (d == -1) return 2;
  if (d == 1) return 3;
  if (d == 2) return 4;
  if (d > 2) return 5;
  throw std::logic_error("dep distance 0 is impossible for a valid tree");
}

const char* DepDistHistogram::bucket_name(int b) {
  static constexpr const char* names[kBuckets] = {"<-2", "-2", "-1", "1", "2", ">2"};
  return names[b];
}

std::array<double, DepDistHistogram::kBuckets> DepDistHistogram::percent() const {
  std::array<double, kBuckets> p{};
  if (total_edges == 0) return p;
  for (int b = 0; b < kBuckets; ++b)
    p[static_cast<std::size_t>(b)] =
        100.0 * static_cast<double>(counts[static_cast<std::size_t>(b)]) /
        static_cast<double>(total_edges);
  return p;
}

DepDistHistogram dep_distance_histogram(const Treebank& tb) {
  DepDistHistogram h;
  for (const Sentence& s : tb.sentences) {
    for (const Token& t : s.tokens) {
      if (t.head == 0) continue;
      const int d = t.id - t.head;  // modifier before head => negative
      ++h.counts[static_cast<std::size_t>(DepDistHistogram::bucket_of(d))];
      ++h.total_edges;
    }
  }
  return h;
}

}  // namespace xlp
