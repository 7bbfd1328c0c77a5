#include "xlp/mst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace xlp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Recursive Chu-Liu-Edmonds on a dense matrix over nodes 0..k-1 (0 = root).
// Returns par[m] for every non-root node; par[0] = -1.
std::vector<int> cle_solve(const std::vector<std::vector<double>>& s) {
  const int k = static_cast<int>(s.size());
  std::vector<int> par(static_cast<std::size_t>(k), -1);
  for (int m = 1; m < k; ++m) {
    double best = kNegInf;
    int best_h = -1;
    for (int h = 0; h < k; ++h) {
      if (h == m || !std::isfinite(s[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)]))
        continue;
      if (s[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)] > best) {
        best = s[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)];
        best_h = h;
      }
    }
    if (best_h < 0) throw std::logic_error("decode_mst: node without incoming edge");
    par[static_cast<std::size_t>(m)] = best_h;
  }

  // Detect a cycle in the greedy in-edge graph.
  std::vector<int> color(static_cast<std::size_t>(k), 0);
  std::vector<int> cycle;
  color[0] = 2;
  for (int start = 1; start < k && cycle.empty(); ++start) {
    if (color[static_cast<std::size_t>(start)] != 0) continue;
    std::vector<int> path;
    int cur = start;
    while (cur != 0 && color[static_cast<std::size_t>(cur)] == 0) {
      color[static_cast<std::size_t>(cur)] = 1;
      path.push_back(cur);
      cur = par[static_cast<std::size_t>(cur)];
    }
    if (cur != 0 && color[static_cast<std::size_t>(cur)] == 1) {
      auto it = std::find(path.begin(), path.end(), cur);
      cycle.assign(it, path.end());
    }
    for (int v : path) color[static_cast<std::size_t>(v)] = 2;
  }
  if (cycle.empty()) return par;

  // Contract the cycle into a single node and recurse.
  std::vector<char> in_cycle(static_cast<std::size_t>(k), 0);
  for (int v : cycle) in_cycle[static_cast<std::size_t>(v)] = 1;
  std::vector<int> old_of;  // new id -> old id for non-contracted nodes
  std::vector<int> new_of(static_cast<std::size_t>(k), -1);
  for (int v = 0; v < k; ++v) {
    if (!in_cycle[static_cast<std::size_t>(v)]) {
      new_of[static_cast<std::size_t>(v)] = static_cast<int>(old_of.size());
      old_of.push_back(v);
    }
  }
  const int cnode = static_cast<int>(old_of.size());
  const int nk = cnode + 1;

  std::vector<std::vector<double>> s2(static_cast<std::size_t>(nk),
                                      std::vector<double>(static_cast<std::size_t>(nk), kNegInf));
  std::vector<int> enter_via(static_cast<std::size_t>(nk), -1);  // head -> cycle entry node
  std::vector<int> leave_via(static_cast<std::size_t>(nk), -1);  // modifier -> cycle exit node

  for (int h = 0; h < k; ++h) {
    for (int m = 1; m < k; ++m) {
      const double w = s[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)];
      if (h == m || !std::isfinite(w)) continue;
      const bool hc = in_cycle[static_cast<std::size_t>(h)] != 0;
      const bool mc = in_cycle[static_cast<std::size_t>(m)] != 0;
      if (!hc && !mc) {
        s2[static_cast<std::size_t>(new_of[static_cast<std::size_t>(h)])]
          [static_cast<std::size_t>(new_of[static_cast<std::size_t>(m)])] = w;
      } else if (!hc && mc) {
        // Entering the cycle: score relative to the cycle edge it replaces.
        const int h2 = new_of[static_cast<std::size_t>(h)];
        const double gain =
            w - s[static_cast<std::size_t>(par[static_cast<std::size_t>(m)])][static_cast<std::size_t>(m)];
        if (gain > s2[static_cast<std::size_t>(h2)][static_cast<std::size_t>(cnode)]) {
          s2[static_cast<std::size_t>(h2)][static_cast<std::size_t>(cnode)] = gain;
          enter_via[static_cast<std::size_t>(h2)] = m;
        }
      } else if (hc && !mc) {
        const int m2 = new_of[static_cast<std::size_t>(m)];
        if (w > s2[static_cast<std::size_t>(cnode)][static_cast<std::size_t>(m2)]) {
          s2[static_cast<std::size_t>(cnode)][static_cast<std::size_t>(m2)] = w;
          leave_via[static_cast<std::size_t>(m2)] = h;
        }
      }
    }
  }

  const std::vector<int> child = cle_solve(s2);

  std::vector<int> out(static_cast<std::size_t>(k), -1);
  for (int m2 = 1; m2 < nk; ++m2) {
    const int h2 = child[static_cast<std::size_t>(m2)];
    if (m2 == cnode) {
      const int entry = enter_via[static_cast<std::size_t>(h2)];
      out[static_cast<std::size_t>(entry)] = old_of[static_cast<std::size_t>(h2)];
      for (int v : cycle)
        if (v != entry) out[static_cast<std::size_t>(v)] = par[static_cast<std::size_t>(v)];
    } else {
      const int old_m = old_of[static_cast<std::size_t>(m2)];
      out[static_cast<std::size_t>(old_m)] =
          h2 == cnode ? leave_via[static_cast<std::size_t>(m2)] : old_of[static_cast<std::size_t>(h2)];
    }
  }
  return out;
}

void check_square(const ArcMatrix& scores) {
  if (scores.empty()) throw std::invalid_argument("decode: empty score matrix");
  for (const auto& row : scores)
    if (row.size() != scores.size())
      throw std::invalid_argument("decode: score matrix is not square");
}

}  // namespace

double tree_score(const ArcMatrix& scores, const std::vector<int>& heads) {
  double total = 0.0;
  for (std::size_t m = 1; m <= heads.size(); ++m)
    total += scores[static_cast<std::size_t>(heads[m - 1])][m];
  return total;
}

bool is_valid_tree(const std::vector<int>& heads) {
  const int n = static_cast<int>(heads.size());
  int roots = 0;
  for (int m = 1; m <= n; ++m) {
    const int h = heads[static_cast<std::size_t>(m - 1)];
    if (h < 0 || h > n || h == m) return false;
    if (h == 0) ++roots;
  }
  if (roots != 1) return false;
  for (int m = 1; m <= n; ++m) {
    int cur = m, steps = 0;
    while (cur != 0 && steps <= n) {
      cur = heads[static_cast<std::size_t>(cur - 1)];
      ++steps;
    }
    if (cur != 0) return false;
  }
  return true;
}

std::vector<int> decode_mst(const ArcMatrix& scores) {
  check_square(scores);
  const int n = static_cast<int>(scores.size()) - 1;
  if (n < 1) throw std::invalid_argument("decode_mst: no tokens");
  if (n == 1) return {0};

  std::vector<int> best_heads;
  double best_score = kNegInf;
  // The single-root constraint is enforced by trying each candidate child of
  // the root and keeping the best arborescence.
  for (int c = 1; c <= n; ++c) {
    std::vector<std::vector<double>> s(static_cast<std::size_t>(n + 1),
                                       std::vector<double>(static_cast<std::size_t>(n + 1), kNegInf));
    for (int m = 1; m <= n; ++m) {
      for (int h = 1; h <= n; ++h)
        if (h != m) s[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)] =
            scores[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)];
      if (m == c) s[0][static_cast<std::size_t>(m)] = scores[0][static_cast<std::size_t>(m)];
    }
    const std::vector<int> par = cle_solve(s);
    std::vector<int> heads(static_cast<std::size_t>(n));
    for (int m = 1; m <= n; ++m) heads[static_cast<std::size_t>(m - 1)] = par[static_cast<std::size_t>(m)];
    const double score = tree_score(scores, heads);
    if (score > best_score) {
      best_score = score;
      best_heads = std::move(heads);
    }
  }
  return best_heads;
}

std::vector<int> brute_force_mst(const ArcMatrix& scores) {
  check_square(scores);
  const int n = static_cast<int>(scores.size()) - 1;
  if (n < 1) throw std::invalid_argument("brute_force_mst: no tokens");
  if (n > 7) throw std::invalid_argument("brute_force_mst: refused for n > 7");

  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  std::vector<int> best;
  double best_score = kNegInf;
  // Odometer over head assignments in lexicographic order; keeping only
  // strict improvements leaves the lexicographically smallest maximizer.
  std::vector<int> digits(static_cast<std::size_t>(n), 0);
  const auto advance = [&]() {
    for (int i = n - 1; i >= 0; --i) {
      if (digits[static_cast<std::size_t>(i)] < n) {
        ++digits[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j) digits[static_cast<std::size_t>(j)] = 0;
        return true;
      }
    }
    return false;
  };
  do {
    bool self = false;
    for (int m = 1; m <= n; ++m)
      if (digits[static_cast<std::size_t>(m - 1)] == m) {
        self = true;
        break;
      }
    if (self) continue;
    heads = digits;
    if (!is_valid_tree(heads)) continue;
    const double score = tree_score(scores, heads);
    if (score > best_score) {
      best_score = score;
      best = heads;
    }
  } while (advance());
  return best;
}

std::vector<int> greedy_heads(const ArcMatrix& scores) {
  check_square(scores);
  const int n = static_cast<int>(scores.size()) - 1;
  std::vector<int> heads(static_cast<std::size_t>(n), 0);
  for (int m = 1; m <= n; ++m) {
    double best = kNegInf;
    int best_h = 0;
    for (int h = 0; h <= n; ++h) {
      if (h == m) continue;
      const double w = scores[static_cast<std::size_t>(h)][static_cast<std::size_t>(m)];
      if (w > best) {
        best = w;
        best_h = h;
      }
    }
    heads[static_cast<std::size_t>(m - 1)] = best_h;
  }
  return heads;
}

}  // namespace xlp
