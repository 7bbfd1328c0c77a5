#pragma once

#include <vector>

namespace xlp {

// Arc score matrix over nodes 0..n where node 0 is the artificial root.
// scores[h][m] is the score of attaching modifier m under head h. Column 0 is
// ignored and the diagonal is treated as forbidden by all decoders.
using ArcMatrix = std::vector<std::vector<double>>;

// Canonical tree score: sum of scores[heads[m-1]][m] for m = 1..n in index
// order, so independently found trees compare bit-for-bit.
double tree_score(const ArcMatrix& scores, const std::vector<int>& heads);

// Maximum spanning arborescence rooted at node 0 with exactly one child of
// the root. Non-projective trees permitted. Returns heads[0..n-1] for tokens
// 1..n.
std::vector<int> decode_mst(const ArcMatrix& scores);

// Exhaustive oracle for n <= 7: enumerates every single-rooted acyclic head
// assignment and keeps the maximizer, breaking ties toward the
// lexicographically smallest heads sequence.
std::vector<int> brute_force_mst(const ArcMatrix& scores);

// Per-modifier argmax over heads, ties to the smaller head index. The result
// may contain cycles or multiple roots; used for training-time prediction.
std::vector<int> greedy_heads(const ArcMatrix& scores);

bool is_valid_tree(const std::vector<int>& heads);

}  // namespace xlp
