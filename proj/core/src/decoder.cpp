#include "xlp/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xlp {

std::vector<DerivationStep> gold_derivation(const std::vector<int>& gold_heads) {
  if (!is_valid_tree(gold_heads))
    throw std::invalid_argument("gold_derivation: heads do not form a valid tree");
  const int n = static_cast<int>(gold_heads.size());
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n + 1));
  for (int m = 1; m <= n; ++m)
    children[static_cast<std::size_t>(gold_heads[static_cast<std::size_t>(m - 1)])].push_back(m);
  for (int h = 0; h <= n; ++h) {
    std::sort(children[static_cast<std::size_t>(h)].begin(),
              children[static_cast<std::size_t>(h)].end(), [h](int a, int b) {
                const int da = std::abs(a - h), db = std::abs(b - h);
                if (da != db) return da < db;
                return a < b;
              });
  }

  std::vector<std::size_t> cursor(static_cast<std::size_t>(n + 1), 0);
  std::vector<DerivationStep> steps;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int top = stack.back();
    auto& kids = children[static_cast<std::size_t>(top)];
    if (cursor[static_cast<std::size_t>(top)] < kids.size()) {
      const int child = kids[cursor[static_cast<std::size_t>(top)]++];
      steps.push_back({top, child});
      stack.push_back(child);
    } else {
      steps.push_back({top, top});
      stack.pop_back();
    }
  }
  return steps;
}

}  // namespace xlp
