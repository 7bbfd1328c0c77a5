#include "xlp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace xlp {

double performance_distance(const EvalReport& target, const EvalReport& source) {
  const double source_score = 0.5 * (source.uas + source.las);
  const double target_score = 0.5 * (target.uas + target.las);
  return source_score - target_score;
}

namespace {

double pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("correlate: zero variance in a sample");
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

CorrelationReport correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("correlate: sample lists of different length");
  if (xs.size() < 3) throw std::invalid_argument("correlate: need at least 3 samples");
  CorrelationReport r;
  r.n = xs.size();
  r.pearson = pearson(xs, ys);
  r.spearman = pearson(fractional_ranks(xs), fractional_ranks(ys));
  return r;
}

std::vector<ContrastRow> component_contrast(
    const std::map<std::string, std::map<std::string, double>>& scores,
    const std::map<std::string, double>* order_by_distance) {
  std::vector<ContrastRow> rows;
  for (const auto& [language, cells] : scores) {
    const auto cell = [&](const char* name) {
      auto it = cells.find(name);
      if (it == cells.end())
        throw std::invalid_argument("component_contrast: missing cell " + std::string(name) +
                                    " for " + language);
      return it->second;
    };
    const double sg = cell("selfatt-graph");
    const double ss = cell("selfatt-stack");
    const double rg = cell("rnn-graph");
    const double rs = cell("rnn-stack");
    ContrastRow row;
    row.language = language;
    row.encoder_diff = std::max(sg, ss) - std::max(rg, rs);
    row.decoder_diff = std::max(sg, rg) - std::max(ss, rs);
    rows.push_back(std::move(row));
  }
  if (order_by_distance != nullptr) {
    std::stable_sort(rows.begin(), rows.end(), [&](const ContrastRow& a, const ContrastRow& b) {
      const auto da = order_by_distance->find(a.language);
      const auto db = order_by_distance->find(b.language);
      const double va = da == order_by_distance->end() ? 0.0 : da->second;
      const double vb = db == order_by_distance->end() ? 0.0 : db->second;
      if (va != vb) return va < vb;
      return a.language < b.language;
    });
  }
  return rows;
}

TransferSummary transfer_summaries(const TransferMatrix& a, const DistanceMatrix& distances) {
  const std::size_t n = a.languages.size();
  if (n < 2) throw std::invalid_argument("transfer_summaries: need at least 2 languages");
  if (a.scores.size() != n)
    throw std::invalid_argument("transfer_summaries: matrix size does not match languages");
  if (distances.languages != a.languages)
    throw std::invalid_argument("transfer_summaries: language sets are not aligned");

  TransferSummary s;
  s.languages = a.languages;
  s.as_source.assign(n, 0.0);
  s.as_target.assign(n, 0.0);
  s.mean_distance.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0, col_sum = 0.0, dist_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row_sum += a.scores[i][j];
      col_sum += a.scores[j][i];
      dist_sum += distances.entries[i][j];
    }
    const double denom = static_cast<double>(n - 1);
    s.as_source[i] = row_sum / denom;
    s.as_target[i] = col_sum / denom;
    s.mean_distance[i] = dist_sum / denom;
  }
  s.source_correlation = correlate(s.as_source, s.mean_distance);
  s.target_correlation = correlate(s.as_target, s.mean_distance);
  return s;
}

}  // namespace xlp
