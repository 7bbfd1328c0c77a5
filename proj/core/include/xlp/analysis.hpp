#pragma once

#include <map>
#include <string>
#include <vector>

#include "xlp/evaluation.hpp"
#include "xlp/typology.hpp"

namespace xlp {

// Gap of evaluation scores (mean of UAS and LAS) from source to target.
double performance_distance(const EvalReport& target, const EvalReport& source);

struct CorrelationReport {
  double pearson = 0.0;
  double spearman = 0.0;
  std::size_t n = 0;
};

// Pearson on the values; Spearman is Pearson on fractional ranks with
// average-rank ties. Throws on zero variance in either list.
CorrelationReport correlate(const std::vector<double>& xs, const std::vector<double>& ys);

// Per-language difference between the best order-free and the best
// order-sensitive module, holding the other module free.
struct ContrastRow {
  std::string language;
  double encoder_diff = 0.0;  // best self-attention cell minus best RNN cell
  double decoder_diff = 0.0;  // best graph cell minus best stack cell
};

// scores[language] maps architecture names ("selfatt-graph", "selfatt-stack",
// "rnn-graph", "rnn-stack") to evaluation scores; all four must be present.
// When order_by_distance is given, rows are sorted by ascending distance.
std::vector<ContrastRow> component_contrast(
    const std::map<std::string, std::map<std::string, double>>& scores,
    const std::map<std::string, double>* order_by_distance = nullptr);

// Source x target transfer performance; diagonal holds supervised self-scores
// and is excluded from every aggregate.
struct TransferMatrix {
  std::vector<std::string> languages;
  std::vector<std::vector<double>> scores;
};

struct TransferSummary {
  std::vector<std::string> languages;
  std::vector<double> as_source;      // row means, diagonal excluded
  std::vector<double> as_target;      // column means, diagonal excluded
  std::vector<double> mean_distance;  // mean word-ordering distance to the others
  CorrelationReport source_correlation;
  CorrelationReport target_correlation;
};

TransferSummary transfer_summaries(const TransferMatrix& a, const DistanceMatrix& distances);

}  // namespace xlp
