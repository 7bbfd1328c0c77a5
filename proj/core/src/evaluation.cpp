#include "xlp/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace xlp {

namespace {

void check_aligned(const std::vector<ParseTree>& pred, const std::vector<Sentence>& gold) {
  if (pred.size() != gold.size())
    throw std::invalid_argument("evaluation: " + std::to_string(pred.size()) +
                                " predictions for " + std::to_string(gold.size()) + " sentences");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i].heads.size() != gold[i].size() || pred[i].labels.size() != gold[i].size())
      throw std::invalid_argument("evaluation: sentence " + std::to_string(i + 1) +
                                  " prediction length mismatch");
  }
}

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace

ParseTree tree_of(const Sentence& s) {
  ParseTree t;
  t.heads.reserve(s.size());
  t.labels.reserve(s.size());
  for (const Token& tok : s.tokens) {
    t.heads.push_back(tok.head);
    t.labels.push_back(tok.deprel);
  }
  return t;
}

EvalReport attachment_scores(const std::vector<ParseTree>& pred, const std::vector<Sentence>& gold,
                             bool exclude_punct) {
  check_aligned(pred, gold);
  EvalReport r;
  r.punct_excluded = exclude_punct;
  std::size_t head_ok = 0, both_ok = 0;
  for (std::size_t si = 0; si < gold.size(); ++si) {
    const Sentence& s = gold[si];
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (exclude_punct && !is_content_upos(s.tokens[i].upos)) continue;
      ++r.evaluated_tokens;
      if (pred[si].heads[i] == s.tokens[i].head) {
        ++head_ok;
        if (pred[si].labels[i] == s.tokens[i].deprel) ++both_ok;
      }
    }
  }
  if (r.evaluated_tokens > 0) {
    r.uas = static_cast<double>(head_ok) / static_cast<double>(r.evaluated_tokens);
    r.las = static_cast<double>(both_ok) / static_cast<double>(r.evaluated_tokens);
  }
  return r;
}

BreakdownReport breakdown_by_type(const std::vector<ParseTree>& pred,
                                  const std::vector<Sentence>& gold, double unstable_floor) {
  check_aligned(pred, gold);
  struct Acc {
    BreakdownCell mod_first, head_first;
  };
  std::map<AugmentedType, Acc> acc;
  std::uint64_t total = 0;
  for (std::size_t si = 0; si < gold.size(); ++si) {
    const Sentence& s = gold[si];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Token& t = s.tokens[i];
      if (t.head == 0) continue;
      const Token& head = s.tokens[static_cast<std::size_t>(t.head - 1)];
      const AugmentedType type{t.upos, head.upos, t.deprel};
      BreakdownCell& cell =
          t.id < t.head ? acc[type].mod_first : acc[type].head_first;
      ++cell.gold_count;
      ++total;
      if (pred[si].heads[i] == t.head) {
        ++cell.head_correct;
        if (pred[si].labels[i] == t.deprel) ++cell.both_correct;
      }
    }
  }

  BreakdownReport report;
  report.total_edges = total;
  for (auto& [type, a] : acc) {
    TypeBreakdown row;
    row.type = type;
    row.mod_first = a.mod_first;
    row.head_first = a.head_first;
    row.all.gold_count = a.mod_first.gold_count + a.head_first.gold_count;
    row.all.head_correct = a.mod_first.head_correct + a.head_first.head_correct;
    row.all.both_correct = a.mod_first.both_correct + a.head_first.both_correct;
    const double type_total = static_cast<double>(row.all.gold_count);
    row.all.frequency = 1.0;
    row.mod_first.frequency =
        type_total == 0 ? 0.0 : static_cast<double>(row.mod_first.gold_count) / type_total;
    row.head_first.frequency =
        type_total == 0 ? 0.0 : static_cast<double>(row.head_first.gold_count) / type_total;
    row.mod_first.unstable = row.mod_first.frequency < unstable_floor;
    row.head_first.unstable = row.head_first.frequency < unstable_floor;
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(), [](const TypeBreakdown& a, const TypeBreakdown& b) {
    if (a.all.gold_count != b.all.gold_count) return a.all.gold_count > b.all.gold_count;
    return a.type < b.type;
  });
  return report;
}

DistanceBreakdown breakdown_by_distance(const std::vector<ParseTree>& pred,
                                        const std::vector<Sentence>& gold) {
  check_aligned(pred, gold);
  DistanceBreakdown r;
  for (std::size_t si = 0; si < gold.size(); ++si) {
    const Sentence& s = gold[si];
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Token& t = s.tokens[i];
      if (t.head == 0) continue;
      const int d = t.id - t.head;
      BreakdownCell& cell = r.buckets[static_cast<std::size_t>(DepDistHistogram::bucket_of(d))];
      ++cell.gold_count;
      ++r.total_edges;
      if (pred[si].heads[i] == t.head) {
        ++cell.head_correct;
        if (pred[si].labels[i] == t.deprel) ++cell.both_correct;
      }
    }
  }
  for (auto& cell : r.buckets)
    cell.frequency = r.total_edges == 0
                         ? 0.0
                         : 100.0 * static_cast<double>(cell.gold_count) /
                               static_cast<double>(r.total_edges);
  return r;
}

std::string report_tsv(const EvalReport& r) {
  std::ostringstream out;
  out << "metric\tvalue\n";
  out << "uas\t" << fixed4(r.uas) << '\n';
  out << "las\t" << fixed4(r.las) << '\n';
  out << "evaluated_tokens\t" << r.evaluated_tokens << '\n';
  out << "punct_excluded\t" << (r.punct_excluded ? 1 : 0) << '\n';
  return out.str();
}

namespace {

void json_cell(std::ostringstream& out, const BreakdownCell& c) {
  out << "{\"count\": " << c.gold_count << ", \"uas\": " << fixed4(c.uas())
      << ", \"las\": " << fixed4(c.las()) << ", \"frequency\": " << fixed4(c.frequency)
      << ", \"unstable\": " << (c.unstable ? "true" : "false") << "}";
}

}  // namespace

std::string report_json(const EvalReport& r, const BreakdownReport* by_type,
                        const DistanceBreakdown* by_distance) {
  std::ostringstream out;
  out << "{\n";
  out << "  \"uas\": " << fixed4(r.uas) << ",\n";
  out << "  \"las\": " << fixed4(r.las) << ",\n";
  out << "  \"evaluated_tokens\": " << r.evaluated_tokens << ",\n";
  out << "  \"punct_excluded\": " << (r.punct_excluded ? "true" : "false");
  if (by_type != nullptr) {
    out << ",\n  \"by_type\": {";
    bool first = true;
    for (const TypeBreakdown& row : by_type->rows) {
      if (!first) out << ",";
      first = false;
      out << "\n    \"" << type_label(row.type) << "\": {\"mod_first\": ";
      json_cell(out, row.mod_first);
      out << ", \"head_first\": ";
      json_cell(out, row.head_first);
      out << ", \"all\": ";
      json_cell(out, row.all);
      out << "}";
    }
    out << "\n  }";
  }
  if (by_distance != nullptr) {
    out << ",\n  \"by_distance\": {";
    for (int b = 0; b < DepDistHistogram::kBuckets; ++b) {
      if (b > 0) out << ",";
      out << "\n    \"" << DepDistHistogram::bucket_name(b) << "\": ";
      json_cell(out, by_distance->buckets[static_cast<std::size_t>(b)]);
    }
    out << "\n  }";
  }
  out << "\n}\n";
  return out.str();
}

std::string breakdown_tsv(const BreakdownReport& r) {
  std::ostringstream out;
  out << "type\tdirection\tcount\tfrequency\tuas\tlas\tunstable\n";
  for (const TypeBreakdown& row : r.rows) {
    const std::array<std::pair<const char*, const BreakdownCell*>, 3> cells = {
        std::make_pair("mod-first", &row.mod_first), std::make_pair("head-first", &row.head_first),
        std::make_pair("all", &row.all)};
    for (const auto& [name, cell] : cells) {
      out << type_label(row.type) << '\t' << name << '\t' << cell->gold_count << '\t'
          << fixed4(cell->frequency) << '\t' << fixed4(cell->uas()) << '\t' << fixed4(cell->las())
          << '\t' << (cell->unstable ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

std::string distance_breakdown_tsv(const DistanceBreakdown& r) {
  std::ostringstream out;
  out << "bucket\tcount\tfrequency\tuas\tlas\n";
  for (int b = 0; b < DepDistHistogram::kBuckets; ++b) {
    const BreakdownCell& cell = r.buckets[static_cast<std::size_t>(b)];
    out << DepDistHistogram::bucket_name(b) << '\t' << cell.gold_count << '\t'
        << fixed4(cell.frequency) << '\t' << fixed4(cell.uas()) << '\t' << fixed4(cell.las())
        << '\n';
  }
  return out.str();
}

}  // namespace xlp
