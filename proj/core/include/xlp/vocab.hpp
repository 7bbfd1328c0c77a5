#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlp/conllu.hpp"

namespace xlp {

class Vocabulary {
 public:
  int add(const std::string& item) {
    auto it = index_.find(item);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(items_.size());
    items_.push_back(item);
    index_.emplace(item, id);
    return id;
  }

  std::optional<int> find(const std::string& item) const {
    auto it = index_.find(item);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int require(const std::string& item) const {
    auto it = index_.find(item);
    if (it == index_.end()) throw std::out_of_range("vocabulary: unknown item '" + item + "'");
    return it->second;
  }

  const std::string& at(std::size_t id) const { return items_.at(id); }
  std::size_t size() const { return items_.size(); }
  const std::vector<std::string>& items() const { return items_; }

  // The 17 universal POS tags; covers any UD treebank.
  static Vocabulary universal_pos() {
    Vocabulary v;
    for (const char* tag : {"ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
                            "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"})
      v.add(tag);
    return v;
  }

  static Vocabulary labels_from(const Treebank& tb) {
    std::set<std::string> labels;
    for (const Sentence& s : tb.sentences)
      for (const Token& t : s.tokens) labels.insert(t.deprel);
    Vocabulary v;
    for (const std::string& l : labels) v.add(l);
    return v;
  }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace xlp
