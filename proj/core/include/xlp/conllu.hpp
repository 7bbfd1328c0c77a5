#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace xlp {

// One syntactic word. `head` is 0 for the artificial root; `deprel` carries
// only the universal label part (subtypes after ':' are dropped at ingestion).
struct Token {
  int id = 0;
  std::string form;
  std::string upos;
  int head = 0;
  std::string deprel;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;
  std::string sent_id;

  std::size_t size() const { return tokens.size(); }
  bool operator==(const Sentence&) const = default;
};

struct Treebank {
  std::string language;
  std::vector<Sentence> sentences;
  std::size_t token_count = 0;
  std::size_t content_token_count = 0;

  bool operator==(const Treebank&) const = default;
};

// PUNCT and SYM tokens are excluded from evaluation and content counts.
bool is_content_upos(std::string_view upos);

// mask[i] is true iff token i counts as content.
std::vector<bool> content_mask(const Sentence& s);

// Empty result iff the sentence is a well-formed single-rooted tree with
// consecutive ids. Each violation names the rule and the offending token id.
std::vector<std::string> validate_sentence(const Sentence& s);

// Parses a CoNLL-U document. Multiword-token ranges and empty nodes are
// skipped; every surviving sentence is validated strictly (reject, not
// repair). Errors name the sentence ordinal and the offending line.
Treebank read_treebank(std::string_view text, std::string language);
Treebank read_treebank_file(const std::filesystem::path& path, std::string language);

// Emits the fields this toolkit models; all other columns are "_".
// read_treebank(write_treebank(tb)) reproduces tb exactly.
std::string write_treebank(const Treebank& tb);
void write_treebank_file(const Treebank& tb, const std::filesystem::path& path);

// Drops sentences longer than max_len tokens, preserving order.
Treebank filter_by_length(const Treebank& tb, std::size_t max_len);

// Recomputes token_count / content_token_count from the sentences.
void refresh_counts(Treebank& tb);

}  // namespace xlp
