#include "xlp/conllu.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xlp {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

[[noreturn]] void fail(std::size_t sentence_ordinal, std::size_t line_no, const std::string& what) {
  throw std::runtime_error("conllu: sentence " + std::to_string(sentence_ordinal) + " (line " +
                           std::to_string(line_no) + "): " + what);
}

struct PendingToken {
  Token token;
  std::size_t line_no = 0;
};

}  // namespace

bool is_content_upos(std::string_view upos) { return upos != "PUNCT" && upos != "SYM"; }

std::vector<bool> content_mask(const Sentence& s) {
  std::vector<bool> mask(s.tokens.size());
  for (std::size_t i = 0; i < s.tokens.size(); ++i) mask[i] = is_content_upos(s.tokens[i].upos);
  return mask;
}

std::vector<std::string> validate_sentence(const Sentence& s) {
  std::vector<std::string> violations;
  const int n = static_cast<int>(s.tokens.size());
  for (int i = 0; i < n; ++i) {
    const Token& t = s.tokens[i];
    if (t.id != i + 1)
      violations.push_back("non-consecutive id: token " + std::to_string(t.id));
    if (t.upos.empty()) violations.push_back("empty upos: token " + std::to_string(t.id));
    if (t.deprel.empty()) violations.push_back("empty deprel: token " + std::to_string(t.id));
    if (t.head < 0 || t.head > n)
      violations.push_back("head out of range: token " + std::to_string(t.id));
    if (t.head == t.id) violations.push_back("self-loop: token " + std::to_string(t.id));
  }

  int roots = 0;
  for (const Token& t : s.tokens)
    if (t.head == 0) ++roots;
  if (roots == 0 && n > 0) violations.push_back("no root");
  if (roots > 1) {
    for (const Token& t : s.tokens)
      if (t.head == 0) violations.push_back("multiple roots: token " + std::to_string(t.id));
  }

  if (violations.empty()) {
    // Chase head chains; a chain longer than n tokens means a cycle.
    for (int i = 0; i < n; ++i) {
      int cur = s.tokens[i].id;
      int steps = 0;
      while (cur != 0 && steps <= n) {
        cur = s.tokens[cur - 1].head;
        ++steps;
      }
      if (cur != 0) {
        violations.push_back("cycle: token " + std::to_string(s.tokens[i].id));
        break;
      }
    }
  }
  return violations;
}

Treebank read_treebank(std::string_view text, std::string language) {
  Treebank tb;
  tb.language = std::move(language);

  std::vector<PendingToken> pending;
  std::string sent_id;
  std::size_t sentence_ordinal = 1;
  std::size_t sentence_start_line = 1;

  auto flush_sentence = [&]() {
    if (pending.empty()) {
      sent_id.clear();
      return;
    }
    Sentence s;
    s.sent_id = sent_id;
    s.tokens.reserve(pending.size());
    const int n = static_cast<int>(pending.size());
    for (int i = 0; i < n; ++i) {
      PendingToken& p = pending[i];
      if (p.token.id != i + 1)
        fail(sentence_ordinal, p.line_no,
             "token ids not consecutive (expected " + std::to_string(i + 1) + ", found " +
                 std::to_string(p.token.id) + ")");
      if (p.token.head > n)
        fail(sentence_ordinal, p.line_no, "head out of range: " + std::to_string(p.token.head));
      s.tokens.push_back(std::move(p.token));
    }
    const auto violations = validate_sentence(s);
    if (!violations.empty()) fail(sentence_ordinal, sentence_start_line, violations.front());
    tb.sentences.push_back(std::move(s));
    pending.clear();
    sent_id.clear();
    ++sentence_ordinal;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line =
        nl == std::string_view::npos ? text.substr(pos) : text.substr(pos, nl - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      flush_sentence();
    } else if (line.front() == '#') {
      if (pending.empty()) sentence_start_line = line_no;
      constexpr std::string_view kSentId = "# sent_id = ";
      if (line.substr(0, kSentId.size()) == kSentId) sent_id = std::string(line.substr(kSentId.size()));
    } else {
      if (pending.empty() && sent_id.empty()) sentence_start_line = line_no;
      const auto cols = split_tabs(line);
      if (cols.size() != 10)
        fail(sentence_ordinal, line_no,
             "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
      // Multiword token ranges ("3-4") and empty nodes ("5.1") are not
      // syntactic words; skip them.
      if (cols[0].find('-') != std::string_view::npos ||
          cols[0].find('.') != std::string_view::npos) {
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
        continue;
      }
      PendingToken p;
      p.line_no = line_no;
      if (!parse_int(cols[0], p.token.id) || p.token.id < 1)
        fail(sentence_ordinal, line_no, "bad token id '" + std::string(cols[0]) + "'");
      p.token.form = std::string(cols[1]);
      p.token.upos = std::string(cols[3]);
      if (p.token.upos.empty()) fail(sentence_ordinal, line_no, "empty upos");
      if (!parse_int(cols[6], p.token.head))
        fail(sentence_ordinal, line_no, "non-integer head '" + std::string(cols[6]) + "'");
      if (p.token.head < 0)
        fail(sentence_ordinal, line_no, "head out of range: " + std::to_string(p.token.head));
      std::string_view deprel = cols[7];
      const std::size_t colon = deprel.find(':');
      if (colon != std::string_view::npos) deprel = deprel.substr(0, colon);
      if (deprel.empty()) fail(sentence_ordinal, line_no, "empty deprel");
      p.token.deprel = std::string(deprel);
      pending.push_back(std::move(p));
    }

    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  flush_sentence();
  refresh_counts(tb);
  return tb;
}

Treebank read_treebank_file(const std::filesystem::path& path, std::string language) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("conllu: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return read_treebank(buf.str(), std::move(language));
}

std::string write_treebank(const Treebank& tb) {
  std::string out;
  for (const Sentence& s : tb.sentences) {
    if (!s.sent_id.empty()) {
      out += "# sent_id = ";
      out += s.sent_id;
      out += '\n';
    }
    for (const Token& t : s.tokens) {
      out += std::to_string(t.id);
      out += '\t';
      out += t.form;
      out += "\t_\t";
      out += t.upos;
      out += "\t_\t_\t";
      out += std::to_string(t.head);
      out += '\t';
      out += t.deprel;
      out += "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

void write_treebank_file(const Treebank& tb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("conllu: cannot open " + path.string() + " for write");
  out << write_treebank(tb);
}

Treebank filter_by_length(const Treebank& tb, std::size_t max_len) {
  if (max_len < 1) throw std::invalid_argument("filter_by_length: max_len must be >= 1");
  Treebank out;
  out.language = tb.language;
  for (const Sentence& s : tb.sentences)
    if (s.size() <= max_len) out.sentences.push_back(s);
  refresh_counts(out);
  return out;
}

void refresh_counts(Treebank& tb) {
  tb.token_count = 0;
  tb.content_token_count = 0;
  for (const Sentence& s : tb.sentences) {
    tb.token_count += s.size();
    for (const Token& t : s.tokens)
      if (is_content_upos(t.upos)) ++tb.content_token_count;
  }
}

}  // namespace xlp
