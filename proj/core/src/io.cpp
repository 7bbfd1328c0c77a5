#include "xlp/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace xlp {

namespace {

std::string fixed6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

}  // namespace

WordEmbeddings WordEmbeddings::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("embeddings: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("embeddings: empty file " + path.string());

  WordEmbeddings emb;
  std::size_t declared = 0;
  {
    std::istringstream head(line);
    if (!(head >> declared >> emb.dim) || emb.dim == 0)
      throw std::runtime_error("embeddings: bad header line '" + line + "'");
  }
  emb.words.reserve(declared);
  emb.matrix.reserve(declared * emb.dim);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string word;
    row >> word;
    if (emb.index.count(word) != 0) {
      // Keep the first occurrence, as common embedding dumps contain dupes.
      continue;
    }
    const int id = static_cast<int>(emb.words.size());
    float value = 0.0f;
    std::size_t read = 0;
    while (row >> value) {
      emb.matrix.push_back(value);
      ++read;
    }
    if (read != emb.dim)
      throw std::runtime_error("embeddings: line " + std::to_string(line_no) + " has " +
                               std::to_string(read) + " values, expected " +
                               std::to_string(emb.dim));
    emb.words.push_back(word);
    emb.index.emplace(std::move(word), id);
  }
  if (declared != 0 && emb.words.size() != declared)
    throw std::runtime_error("embeddings: header declares " + std::to_string(declared) +
                             " words, file has " + std::to_string(emb.words.size()));
  return emb;
}

std::string vectors_tsv(const std::vector<WordOrderVector>& vectors, const TypeSelection& sel) {
  std::ostringstream out;
  out << "language";
  for (const AugmentedType& t : sel.types) out << '\t' << type_label(t);
  out << '\n';
  for (const WordOrderVector& v : vectors) {
    out << v.language;
    for (const double x : v.values) out << '\t' << fixed6(x);
    out << '\n';
  }
  return out.str();
}

std::string imputed_tsv(const std::vector<WordOrderVector>& vectors, const TypeSelection& sel) {
  std::ostringstream out;
  out << "language";
  for (const AugmentedType& t : sel.types) out << '\t' << type_label(t);
  out << '\n';
  for (const WordOrderVector& v : vectors) {
    out << v.language;
    for (const bool b : v.imputed) out << '\t' << (b ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

std::string distance_matrix_tsv(const DistanceMatrix& dm) {
  std::ostringstream out;
  out << "language";
  for (const std::string& l : dm.languages) out << '\t' << l;
  out << '\n';
  for (std::size_t i = 0; i < dm.languages.size(); ++i) {
    out << dm.languages[i];
    for (std::size_t j = 0; j < dm.languages.size(); ++j) out << '\t' << fixed6(dm.entries[i][j]);
    out << '\n';
  }
  return out.str();
}

DistanceMatrix read_distance_matrix_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("distance matrix: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("distance matrix: empty file " + path.string());
  DistanceMatrix dm;
  {
    std::istringstream head(line);
    std::string cell;
    bool first = true;
    while (std::getline(head, cell, '\t')) {
      if (first) {
        first = false;
        continue;
      }
      dm.languages.push_back(cell);
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, '\t');
    std::vector<double> values;
    while (std::getline(row, cell, '\t')) values.push_back(std::stod(cell));
    if (values.size() != dm.languages.size())
      throw std::runtime_error("distance matrix: ragged row in " + path.string());
    dm.entries.push_back(std::move(values));
  }
  if (dm.entries.size() != dm.languages.size())
    throw std::runtime_error("distance matrix: row count mismatch in " + path.string());
  return dm;
}

std::string dendrogram_tsv(const Dendrogram& d) {
  std::ostringstream out;
  out << "cluster_a\tcluster_b\theight\tnew_cluster_id\n";
  for (const Merge& m : d.merges)
    out << m.cluster_a << '\t' << m.cluster_b << '\t' << fixed6(m.height) << '\t' << m.id << '\n';
  return out.str();
}

std::string depdist_tsv(const std::map<std::string, DepDistHistogram>& by_language) {
  std::ostringstream out;
  out << "language";
  for (int b = 0; b < DepDistHistogram::kBuckets; ++b)
    out << '\t' << DepDistHistogram::bucket_name(b);
  out << "\ttotal_edges\n";
  for (const auto& [lang, h] : by_language) {
    out << lang;
    const auto p = h.percent();
    for (int b = 0; b < DepDistHistogram::kBuckets; ++b)
      out << '\t' << fixed6(p[static_cast<std::size_t>(b)]);
    out << '\t' << h.total_edges << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("io: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("io: cannot open " + path.string() + " for write");
  out << content;
}

}  // namespace xlp
