#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlp/typology.hpp"

namespace xlp {

// Pretrained word vectors, frozen at training time. Text format: first line
// "<vocab_size> <dim>", then one "word v1 ... v<dim>" line per entry,
// space-separated.
struct WordEmbeddings {
  std::size_t dim = 0;
  std::vector<std::string> words;
  std::unordered_map<std::string, int> index;
  std::vector<float> matrix;  // row-major, words.size() x dim

  const float* vector_of(const std::string& word) const {
    auto it = index.find(word);
    return it == index.end() ? nullptr : matrix.data() + static_cast<std::size_t>(it->second) * dim;
  }

  static WordEmbeddings load(const std::filesystem::path& path);
};

// 6-decimal fixed-point TSV serializations for typology outputs.
std::string vectors_tsv(const std::vector<WordOrderVector>& vectors, const TypeSelection& sel);
std::string imputed_tsv(const std::vector<WordOrderVector>& vectors, const TypeSelection& sel);
std::string distance_matrix_tsv(const DistanceMatrix& dm);
DistanceMatrix read_distance_matrix_tsv(const std::filesystem::path& path);
std::string dendrogram_tsv(const Dendrogram& d);
std::string depdist_tsv(const std::map<std::string, DepDistHistogram>& by_language);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace xlp
