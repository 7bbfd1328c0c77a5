#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "xlp/rng.hpp"
#include "xlp/tensor.hpp"

namespace xlp {

enum class Init { XavierUniform, Zeros, Ones, Normal001 };

inline const char* init_name(Init init) {
  switch (init) {
    case Init::XavierUniform: return "xavier-uniform";
    case Init::Zeros: return "zeros";
    case Init::Ones: return "ones";
    case Init::Normal001: return "normal(0,0.01)";
  }
  return "?";
}

// Named trainable tensors plus their initialization metadata and the seeded
// generator used to fill them. Insertion order is the canonical iteration
// order everywhere (initialization, Adam, checkpoints, grad checks).
template <class Real>
class ParameterStore {
 public:
  struct Entry {
    std::string name;
    DiffTensor<Real> tensor;
    Init init;
  };

  explicit ParameterStore(std::uint64_t seed) : seed_(seed), rng_(seed) {}

  // Entries live behind stable pointers: modules hold DiffTensor* across the
  // lifetime of the store.
  DiffTensor<Real>& add(const std::string& name, std::size_t rows, std::size_t cols, Init init) {
    if (index_.count(name) != 0)
      throw std::invalid_argument("parameter store: duplicate name " + name);
    auto e = std::make_unique<Entry>();
    e->name = name;
    e->init = init;
    e->tensor.value = Tensor<Real>(rows, cols);
    e->tensor.requires_grad = true;
    initialize(e->tensor.value, init);
    index_.emplace(name, entries_.size());
    entries_.push_back(std::move(e));
    return entries_.back()->tensor;
  }

  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  DiffTensor<Real>& operator[](const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("parameter store: unknown name " + name);
    return entries_[it->second]->tensor;
  }

  const std::vector<std::unique_ptr<Entry>>& entries() const { return entries_; }
  std::vector<std::unique_ptr<Entry>>& entries() { return entries_; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e->tensor.size();
    return n;
  }

  void zero_grads() {
    for (auto& e : entries_) {
      e->tensor.ensure_grad();
      e->tensor.zero_grad();
    }
  }

  std::uint64_t seed() const { return seed_; }
  Rng& rng() { return rng_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for write");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    out.put(static_cast<char>(sizeof(Real)));
    write_u32(out, static_cast<std::uint32_t>(entries_.size()));
    for (const auto& e : entries_) {
      write_u32(out, static_cast<std::uint32_t>(e->name.size()));
      out.write(e->name.data(), static_cast<std::streamsize>(e->name.size()));
      write_u32(out, 2);
      write_u64(out, e->tensor.value.rows());
      write_u64(out, e->tensor.value.cols());
      for (const Real x : e->tensor.value.v) write_real(out, x);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
  }

  void load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != std::string(kMagic, 8))
      throw std::runtime_error("checkpoint: bad magic in " + path.string());
    if (read_u32(in) != kVersion) throw std::runtime_error("checkpoint: unsupported version");
    const int scalar = in.get();
    if (scalar != static_cast<int>(sizeof(Real)))
      throw std::runtime_error("checkpoint: precision mismatch (file " + std::to_string(scalar) +
                               " bytes, store " + std::to_string(sizeof(Real)) + ")");
    const std::uint32_t count = read_u32(in);
    if (count != entries_.size())
      throw std::runtime_error("checkpoint: entry count mismatch");
    for (auto& e : entries_) {
      const std::uint32_t name_len = read_u32(in);
      std::string name(name_len, '\0');
      in.read(name.data(), name_len);
      if (name != e->name)
        throw std::runtime_error("checkpoint: expected parameter " + e->name + ", found " + name);
      const std::uint32_t ndim = read_u32(in);
      if (ndim != 2) throw std::runtime_error("checkpoint: unsupported rank");
      const std::uint64_t rows = read_u64(in);
      const std::uint64_t cols = read_u64(in);
      if (rows != e->tensor.value.rows() || cols != e->tensor.value.cols())
        throw std::runtime_error("checkpoint: shape mismatch for " + e->name);
      for (auto& x : e->tensor.value.v) x = read_real(in);
    }
    if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
  }

 private:
  static constexpr const char* kMagic = "XLPCKPT\0";
  static constexpr std::uint32_t kVersion = 1;

  void initialize(Tensor<Real>& t, Init init) {
    switch (init) {
      case Init::Zeros:
        break;
      case Init::Ones:
        for (auto& x : t.v) x = Real(1);
        break;
      case Init::Normal001:
        for (auto& x : t.v) x = static_cast<Real>(rng_.normal(0.0, 0.01));
        break;
      case Init::XavierUniform: {
        const double bound = std::sqrt(6.0 / static_cast<double>(t.rows() + t.cols()));
        for (auto& x : t.v) x = static_cast<Real>(rng_.uniform(-bound, bound));
        break;
      }
    }
  }

  static void write_u32(std::ostream& out, std::uint32_t x) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    out.write(b, 4);
  }
  static void write_u64(std::ostream& out, std::uint64_t x) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((x >> (8 * i)) & 0xff);
    out.write(b, 8);
  }
  static void write_real(std::ostream& out, Real x) {
    if constexpr (sizeof(Real) == 4) {
      std::uint32_t bits;
      static_assert(sizeof(bits) == sizeof(float));
      std::memcpy(&bits, &x, 4);
      write_u32(out, bits);
    } else {
      std::uint64_t bits;
      std::memcpy(&bits, &x, 8);
      write_u64(out, bits);
    }
  }
  static std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return x;
  }
  static std::uint64_t read_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t x = 0;
    for (int i = 0; i < 8; ++i) x |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return x;
  }
  static Real read_real(std::istream& in) {
    if constexpr (sizeof(Real) == 4) {
      const std::uint32_t bits = read_u32(in);
      float x;
      std::memcpy(&x, &bits, 4);
      return static_cast<Real>(x);
    } else {
      const std::uint64_t bits = read_u64(in);
      double x;
      std::memcpy(&x, &bits, 8);
      return static_cast<Real>(x);
    }
  }

  std::vector<std::unique_ptr<Entry>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t seed_;
  Rng rng_;
};

// Central-difference verification of reverse-mode gradients.
//
// `loss` evaluates the model at the current parameter values; when its
// argument is true it must also run backward so gradients accumulate into the
// store. Returns the maximum relative error over all parameter entries.
// Single precision is refused: finite differences cannot reach the tolerance.
template <class Real>
double grad_check(ParameterStore<Real>& params, const std::function<double(bool)>& loss,
                  double eps) {
  if constexpr (sizeof(Real) == 4) {
    (void)params;
    (void)loss;
    (void)eps;
    throw std::invalid_argument("grad_check: single precision refused, use a double store");
  } else {
    if (!(eps >= 1e-7 && eps <= 1e-4))
      throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-4]");
    params.zero_grads();
    loss(true);
    double max_rel = 0.0;
    for (auto& entry : params.entries()) {
      auto& t = entry->tensor;
      for (std::size_t k = 0; k < t.size(); ++k) {
        const Real saved = t.value.v[k];
        t.value.v[k] = saved + static_cast<Real>(eps);
        const double up = loss(false);
        t.value.v[k] = saved - static_cast<Real>(eps);
        const double down = loss(false);
        t.value.v[k] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double analytic = static_cast<double>(t.grad.v[k]);
        const double rel = std::abs(analytic - numeric) /
                           std::max(1e-8, std::abs(analytic) + std::abs(numeric));
        max_rel = std::max(max_rel, rel);
      }
    }
    return max_rel;
  }
}

}  // namespace xlp
