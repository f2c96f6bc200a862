#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "barcoder/core_types.hpp"
#include "barcoder/rng.hpp"

namespace barcoder::testing {

// Values uniform in [lo, hi), rounded to float.
inline EmbeddingMatrix random_matrix(std::size_t n, std::size_t d, std::uint64_t seed, double lo = -1.0,
                                     double hi = 1.0) {
  Engine rng(seed);
  std::vector<float> v(n * d);
  for (float& x : v) x = static_cast<float>(lo + (hi - lo) * uniform01(rng));
  return EmbeddingMatrix(n, d, std::move(v));
}

inline ThresholdVector random_thresholds(std::size_t d, Engine& rng) {
  std::vector<double> t(d);
  for (double& x : t) x = -1.0 + 2.0 * uniform01(rng);
  return ThresholdVector(std::move(t));
}

// Unpacked reference: bit = value >= cut, compared in double.
inline std::vector<std::vector<int>> oracle_bits(const EmbeddingMatrix& m, const ThresholdVector& t) {
  std::vector<std::vector<int>> bits(m.n_samples(), std::vector<int>(m.n_dims()));
  for (std::size_t r = 0; r < m.n_samples(); ++r) {
    for (std::size_t d = 0; d < m.n_dims(); ++d) bits[r][d] = static_cast<double>(m(r, d)) >= t[d] ? 1 : 0;
  }
  return bits;
}

inline bool matches(const BinaryMatrix& b, const std::vector<std::vector<int>>& bits) {
  for (std::size_t r = 0; r < b.n_samples(); ++r) {
    for (std::size_t d = 0; d < b.n_dims(); ++d) {
      if (static_cast<int>(b.bit(r, d)) != bits[r][d]) return false;
    }
  }
  return true;
}

// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("barcoder_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// Exhaustive Otsu reference: raw partition at every interior edge, no shared code with the library.
inline double otsu_oracle(const std::vector<float>& values, std::size_t bins) {
  double lo = values[0], hi = values[0];
  for (float v : values) {
    lo = std::min(lo, static_cast<double>(v));
    hi = std::max(hi, static_cast<double>(v));
  }
  double best = -1.0, cut = lo;
  const double n = static_cast<double>(values.size());
  for (std::size_t j = 1; j < bins; ++j) {
    const double edge = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bins);
    double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
    for (float v : values) {
      if (static_cast<double>(v) >= edge) {
        n1 += 1;
        s1 += v;
      } else {
        n0 += 1;
        s0 += v;
      }
    }
    if (n0 == 0 || n1 == 0) continue;
    const double m0 = s0 / n0, m1 = s1 / n1;
    const double var = (n0 / n) * (n1 / n) * (m0 - m1) * (m0 - m1);
    if (var > best) {
      best = var;
      cut = edge;
    }
  }
  return cut;
}

}  // namespace barcoder::testing
