#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace barcoder {

/// Dense row-major n_samples x n_dims matrix of 32-bit embedding values.
/// Construction rejects empty shapes, size mismatches and non-finite values;
/// the matrix is immutable afterwards.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix(std::size_t n_samples, std::size_t n_dims, std::vector<float> values);

  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_dims() const noexcept { return n_dims_; }

  float operator()(std::size_t row, std::size_t dim) const noexcept {
    return values_[row * n_dims_ + dim];
  }
  std::span<const float> row(std::size_t r) const noexcept {
    return {values_.data() + r * n_dims_, n_dims_};
  }
  std::span<const float> values() const noexcept { return values_; }

  float min_value() const noexcept { return min_; }
  float max_value() const noexcept { return max_; }

  bool operator==(const EmbeddingMatrix& other) const = default;

 private:
  std::size_t n_samples_;
  std::size_t n_dims_;
  std::vector<float> values_;
  float min_;
  float max_;
};

/// Class labels 0..n_classes-1. Every class must occur at least once.
class LabelVector {
 public:
  LabelVector(std::vector<std::uint32_t> labels, std::size_t n_classes);

  /// Infers n_classes = max label + 1.
  static LabelVector from_values(std::vector<std::uint32_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_classes() const noexcept { return n_classes_; }
  std::uint32_t operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::span<const std::uint32_t> values() const noexcept { return labels_; }

  bool operator==(const LabelVector& other) const = default;

 private:
  std::vector<std::uint32_t> labels_;
  std::size_t n_classes_;
};

/// Per-sample class predictions; unlike LabelVector, not every class has to occur.
using Predictions = std::vector<std::uint32_t>;

/// One finite cut-point per feature dimension.
class ThresholdVector {
 public:
  explicit ThresholdVector(std::vector<double> cutpoints);
  static ThresholdVector constant(std::size_t n_dims, double value);

  std::size_t size() const noexcept { return cutpoints_.size(); }
  double operator[](std::size_t dim) const noexcept { return cutpoints_[dim]; }
  std::span<const double> values() const noexcept { return cutpoints_; }

  void set(std::size_t dim, double value);
  ThresholdVector with(std::size_t dim, double value) const;

  bool operator==(const ThresholdVector& other) const = default;

 private:
  std::vector<double> cutpoints_;
};

/// Bit-packed n_samples x n_dims matrix of {0,1} codes.
///
/// Storage is column-major: the bits of dimension d occupy words
/// [d * words_per_column(), (d + 1) * words_per_column()), with sample r at
/// bit (r % 64) of word (r / 64). Padding bits past n_samples are always zero,
/// so whole-matrix equality is plain word equality.
class BinaryMatrix {
 public:
  BinaryMatrix(std::size_t n_samples, std::size_t n_dims);

  std::size_t n_samples() const noexcept { return n_samples_; }
  std::size_t n_dims() const noexcept { return n_dims_; }
  std::size_t words_per_column() const noexcept { return words_per_column_; }

  bool bit(std::size_t row, std::size_t dim) const noexcept {
    return (words_[dim * words_per_column_ + (row >> 6)] >> (row & 63)) & 1U;
  }
  void set_bit(std::size_t row, std::size_t dim, bool value) noexcept {
    std::uint64_t& w = words_[dim * words_per_column_ + (row >> 6)];
    const std::uint64_t mask = std::uint64_t{1} << (row & 63);
    w = value ? (w | mask) : (w & ~mask);
  }

  std::span<const std::uint64_t> column(std::size_t dim) const noexcept {
    return {words_.data() + dim * words_per_column_, words_per_column_};
  }
  std::span<std::uint64_t> column(std::size_t dim) noexcept {
    return {words_.data() + dim * words_per_column_, words_per_column_};
  }

  std::size_t count_ones(std::size_t dim) const noexcept;

  bool operator==(const BinaryMatrix& other) const = default;

 private:
  std::size_t n_samples_;
  std::size_t n_dims_;
  std::size_t words_per_column_;
  std::vector<std::uint64_t> words_;
};

/// Disjoint row sets. test_rows is empty unless a held-out test split was requested.
struct SplitIndices {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> validation_rows;
  std::vector<std::size_t> test_rows;
};

/// bit(r, d) = 1 iff matrix(r, d) >= thresholds[d] (inclusive).
BinaryMatrix binarize(const EmbeddingMatrix& matrix, const ThresholdVector& thresholds);

/// Recomputes column `dim` of `binary` in place against `cutpoint`.
void rebinarize_column(BinaryMatrix& binary, const EmbeddingMatrix& matrix, std::size_t dim,
                       double cutpoint);

/// Value-returning form of rebinarize_column; every other column is copied untouched.
BinaryMatrix update_column(BinaryMatrix binary, const EmbeddingMatrix& matrix, std::size_t dim,
                           double cutpoint);

/// Fixed on-disk barcode header: magic(4) + version(1) + n_samples(4) + n_dims(4).
inline constexpr std::size_t kBarcodeHeaderBytes = 13;

struct Footprint {
  std::size_t payload_bytes;
  std::size_t header_bytes;
  std::size_t total_bytes() const noexcept { return payload_bytes + header_bytes; }
};

/// Packed size: n_dims * ceil(n_samples / 8) payload bytes plus the fixed header.
Footprint packed_footprint(const BinaryMatrix& binary);
Footprint packed_footprint(std::size_t n_samples, std::size_t n_dims);

/// Bytes needed to hold the same matrix as 32-bit reals.
std::size_t real_footprint_bytes(std::size_t n_samples, std::size_t n_dims);

}  // namespace barcoder
