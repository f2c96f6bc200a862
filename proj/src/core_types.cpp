#include "barcoder/core_types.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace barcoder {

EmbeddingMatrix::EmbeddingMatrix(std::size_t n_samples, std::size_t n_dims,
                                 std::vector<float> values)
    : n_samples_(n_samples), n_dims_(n_dims), values_(std::move(values)) {
  if (n_samples_ == 0 || n_dims_ == 0) {
    throw std::invalid_argument("embedding matrix must have at least one sample and one dimension");
  }
  if (values_.size() != n_samples_ * n_dims_) {
    throw std::invalid_argument("embedding matrix holds " + std::to_string(values_.size()) +
                                " values, expected " + std::to_string(n_samples_) + " x " +
                                std::to_string(n_dims_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw std::invalid_argument("non-finite embedding value at row " +
                                  std::to_string(i / n_dims_) + ", column " +
                                  std::to_string(i % n_dims_));
    }
  }
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

LabelVector::LabelVector(std::vector<std::uint32_t> labels, std::size_t n_classes)
    : labels_(std::move(labels)), n_classes_(n_classes) {
  if (n_classes_ < 2) throw std::invalid_argument("need at least 2 classes");
  std::vector<std::size_t> seen(n_classes_, 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] >= n_classes_) {
      throw std::invalid_argument("label " + std::to_string(labels_[i]) + " at sample " +
                                  std::to_string(i) + " is outside 0.." +
                                  std::to_string(n_classes_ - 1));
    }
    ++seen[labels_[i]];
  }
  for (std::size_t k = 0; k < n_classes_; ++k) {
    if (seen[k] == 0) {
      throw std::invalid_argument("class " + std::to_string(k) + " has no samples");
    }
  }
}

LabelVector LabelVector::from_values(std::vector<std::uint32_t> labels) {
  if (labels.empty()) throw std::invalid_argument("empty label vector");
  const std::size_t n_classes = *std::max_element(labels.begin(), labels.end()) + std::size_t{1};
  return LabelVector(std::move(labels), n_classes);
}

ThresholdVector::ThresholdVector(std::vector<double> cutpoints) : cutpoints_(std::move(cutpoints)) {
  for (std::size_t d = 0; d < cutpoints_.size(); ++d) {
    if (!std::isfinite(cutpoints_[d])) {
      throw std::invalid_argument("non-finite cut-point for dimension " + std::to_string(d));
    }
  }
}

ThresholdVector ThresholdVector::constant(std::size_t n_dims, double value) {
  return ThresholdVector(std::vector<double>(n_dims, value));
}

void ThresholdVector::set(std::size_t dim, double value) {
  if (dim >= cutpoints_.size()) throw std::out_of_range("threshold dimension out of range");
  if (!std::isfinite(value)) throw std::invalid_argument("non-finite cut-point");
  cutpoints_[dim] = value;
}

ThresholdVector ThresholdVector::with(std::size_t dim, double value) const {
  ThresholdVector copy = *this;
  copy.set(dim, value);
  return copy;
}

BinaryMatrix::BinaryMatrix(std::size_t n_samples, std::size_t n_dims)
    : n_samples_(n_samples),
      n_dims_(n_dims),
      words_per_column_((n_samples + 63) / 64),
      words_(words_per_column_ * n_dims, 0) {}

std::size_t BinaryMatrix::count_ones(std::size_t dim) const noexcept {
  std::size_t total = 0;
  for (std::uint64_t w : column(dim)) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

namespace {

void fill_column(std::span<std::uint64_t> words, const EmbeddingMatrix& matrix, std::size_t dim,
                 double cutpoint) {
  std::fill(words.begin(), words.end(), 0);
  const std::size_t n = matrix.n_samples();
  for (std::size_t r = 0; r < n; ++r) {
    if (static_cast<double>(matrix(r, dim)) >= cutpoint) {
      words[r >> 6] |= std::uint64_t{1} << (r & 63);
    }
  }
}

}  // namespace

BinaryMatrix binarize(const EmbeddingMatrix& matrix, const ThresholdVector& thresholds) {
  if (thresholds.size() != matrix.n_dims()) {
    throw std::invalid_argument("threshold vector has " + std::to_string(thresholds.size()) +
                                " entries but the matrix has " + std::to_string(matrix.n_dims()) +
                                " dimensions");
  }
  BinaryMatrix out(matrix.n_samples(), matrix.n_dims());
  for (std::size_t d = 0; d < matrix.n_dims(); ++d) {
    fill_column(out.column(d), matrix, d, thresholds[d]);
  }
  return out;
}

void rebinarize_column(BinaryMatrix& binary, const EmbeddingMatrix& matrix, std::size_t dim,
                       double cutpoint) {
  if (dim >= binary.n_dims() || dim >= matrix.n_dims()) {
    throw std::out_of_range("column " + std::to_string(dim) + " out of range for " +
                            std::to_string(binary.n_dims()) + " dimensions");
  }
  if (binary.n_samples() != matrix.n_samples() || binary.n_dims() != matrix.n_dims()) {
    throw std::invalid_argument("binary matrix shape does not match the embedding matrix");
  }
  if (!std::isfinite(cutpoint)) throw std::invalid_argument("non-finite cut-point");
  fill_column(binary.column(dim), matrix, dim, cutpoint);
}

BinaryMatrix update_column(BinaryMatrix binary, const EmbeddingMatrix& matrix, std::size_t dim,
                           double cutpoint) {
  rebinarize_column(binary, matrix, dim, cutpoint);
  return binary;
}

Footprint packed_footprint(std::size_t n_samples, std::size_t n_dims) {
  return {n_dims * ((n_samples + 7) / 8), kBarcodeHeaderBytes};
}

Footprint packed_footprint(const BinaryMatrix& binary) {
  return packed_footprint(binary.n_samples(), binary.n_dims());
}

std::size_t real_footprint_bytes(std::size_t n_samples, std::size_t n_dims) {
  return n_samples * n_dims * sizeof(float);
}

}  // namespace barcoder
