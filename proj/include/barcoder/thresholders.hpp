#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "barcoder/core_types.hpp"

namespace barcoder {

enum class ThresholdMethod { simple, otsu, hybrid, cs_global };

std::string_view to_string(ThresholdMethod method);

/// How a value is compared against the cut-point.
enum class Comparison {
  at_least,  // bit = 1 iff value >= T
  greater,   // bit = 1 iff value >  T
};

/// Comparison rule each baseline uses: hybrid is strict, everything else inclusive.
Comparison comparison_for(ThresholdMethod method);

/// One cut-point shared by every feature.
struct GlobalThreshold {
  double value = 0.0;
  ThresholdMethod method = ThresholdMethod::simple;
  Comparison comparison = Comparison::at_least;
  /// Non-empty when the fit was degenerate (e.g. zero-variance input).
  std::string warning;

  /// Constant ThresholdVector reproducing this threshold under the inclusive
  /// rule of core binarize(). For a strict threshold the cut-point is moved to
  /// the next double above `value`, which is exact for float inputs.
  ThresholdVector expand(std::size_t n_dims) const;
};

/// Fixed cut-point, T = 0 by default.
GlobalThreshold simple_threshold(double value = 0.0);

/// bit d of each row = 1 iff row[d] > row[d-1]; bit 0 is always 0.
BinaryMatrix minmax_binarize(const EmbeddingMatrix& matrix);

/// Equal-width histogram over [min, max]. Value x falls in bin j iff
/// edges[j] <= x < edges[j+1]; the maximum goes to the last bin.
struct Histogram {
  std::vector<double> edges;         // bin_count + 1, strictly increasing
  std::vector<std::size_t> counts;   // bin_count
  std::vector<double> sums;          // per-bin sum of values

  std::size_t bin_count() const noexcept { return counts.size(); }
};

Histogram make_histogram(std::span<const float> values, std::size_t bin_count);

/// Otsu cut over all pooled entries: the interior bin edge maximising
/// between-class variance, with class 1 = {x >= edge}. Constant input yields
/// that constant and a warning.
GlobalThreshold otsu_threshold(std::span<const float> values, std::size_t bin_count = 256);
GlobalThreshold otsu_threshold(const EmbeddingMatrix& matrix, std::size_t bin_count = 256);

/// T = (mean + median) / 2 over all pooled entries, strict comparison.
GlobalThreshold hybrid_threshold(std::span<const float> values);
GlobalThreshold hybrid_threshold(const EmbeddingMatrix& matrix);

/// Applies a global threshold honoring its comparison rule.
BinaryMatrix binarize(const EmbeddingMatrix& matrix, const GlobalThreshold& threshold);

}  // namespace barcoder
