#include "barcoder/thresholders.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace barcoder {

std::string_view to_string(ThresholdMethod method) {
  switch (method) {
    case ThresholdMethod::simple: return "simple";
    case ThresholdMethod::otsu: return "otsu";
    case ThresholdMethod::hybrid: return "hybrid";
    case ThresholdMethod::cs_global: return "cs-global";
  }
  return "unknown";
}

Comparison comparison_for(ThresholdMethod method) {
  return method == ThresholdMethod::hybrid ? Comparison::greater : Comparison::at_least;
}

ThresholdVector GlobalThreshold::expand(std::size_t n_dims) const {
  const double cut = comparison == Comparison::greater
                         ? std::nextafter(value, std::numeric_limits<double>::infinity())
                         : value;
  return ThresholdVector::constant(n_dims, cut);
}

GlobalThreshold simple_threshold(double value) {
  if (!std::isfinite(value)) throw std::invalid_argument("simple threshold must be finite");
  return {value, ThresholdMethod::simple, Comparison::at_least, {}};
}

BinaryMatrix minmax_binarize(const EmbeddingMatrix& matrix) {
  BinaryMatrix out(matrix.n_samples(), matrix.n_dims());
  for (std::size_t r = 0; r < matrix.n_samples(); ++r) {
    const auto row = matrix.row(r);
    for (std::size_t d = 1; d < row.size(); ++d) {
      if (row[d] > row[d - 1]) out.set_bit(r, d, true);
    }
  }
  return out;
}

Histogram make_histogram(std::span<const float> values, std::size_t bin_count) {
  if (values.empty()) throw std::invalid_argument("histogram of an empty range");
  if (bin_count < 2) throw std::invalid_argument("histogram needs at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw std::invalid_argument("histogram of a constant range");

  Histogram h;
  h.edges.resize(bin_count + 1);
  for (std::size_t j = 0; j < bin_count; ++j) {
    h.edges[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bin_count);
  }
  h.edges[bin_count] = hi;
  for (std::size_t j = 1; j <= bin_count; ++j) {
    if (!(h.edges[j] > h.edges[j - 1])) {
      throw std::invalid_argument("value range too narrow for the requested bin count");
    }
  }
  h.counts.assign(bin_count, 0);
  h.sums.assign(bin_count, 0.0);
  // interior edges only, so x == hi lands in the last bin
  const auto first = h.edges.begin() + 1;
  const auto last = h.edges.end() - 1;
  for (float v : values) {
    const double x = v;
    const auto j = static_cast<std::size_t>(std::upper_bound(first, last, x) - first);
    ++h.counts[j];
    h.sums[j] += x;
  }
  return h;
}

GlobalThreshold otsu_threshold(std::span<const float> values, std::size_t bin_count) {
  if (values.empty()) throw std::invalid_argument("otsu threshold of an empty range");
  if (bin_count < 2) throw std::invalid_argument("otsu needs at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  if (*lo_it == *hi_it) {
    return {static_cast<double>(*lo_it), ThresholdMethod::otsu, Comparison::at_least,
            "all values identical; no valid otsu split"};
  }

  const Histogram h = make_histogram(values, bin_count);
  const double total_n = static_cast<double>(values.size());
  const double total_sum = std::accumulate(h.sums.begin(), h.sums.end(), 0.0);

  double best_var = -1.0;
  std::size_t best_edge = 1;
  std::size_t n0 = 0;
  double s0 = 0.0;
  for (std::size_t k = 1; k < bin_count; ++k) {
    n0 += h.counts[k - 1];
    s0 += h.sums[k - 1];
    const std::size_t n1 = values.size() - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double w0 = static_cast<double>(n0) / total_n;
    const double w1 = static_cast<double>(n1) / total_n;
    const double mu0 = s0 / static_cast<double>(n0);
    const double mu1 = (total_sum - s0) / static_cast<double>(n1);
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best_var) {
      best_var = between;
      best_edge = k;
    }
  }
  return {h.edges[best_edge], ThresholdMethod::otsu, Comparison::at_least, {}};
}

GlobalThreshold otsu_threshold(const EmbeddingMatrix& matrix, std::size_t bin_count) {
  return otsu_threshold(matrix.values(), bin_count);
}

GlobalThreshold hybrid_threshold(std::span<const float> values) {
  if (values.empty()) throw std::invalid_argument("hybrid threshold of an empty range");
  std::vector<double> pool(values.begin(), values.end());
  const double mean = std::accumulate(pool.begin(), pool.end(), 0.0) / static_cast<double>(pool.size());

  const std::size_t mid = pool.size() / 2;
  std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mid), pool.end());
  double median = pool[mid];
  if (pool.size() % 2 == 0) {
    const double lower = *std::max_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mid));
    median = 0.5 * (lower + median);
  }
  return {0.5 * (mean + median), ThresholdMethod::hybrid, Comparison::greater, {}};
}

GlobalThreshold hybrid_threshold(const EmbeddingMatrix& matrix) {
  return hybrid_threshold(matrix.values());
}

BinaryMatrix binarize(const EmbeddingMatrix& matrix, const GlobalThreshold& threshold) {
  return binarize(matrix, threshold.expand(matrix.n_dims()));
}

}  // namespace barcoder
