#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "barcoder/core_types.hpp"

namespace barcoder {

/// Gaussian class clusters standing in for sentence embeddings.
///
/// The first round(informative_fraction * n_dims) dimensions are informative.
/// Informative dimension j has its own centre c_j, spread evenly over
/// [-cut_spread, cut_spread] in a seed-shuffled order; class k's mean there is
/// c_j + (k - (n_classes - 1) / 2) * separation, so the best cut between
/// adjacent classes sits at a different value on every informative dimension.
/// Uninformative dimensions are N(0, noise^2). Values are clipped to [-1, 1].
struct SynthSpec {
  std::size_t n_samples = 600;
  std::size_t n_dims = 24;
  std::size_t n_classes = 2;
  double separation = 0.3;
  double noise = 0.15;
  double informative_fraction = 1.0 / 3.0;
  double cut_spread = 0.5;
  std::uint64_t seed = 0;
};

/// Rejects specs whose class means fall outside [-1, 1]. Labels are balanced
/// (sample i has class i mod n_classes), so every class occurs when
/// n_samples >= n_classes.
std::pair<EmbeddingMatrix, LabelVector> generate_synthetic(const SynthSpec& spec);

}  // namespace barcoder
