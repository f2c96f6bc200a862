#include "barcoder/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "barcoder/rng.hpp"

namespace barcoder {

std::pair<EmbeddingMatrix, LabelVector> generate_synthetic(const SynthSpec& spec) {
  if (spec.n_samples == 0 || spec.n_dims == 0) throw std::invalid_argument("synthetic shape must be non-empty");
  if (spec.n_classes < 2) throw std::invalid_argument("synthetic data needs at least 2 classes");
  if (spec.n_samples < spec.n_classes) throw std::invalid_argument("fewer samples than classes");
  if (!(spec.informative_fraction > 0.0 && spec.informative_fraction <= 1.0)) {
    throw std::invalid_argument("informative fraction must lie in (0, 1]");
  }
  if (!(spec.separation >= 0.0) || !(spec.noise >= 0.0) || !(spec.cut_spread >= 0.0)) {
    throw std::invalid_argument("separation, noise and cut spread must be non-negative");
  }
  const double half_span = 0.5 * static_cast<double>(spec.n_classes - 1) * spec.separation;
  if (spec.cut_spread + half_span > 1.0) {
    throw std::invalid_argument("infeasible spec: class means reach " +
                                std::to_string(spec.cut_spread + half_span) + ", outside [-1, 1]");
  }

  const std::size_t n_inf = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(spec.informative_fraction * static_cast<double>(spec.n_dims))), 1,
      spec.n_dims);

  Engine rng(derive_seed(spec.seed, 0));
  std::vector<double> centre(n_inf, 0.0);
  for (std::size_t j = 0; j < n_inf; ++j) {
    centre[j] = n_inf == 1 ? 0.0
                           : -spec.cut_spread + 2.0 * spec.cut_spread * static_cast<double>(j) /
                                                    static_cast<double>(n_inf - 1);
  }
  shuffle(centre, rng);

  std::vector<float> values(spec.n_samples * spec.n_dims);
  std::vector<std::uint32_t> labels(spec.n_samples);
  const double mid_class = 0.5 * static_cast<double>(spec.n_classes - 1);
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    const auto k = static_cast<std::uint32_t>(i % spec.n_classes);
    labels[i] = k;
    for (std::size_t d = 0; d < spec.n_dims; ++d) {
      double mean = 0.0;
      if (d < n_inf) mean = centre[d] + (static_cast<double>(k) - mid_class) * spec.separation;
      const double v = mean + spec.noise * standard_normal(rng);
      values[i * spec.n_dims + d] = static_cast<float>(std::clamp(v, -1.0, 1.0));
    }
  }
  return {EmbeddingMatrix(spec.n_samples, spec.n_dims, std::move(values)),
          LabelVector(std::move(labels), spec.n_classes)};
}

}  // namespace barcoder
