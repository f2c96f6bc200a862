#include "barcoder/cs_optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "barcoder/rng.hpp"

namespace barcoder {

BoundsState BoundsState::uniform(std::size_t n_dims, double lower, double upper) {
  return {std::vector<double>(n_dims, lower), std::vector<double>(n_dims, upper)};
}

CandidatePair cs_candidates(const BoundsState& bounds, std::size_t dim) {
  if (dim >= bounds.size()) throw std::out_of_range("candidate dimension out of range");
  const double lo = bounds.lower[dim];
  const double hi = bounds.upper[dim];
  if (!(hi > lo)) {
    throw std::invalid_argument("collapsed interval for dimension " + std::to_string(dim));
  }
  const double q = 0.25 * (hi - lo);
  return {lo + q, hi - q};
}

void shrink(BoundsState& bounds, std::size_t dim, Winner winner) {
  if (dim >= bounds.size()) throw std::out_of_range("shrink dimension out of range");
  const double c = 0.5 * (bounds.lower[dim] + bounds.upper[dim]);
  if (winner == Winner::x) {
    bounds.upper[dim] = c;
  } else {
    bounds.lower[dim] = c;
  }
}

std::size_t compute_rmax(std::size_t n_samples, std::size_t n_dims, std::size_t maxiter,
                         std::optional<std::size_t> max_nfe) {
  if (n_samples == 0 || n_dims == 0 || maxiter == 0) {
    throw std::invalid_argument("compute_rmax: counts must be at least 1");
  }
  const std::size_t budget = max_nfe.value_or(n_samples * maxiter * 2);
  return std::max<std::size_t>(1, budget / (2 * n_dims * maxiter));
}

namespace {

using VectorFitness = std::function<double(const std::vector<double>&)>;

struct SearchOutcome {
  std::vector<double> best;
  double best_fitness;
  OptimizationTrace trace;
};

// Memoizes fitness by exact threshold vector. Identical vectors recur when a
// winner is re-evaluated at the end of a run or when restarts retrace a path.
class CachedFitness {
 public:
  CachedFitness(const VectorFitness& fitness, OptimizationTrace& trace)
      : fitness_(fitness), trace_(trace) {}

  double operator()(const std::vector<double>& point, std::size_t run) {
    ++trace_.evaluations;
    if (auto it = cache_.find(point); it != cache_.end()) {
      ++trace_.cache_hits;
      return it->second;
    }
    double value;
    try {
      value = fitness_(point);
    } catch (const std::exception& e) {
      throw FitnessError("run " + std::to_string(run) + " aborted: fitness evaluation failed: " +
                         e.what());
    }
    if (!std::isfinite(value)) {
      throw FitnessError("run " + std::to_string(run) + " aborted: non-finite fitness");
    }
    cache_.emplace(point, value);
    return value;
  }

 private:
  const VectorFitness& fitness_;
  OptimizationTrace& trace_;
  std::map<std::vector<double>, double> cache_;
};

SearchOutcome coordinate_search(const BoundsState& initial, std::size_t r_max,
                                const CsConfig& config, const VectorFitness& fitness) {
  const std::size_t n_dims = initial.size();
  if (config.maxiter == 0) throw std::invalid_argument("maxiter must be at least 1");
  for (std::size_t i = 0; i < n_dims; ++i) {
    if (!(initial.upper[i] > initial.lower[i])) {
      throw std::invalid_argument("initial bounds for dimension " + std::to_string(i) +
                                  " are empty");
    }
  }

  SearchOutcome out{std::vector<double>(n_dims, 0.0), -std::numeric_limits<double>::infinity(), {}};
  out.trace.n_dims = n_dims;
  out.trace.r_max = r_max;
  out.trace.maxiter = config.maxiter;
  out.trace.decisions.reserve(r_max * config.maxiter * n_dims);
  CachedFitness evaluate(fitness, out.trace);

  BoundsState bounds = initial;
  for (std::size_t run = 0; run < r_max; ++run) {
    if (run > 0 && config.reset_bounds_per_run) bounds = initial;

    std::vector<double> x(n_dims);
    for (std::size_t i = 0; i < n_dims; ++i) x[i] = bounds.center(i);
    std::vector<double> y = x;
    std::vector<double> s = x;

    Engine rng(derive_seed(config.seed, run));
    const std::vector<std::size_t> perm = random_permutation(n_dims, rng);

    for (std::size_t iter = 0; iter < config.maxiter; ++iter) {
      for (std::size_t i : perm) {
        const double lo = bounds.lower[i];
        const double hi = bounds.upper[i];
        // Same formulas as cs_candidates, without its collapse check: when
        // bounds are carried across runs the interval can shrink to one
        // double, and then both candidates coincide and Y wins.
        const double c = 0.5 * (lo + hi);
        const double q = 0.25 * (hi - lo);
        x[i] = lo + q;
        y[i] = hi - q;
        const double fx = evaluate(x, run);
        const double fy = evaluate(y, run);
        Winner winner;
        if (fx > fy) {
          winner = Winner::x;
          s = x;
          bounds.upper[i] = c;
        } else {
          winner = Winner::y;
          s = y;
          bounds.lower[i] = c;
        }
        out.trace.decisions.push_back(
            {run, iter, i, x[i], y[i], fx, fy, winner, bounds.lower[i], bounds.upper[i]});
        x = s;
        y = s;
      }
    }

    const double fs = evaluate(s, run);
    if (fs > out.best_fitness) {
      out.best = s;
      out.best_fitness = fs;
    }
    out.trace.runs.push_back({run, fs, out.best_fitness});
  }
  return out;
}

BoundsState resolve_bounds(const CsConfig& config, std::size_t n_dims) {
  if (config.initial_bounds) {
    if (config.initial_bounds->size() != n_dims ||
        config.initial_bounds->upper.size() != n_dims) {
      throw std::invalid_argument("initial bounds cover " +
                                  std::to_string(config.initial_bounds->size()) +
                                  " dimensions, expected " + std::to_string(n_dims));
    }
    return *config.initial_bounds;
  }
  return BoundsState::uniform(n_dims, config.lower, config.upper);
}

}  // namespace

FeatureSearchResult optimize_feature_thresholds(std::size_t n_dims, std::size_t n_samples,
                                                const FitnessFunction& fitness,
                                                const CsConfig& config) {
  const BoundsState initial = resolve_bounds(config, n_dims);
  const std::size_t r_max = compute_rmax(n_samples, n_dims, config.maxiter, config.max_nfe);
  const VectorFitness vf = [&](const std::vector<double>& v) { return fitness(ThresholdVector(v)); };
  SearchOutcome o = coordinate_search(initial, r_max, config, vf);
  return {ThresholdVector(std::move(o.best)), o.best_fitness, std::move(o.trace)};
}

GlobalSearchResult optimize_global_threshold(std::size_t n_dims, std::size_t n_samples,
                                             const FitnessFunction& fitness,
                                             const CsConfig& config) {
  if (n_dims == 0) throw std::invalid_argument("n_dims must be at least 1");
  double lo = config.lower;
  double hi = config.upper;
  if (config.initial_bounds) {
    lo = *std::min_element(config.initial_bounds->lower.begin(), config.initial_bounds->lower.end());
    hi = *std::max_element(config.initial_bounds->upper.begin(), config.initial_bounds->upper.end());
  }
  const std::size_t r_max = compute_rmax(n_samples, 1, config.maxiter, config.max_nfe);
  const VectorFitness vf = [&](const std::vector<double>& v) {
    return fitness(ThresholdVector::constant(n_dims, v[0]));
  };
  SearchOutcome o = coordinate_search(BoundsState::uniform(1, lo, hi), r_max, config, vf);
  GlobalThreshold t{o.best[0], ThresholdMethod::cs_global, Comparison::at_least, {}};
  return {std::move(t), o.best_fitness, std::move(o.trace)};
}

RefineResult refine_scalar(const GlobalThreshold& start, std::size_t n_dims,
                           const FitnessFunction& fitness, const CsConfig& config,
                           double half_width) {
  if (!std::isfinite(start.value)) throw std::invalid_argument("refine_scalar: start must be finite");
  if (!(half_width >= 0.0)) throw std::invalid_argument("refine_scalar: negative window");

  auto score = [&](double t) {
    GlobalThreshold g = start;
    g.value = t;
    const double f = fitness(g.expand(n_dims));
    if (!std::isfinite(f)) throw FitnessError("refine_scalar: non-finite fitness");
    return f;
  };

  RefineResult out{start, 0.0, 0.0, {}};
  out.start_fitness = score(start.value);
  out.fitness = out.start_fitness;
  out.trace.n_dims = 1;

  const double lo = std::max(start.value - half_width, config.lower);
  const double hi = std::min(start.value + half_width, config.upper);
  if (!(hi > lo)) return out;

  // Track the best of every point the search touches; strict > keeps the
  // start on ties.
  const VectorFitness vf = [&](const std::vector<double>& v) {
    const double f = score(v[0]);
    if (f > out.fitness) {
      out.fitness = f;
      out.threshold.value = v[0];
    }
    return f;
  };
  SearchOutcome o = coordinate_search(BoundsState::uniform(1, lo, hi), 1, config, vf);
  out.trace = std::move(o.trace);
  return out;
}

}  // namespace barcoder
