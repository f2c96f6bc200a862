#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "barcoder/core_types.hpp"
#include "barcoder/thresholders.hpp"

namespace barcoder {

/// Scores a full threshold vector; larger is better. Must be deterministic
/// and reentrant. The optimizer treats a non-finite return as an error.
using FitnessFunction = std::function<double(const ThresholdVector&)>;

/// Raised when a fitness evaluation throws or returns a non-finite value.
class FitnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-dimension search interval [lower[i], upper[i]].
struct BoundsState {
  std::vector<double> lower;
  std::vector<double> upper;

  static BoundsState uniform(std::size_t n_dims, double lower = -1.0, double upper = 1.0);

  std::size_t size() const noexcept { return lower.size(); }
  double width(std::size_t dim) const { return upper.at(dim) - lower.at(dim); }
  double center(std::size_t dim) const { return 0.5 * (lower.at(dim) + upper.at(dim)); }
};

/// Quarter points of the active interval: the centres of its two halves.
struct CandidatePair {
  double x_value;
  double y_value;
};

enum class Winner { x, y };

/// x = L + (U-L)/4, y = U - (U-L)/4. Rejects a collapsed interval (U <= L).
CandidatePair cs_candidates(const BoundsState& bounds, std::size_t dim);

/// X won: U <- (L+U)/2. Y won: L <- (L+U)/2. Other dimensions are untouched.
void shrink(BoundsState& bounds, std::size_t dim, Winner winner);

/// R_max = max(1, floor(MaxNFE / (2 * n_dims * maxiter))), with
/// MaxNFE = n_samples * maxiter * 2 when max_nfe is not given.
std::size_t compute_rmax(std::size_t n_samples, std::size_t n_dims, std::size_t maxiter,
                         std::optional<std::size_t> max_nfe = std::nullopt);

struct CsConfig {
  std::size_t maxiter = 10;
  std::optional<std::size_t> max_nfe;  // nullopt = auto
  double lower = -1.0;
  double upper = 1.0;
  /// Per-dimension bounds; overrides lower/upper when set.
  std::optional<BoundsState> initial_bounds;
  /// Restart every run from the initial bounds. When false, later runs
  /// continue from the bounds the previous run shrank to.
  bool reset_bounds_per_run = true;
  std::uint64_t seed = 0;
};

struct DecisionRecord {
  std::size_t run;
  std::size_t iteration;
  std::size_t dim;
  double x_value;
  double y_value;
  double x_fitness;
  double y_fitness;
  Winner winner;
  double lower;  // bounds of `dim` after the decision
  double upper;
};

struct RunRecord {
  std::size_t run;
  double final_fitness;
  double best_fitness;  // best over runs 0..run
};

struct OptimizationTrace {
  std::size_t n_dims = 0;
  std::size_t r_max = 0;
  std::size_t maxiter = 0;
  std::vector<DecisionRecord> decisions;
  std::vector<RunRecord> runs;
  /// Logical fitness evaluations, including those answered from the cache.
  std::size_t evaluations = 0;
  std::size_t cache_hits = 0;
};

struct FeatureSearchResult {
  ThresholdVector thresholds;
  double fitness;
  OptimizationTrace trace;
};

/// Per-feature coordinate search over thresholds (one cut-point per dimension).
///
/// Runs R_max restarts. Each run draws a fresh permutation of the dimensions
/// and performs `maxiter` sweeps; every visit evaluates the two quarter-point
/// candidates of the active dimension, keeps the better one (ties go to Y),
/// halves that dimension's interval toward the winner and carries the winner
/// into both working vectors. The final vector of each run is evaluated once
/// more and the best across runs is returned.
///
/// `n_samples` only enters the automatic R_max budget.
FeatureSearchResult optimize_feature_thresholds(std::size_t n_dims, std::size_t n_samples,
                                                const FitnessFunction& fitness,
                                                const CsConfig& config);

struct GlobalSearchResult {
  GlobalThreshold threshold;
  double fitness;
  OptimizationTrace trace;
};

/// Same halving search on one scalar shared by all `n_dims` features.
/// Bookkeeping (R_max, trace) uses a single dimension.
GlobalSearchResult optimize_global_threshold(std::size_t n_dims, std::size_t n_samples,
                                             const FitnessFunction& fitness,
                                             const CsConfig& config);

struct RefineResult {
  GlobalThreshold threshold;
  double fitness;
  double start_fitness;
  OptimizationTrace trace;
};

/// 1-D search in [start - half_width, start + half_width] clipped to the
/// configured bounds, keeping the start's method and comparison rule. Returns
/// the best point evaluated, the start included, so the result never scores
/// below the start. A zero-width window returns the start unchanged.
RefineResult refine_scalar(const GlobalThreshold& start, std::size_t n_dims,
                           const FitnessFunction& fitness, const CsConfig& config,
                           double half_width = 0.5);

}  // namespace barcoder
