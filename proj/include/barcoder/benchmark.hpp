#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "barcoder/core_types.hpp"
#include "barcoder/cs_optimizer.hpp"
#include "barcoder/evaluator.hpp"
#include "barcoder/stats.hpp"

namespace barcoder {

enum class Method {
  simple,
  minmax,
  otsu,
  hybrid,
  optimized_simple,
  optimized_otsu,
  optimized_hybrid,
  cs_global,
  cs_feature,
  real_valued_reference,
};

std::string_view to_string(Method method);
Method parse_method(std::string_view name);
/// All ten methods in report order.
std::vector<Method> all_methods();
/// Comma-separated names, or "all".
std::vector<Method> parse_method_list(std::string_view list);

enum class ScoreMetric { accuracy, macro_f1 };

struct BenchmarkConfig {
  std::size_t runs = 15;
  std::uint64_t seed = 0;
  CsConfig cs;  // cs.seed is ignored; each run derives its own
  TrainConfig train;
  double validation_fraction = 0.2;
  double test_fraction = 0.0;
  double simple_cut = 0.0;
  std::size_t otsu_bins = 256;
  double refine_half_width = 0.5;
  PosthocMethod posthoc = PosthocMethod::rank_sum;
  Adjustment adjustment = Adjustment::none;
  ScoreMetric stats_metric = ScoreMetric::accuracy;
  std::string dataset_name = "dataset";
};

struct RunScore {
  std::size_t run;
  double accuracy;
  double macro_f1;
  std::optional<double> test_accuracy;
  double ms_per_evaluation;
};

struct MethodSummary {
  Method method;
  std::vector<RunScore> runs;         // successful runs only
  std::vector<std::string> failures;  // "run r: message"
  std::size_t footprint_bytes = 0;    // packed barcode (header included) or float32 size

  std::vector<double> accuracies() const;
  std::vector<double> macro_f1s() const;
};

struct BenchmarkReport {
  std::string dataset;
  std::size_t n_samples = 0;
  std::size_t n_dims = 0;
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  ScoreMetric stats_metric = ScoreMetric::accuracy;
  bool has_test = false;
  std::vector<MethodSummary> methods;
  std::optional<KwResult> kruskal;          // absent with < 2 usable methods
  std::optional<PairwiseMatrix> pairwise;
  std::optional<HeatmapMatrix> heatmap;
  std::vector<std::string> notes;
};

double median(std::vector<double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
double sample_stddev(std::span<const double> values);

/// Runs every method `config.runs` times. Run r uses seed derive_seed(seed, r)
/// for its split and its permutations, shared by all methods, so method
/// scores within a run are paired. Per-run failures are recorded, not thrown.
BenchmarkReport run_benchmark(const EmbeddingMatrix& matrix, const LabelVector& labels,
                              std::span<const Method> methods, const BenchmarkConfig& config);

std::string format_report_text(const BenchmarkReport& report);

/// Writes report.txt, summary.csv, runs.csv, kruskal_wallis.csv,
/// pairwise_pvalues.csv, neglog10_heatmap.csv and heatmap_flags.csv, all
/// deterministic for a fixed input and seed. Wall-clock timing goes to
/// timing.csv, which is the one file that varies between identical runs.
/// heatmap.svg is added when `svg` is set.
void write_report_files(const BenchmarkReport& report, const std::filesystem::path& dir, bool svg = false);

std::string pairwise_csv(const PairwiseMatrix& p);
std::string heatmap_csv(const HeatmapMatrix& h);
std::string heatmap_flags_csv(const HeatmapMatrix& h);
std::string heatmap_svg(const HeatmapMatrix& h);

}  // namespace barcoder
