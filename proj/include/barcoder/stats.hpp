#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace barcoder {

inline constexpr double kSignificanceLevel = 0.05;
/// Heatmap cells at or above this -log10(p) are flagged (p = 0.05 gives 1.3010).
inline constexpr double kHeatmapThreshold = 1.30;

/// Named score lists, one per method, in report order.
struct RunResults {
  std::vector<std::string> names;
  std::vector<std::vector<double>> scores;

  void add(std::string name, std::vector<double> values);
  std::size_t size() const noexcept { return names.size(); }
};

struct KwResult {
  double h_statistic = 0.0;
  double p_value = 1.0;
  std::size_t degrees_of_freedom = 0;
  bool degenerate = false;
  std::string warning;
};

/// Mid-ranks (1-based, ties share their average rank).
std::vector<double> midranks(std::span<const double> values);

/// Upper tail P(X >= x) of a chi-square with `df` degrees of freedom.
double chi_square_upper_tail(double x, double df);

/// Two-sided standard-normal tail, 2 * P(Z >= |z|).
double normal_two_sided_p(double z);

/// Tie-corrected Kruskal-Wallis H with a chi-square(groups - 1) p-value.
/// Needs >= 2 groups of >= 2 finite observations each.
KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

enum class PosthocMethod { rank_sum, dunn };
enum class Adjustment { none, holm };

std::string_view to_string(PosthocMethod method);
PosthocMethod parse_posthoc(std::string_view name);

/// Symmetric method x method matrix of two-sided p-values, unit diagonal.
struct PairwiseMatrix {
  std::vector<std::string> names;
  std::vector<double> p_values;  // row-major size() x size()

  std::size_t size() const noexcept { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return p_values.at(i * size() + j); }
  bool significant(std::size_t i, std::size_t j) const { return at(i, j) < kSignificanceLevel; }
};

/// rank_sum: pairwise two-sample rank test (normal approximation, tie
/// correction, no continuity correction). dunn: z-test on mean ranks from the
/// pooled ranking of all groups.
PairwiseMatrix posthoc_pairwise(const std::vector<std::vector<double>>& groups,
                                const std::vector<std::string>& names,
                                PosthocMethod method = PosthocMethod::rank_sum,
                                Adjustment adjustment = Adjustment::none);

struct HeatmapMatrix {
  std::vector<std::string> names;
  std::vector<double> values;  // -log10(p), row-major
  std::vector<bool> flags;     // value >= kHeatmapThreshold

  std::size_t size() const noexcept { return names.size(); }
  double at(std::size_t i, std::size_t j) const { return values.at(i * size() + j); }
  bool flagged(std::size_t i, std::size_t j) const { return flags.at(i * size() + j); }
};

/// Element-wise -log10 with p clamped below at 1e-300.
double neglog10(double p);
HeatmapMatrix neglog10_matrix(const PairwiseMatrix& p);

}  // namespace barcoder
