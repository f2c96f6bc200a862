#include "barcoder/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace barcoder {

void RunResults::add(std::string name, std::vector<double> values) {
  names.push_back(std::move(name));
  scores.push_back(std::move(values));
}

std::vector<double> midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double chi_square_upper_tail(double x, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi-square needs positive degrees of freedom");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

double normal_two_sided_p(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

namespace {

void check_groups(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw std::invalid_argument("need at least 2 groups");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].size() < 2) {
      throw std::invalid_argument("group " + std::to_string(g) + " has fewer than 2 observations");
    }
    for (double v : groups[g]) {
      if (!std::isfinite(v)) throw std::invalid_argument("group " + std::to_string(g) + " has a non-finite score");
    }
  }
}

struct Pooled {
  std::vector<double> ranks;        // pooled order: group 0 first, then group 1, ...
  std::vector<std::size_t> offset;  // start of each group in `ranks`
  double tie_sum = 0.0;             // sum over tie blocks of t^3 - t
  std::size_t n = 0;
};

double tie_term(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i + 1;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

Pooled pool(const std::vector<std::vector<double>>& groups) {
  Pooled p;
  std::vector<double> all;
  for (const auto& g : groups) {
    p.offset.push_back(all.size());
    all.insert(all.end(), g.begin(), g.end());
  }
  p.offset.push_back(all.size());
  p.n = all.size();
  p.ranks = midranks(all);
  p.tie_sum = tie_term(all);
  return p;
}

}  // namespace

KwResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  check_groups(groups);
  const Pooled p = pool(groups);
  const double n = static_cast<double>(p.n);

  KwResult r;
  r.degrees_of_freedom = groups.size() - 1;
  const double correction = 1.0 - p.tie_sum / (n * n * n - n);
  if (correction <= 0.0) {
    r.degenerate = true;
    r.warning = "all pooled values identical; tie correction is zero";
    return r;
  }
  double sum = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    double rank_sum = 0.0;
    for (std::size_t i = p.offset[g]; i < p.offset[g + 1]; ++i) rank_sum += p.ranks[i];
    sum += rank_sum * rank_sum / static_cast<double>(groups[g].size());
  }
  const double h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
  r.h_statistic = std::max(0.0, h);
  r.p_value = chi_square_upper_tail(r.h_statistic, static_cast<double>(r.degrees_of_freedom));
  return r;
}

std::string_view to_string(PosthocMethod method) {
  return method == PosthocMethod::dunn ? "dunn" : "rank-sum";
}

PosthocMethod parse_posthoc(std::string_view name) {
  if (name == "rank-sum" || name == "ranksum" || name == "mann-whitney") return PosthocMethod::rank_sum;
  if (name == "dunn") return PosthocMethod::dunn;
  throw std::invalid_argument("unknown post-hoc method '" + std::string(name) + "'");
}

namespace {

double rank_sum_p(std::span<const double> a, std::span<const double> b) {
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const std::vector<double> ranks = midranks(all);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += ranks[i];
  const double u = ra - na * (na + 1.0) / 2.0;
  const double mean = na * nb / 2.0;
  const double var = na * nb / 12.0 * ((n + 1.0) - tie_term(all) / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  return normal_two_sided_p((u - mean) / std::sqrt(var));
}

void holm_adjust(std::vector<double>& p_values, std::size_t k) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  std::stable_sort(pairs.begin(), pairs.end(), [&](const auto& x, const auto& y) {
    return p_values[x.first * k + x.second] < p_values[y.first * k + y.second];
  });
  const std::size_t m = pairs.size();
  double running = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const auto [i, j] = pairs[r];
    const double adj = std::min(1.0, static_cast<double>(m - r) * p_values[i * k + j]);
    running = std::max(running, adj);
    p_values[i * k + j] = running;
    p_values[j * k + i] = running;
  }
}

}  // namespace

PairwiseMatrix posthoc_pairwise(const std::vector<std::vector<double>>& groups,
                                const std::vector<std::string>& names, PosthocMethod method,
                                Adjustment adjustment) {
  check_groups(groups);
  if (names.size() != groups.size()) throw std::invalid_argument("one name per group required");
  const std::size_t k = groups.size();
  PairwiseMatrix out{names, std::vector<double>(k * k, 1.0)};

  Pooled p;
  double dunn_scale = 0.0;
  std::vector<double> mean_rank(k, 0.0);
  if (method == PosthocMethod::dunn) {
    p = pool(groups);
    const double n = static_cast<double>(p.n);
    dunn_scale = n * (n + 1.0) / 12.0 - p.tie_sum / (12.0 * (n - 1.0));
    for (std::size_t g = 0; g < k; ++g) {
      double s = 0.0;
      for (std::size_t i = p.offset[g]; i < p.offset[g + 1]; ++i) s += p.ranks[i];
      mean_rank[g] = s / static_cast<double>(groups[g].size());
    }
  }

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      double pv = 1.0;
      if (method == PosthocMethod::rank_sum) {
        pv = rank_sum_p(groups[i], groups[j]);
      } else if (dunn_scale > 0.0) {
        const double se = std::sqrt(dunn_scale * (1.0 / static_cast<double>(groups[i].size()) +
                                                  1.0 / static_cast<double>(groups[j].size())));
        pv = normal_two_sided_p((mean_rank[i] - mean_rank[j]) / se);
      }
      out.p_values[i * k + j] = pv;
      out.p_values[j * k + i] = pv;
    }
  }
  if (adjustment == Adjustment::holm) holm_adjust(out.p_values, k);
  return out;
}

double neglog10(double p) {
  return -std::log10(std::max(p, 1e-300));
}

HeatmapMatrix neglog10_matrix(const PairwiseMatrix& p) {
  HeatmapMatrix h{p.names, {}, {}};
  h.values.reserve(p.p_values.size());
  h.flags.reserve(p.p_values.size());
  for (double pv : p.p_values) {
    const double v = neglog10(pv);
    h.values.push_back(v == 0.0 ? 0.0 : v);  // -0 -> 0 for p = 1
    h.flags.push_back(v >= kHeatmapThreshold);
  }
  return h;
}

}  // namespace barcoder
