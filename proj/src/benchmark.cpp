#include "barcoder/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "barcoder/rng.hpp"
#include "barcoder/thresholders.hpp"

namespace barcoder {

namespace {

constexpr Method kAllMethods[] = {
    Method::simple,           Method::minmax,           Method::otsu,
    Method::hybrid,           Method::optimized_simple, Method::optimized_otsu,
    Method::optimized_hybrid, Method::cs_global,        Method::cs_feature,
    Method::real_valued_reference,
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

using Clock = std::chrono::steady_clock;

// Wraps a fitness to measure wall time per evaluation that reached the model.
struct TimedFitness {
  const ClassifierFitness& inner;
  std::size_t* calls;
  double* seconds;

  double operator()(const ThresholdVector& t) const {
    const auto start = Clock::now();
    const double f = inner(t);
    *seconds += std::chrono::duration<double>(Clock::now() - start).count();
    ++*calls;
    return f;
  }
};

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::simple: return "simple";
    case Method::minmax: return "minmax";
    case Method::otsu: return "otsu";
    case Method::hybrid: return "hybrid";
    case Method::optimized_simple: return "optimized-simple";
    case Method::optimized_otsu: return "optimized-otsu";
    case Method::optimized_hybrid: return "optimized-hybrid";
    case Method::cs_global: return "cs-global";
    case Method::cs_feature: return "cs-feature";
    case Method::real_valued_reference: return "real-valued-reference";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  if (name == "real") return Method::real_valued_reference;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> all_methods() { return {std::begin(kAllMethods), std::end(kAllMethods)}; }

std::vector<Method> parse_method_list(std::string_view list) {
  if (list == "all") return all_methods();
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string_view item = list.substr(start, comma == std::string_view::npos ? list.size() - start : comma - start);
    if (!item.empty()) {
      const Method m = parse_method(item);
      if (std::find(out.begin(), out.end(), m) != out.end()) {
        throw std::invalid_argument("method '" + std::string(item) + "' listed twice");
      }
      out.push_back(m);
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty method list");
  return out;
}

std::vector<double> MethodSummary::accuracies() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.accuracy);
  return v;
}

std::vector<double> MethodSummary::macro_f1s() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.macro_f1);
  return v;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

double sample_stddev(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

BenchmarkReport run_benchmark(const EmbeddingMatrix& matrix, const LabelVector& labels,
                              std::span<const Method> methods, const BenchmarkConfig& config) {
  if (config.runs < 2) throw std::invalid_argument("benchmark needs at least 2 runs");
  if (labels.size() != matrix.n_samples()) throw std::invalid_argument("labels do not match matrix rows");
  if (methods.empty()) throw std::invalid_argument("no methods selected");

  const std::size_t n = matrix.n_samples();
  const std::size_t d = matrix.n_dims();
  BenchmarkReport report;
  report.dataset = config.dataset_name;
  report.n_samples = n;
  report.n_dims = d;
  report.runs = config.runs;
  report.seed = config.seed;
  report.stats_metric = config.stats_metric;
  report.has_test = config.test_fraction > 0.0;

  // Unsupervised global cut-points only depend on the data.
  const GlobalThreshold simple = simple_threshold(config.simple_cut);
  const GlobalThreshold otsu = otsu_threshold(matrix, config.otsu_bins);
  const GlobalThreshold hybrid = hybrid_threshold(matrix);
  if (!otsu.warning.empty()) report.notes.push_back("otsu: " + otsu.warning);

  for (Method m : methods) {
    MethodSummary s{m, {}, {}, 0};
    s.footprint_bytes = m == Method::real_valued_reference ? real_footprint_bytes(n, d)
                                                           : packed_footprint(n, d).total_bytes();
    report.methods.push_back(std::move(s));
  }

  for (std::size_t run = 0; run < config.runs; ++run) {
    const std::uint64_t run_seed = derive_seed(config.seed, run);
    const SplitIndices split =
        stratified_split(labels, config.validation_fraction, derive_seed(run_seed, 0), config.test_fraction);
    const ClassifierFitness fitness(matrix, labels, split, config.train);
    CsConfig cs = config.cs;
    cs.seed = derive_seed(run_seed, 1);

    for (MethodSummary& summary : report.methods) {
      std::size_t calls = 0;
      double seconds = 0.0;
      const FitnessFunction timed = TimedFitness{fitness, &calls, &seconds};
      try {
        const auto start = Clock::now();
        SplitMetrics result;
        const auto refined = [&](const GlobalThreshold& g) {
          const RefineResult r = refine_scalar(g, d, timed, cs, config.refine_half_width);
          return evaluate_split(binarize(matrix, r.threshold), labels, split, config.train);
        };
        bool timed_directly = true;
        switch (summary.method) {
          case Method::simple:
            result = evaluate_split(binarize(matrix, simple), labels, split, config.train);
            break;
          case Method::minmax:
            result = evaluate_split(minmax_binarize(matrix), labels, split, config.train);
            break;
          case Method::otsu:
            result = evaluate_split(binarize(matrix, otsu), labels, split, config.train);
            break;
          case Method::hybrid:
            result = evaluate_split(binarize(matrix, hybrid), labels, split, config.train);
            break;
          case Method::optimized_simple:
            result = refined(simple);
            timed_directly = false;
            break;
          case Method::optimized_otsu:
            result = refined(otsu);
            timed_directly = false;
            break;
          case Method::optimized_hybrid:
            result = refined(hybrid);
            timed_directly = false;
            break;
          case Method::cs_global: {
            const GlobalSearchResult r = optimize_global_threshold(d, n, timed, cs);
            result = evaluate_split(binarize(matrix, r.threshold), labels, split, config.train);
            timed_directly = false;
            break;
          }
          case Method::cs_feature: {
            const FeatureSearchResult r = optimize_feature_thresholds(d, n, timed, cs);
            result = evaluate_split(binarize(matrix, r.thresholds), labels, split, config.train);
            timed_directly = false;
            break;
          }
          case Method::real_valued_reference:
            result = evaluate_split(matrix, labels, split, config.train);
            break;
        }
        if (timed_directly || calls == 0) {
          calls = 1;
          seconds = std::chrono::duration<double>(Clock::now() - start).count();
        }
        summary.runs.push_back({run, result.validation.accuracy, result.validation.macro_f1,
                                result.test ? std::optional<double>(result.test->accuracy) : std::nullopt,
                                1000.0 * seconds / static_cast<double>(calls)});
      } catch (const std::exception& e) {
        summary.failures.push_back("run " + std::to_string(run) + ": " + e.what());
      }
    }
  }

  RunResults scores;
  for (const MethodSummary& s : report.methods) {
    if (s.runs.size() < 2) {
      report.notes.push_back(std::string(to_string(s.method)) + " excluded from significance tests: fewer than 2 successful runs");
      continue;
    }
    scores.add(std::string(to_string(s.method)),
               config.stats_metric == ScoreMetric::accuracy ? s.accuracies() : s.macro_f1s());
  }
  if (scores.size() >= 2) {
    report.kruskal = kruskal_wallis(scores.scores);
    if (report.kruskal->degenerate) report.notes.push_back("kruskal-wallis: " + report.kruskal->warning);
    report.pairwise = posthoc_pairwise(scores.scores, scores.names, config.posthoc, config.adjustment);
    report.heatmap = neglog10_matrix(*report.pairwise);
  }
  return report;
}

std::string format_report_text(const BenchmarkReport& r) {
  std::ostringstream out;
  const char* metric = r.stats_metric == ScoreMetric::accuracy ? "accuracy" : "macro-F1";
  out << "dataset: " << r.dataset << " (" << r.n_samples << " samples x " << r.n_dims << " dims)\n";
  out << "runs: " << r.runs << "  master seed: " << r.seed << "\n";
  out << "scores: validation split" << (r.has_test ? "; test accuracy on a held-out test split" : "") << "\n\n";

  std::size_t width = 6;
  for (const auto& m : r.methods) width = std::max(width, to_string(m.method).size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %-17s  %-17s  %s%s\n", static_cast<int>(width), "method",
                "accuracy", "macro-F1", r.has_test ? "test accuracy      " : "", "bytes");
  out << line;
  for (const auto& m : r.methods) {
    std::string acc = "n/a", f1 = "n/a", test;
    if (!m.runs.empty()) {
      const auto a = m.accuracies();
      const auto f = m.macro_f1s();
      acc = fmt("%.4f", median(a)) + " ± " + fmt("%.4f", sample_stddev(a));
      f1 = fmt("%.4f", median(f)) + " ± " + fmt("%.4f", sample_stddev(f));
      if (r.has_test) {
        std::vector<double> t;
        for (const auto& s : m.runs) t.push_back(s.test_accuracy.value_or(0.0));
        test = fmt("%.4f", median(t)) + " ± " + fmt("%.4f", sample_stddev(t)) + "  ";
      }
    }
    std::snprintf(line, sizeof line, "%-*s  %-18s  %-18s  %s%zu\n", static_cast<int>(width),
                  std::string(to_string(m.method)).c_str(), acc.c_str(), f1.c_str(), test.c_str(),
                  m.footprint_bytes);
    out << line;
    for (const auto& f : m.failures) out << "  failure: " << f << "\n";
  }
  out << "\n";
  if (r.kruskal) {
    out << "kruskal-wallis on " << metric << ": H = " << fmt("%.4f", r.kruskal->h_statistic)
        << ", df = " << r.kruskal->degrees_of_freedom << ", p = " << fmt("%.6g", r.kruskal->p_value) << "\n";
  }
  if (r.pairwise) {
    out << "\npairwise p-values:\n" << pairwise_csv(*r.pairwise);
    out << "\n-log10(p) (* = at or above " << fmt("%.2f", kHeatmapThreshold) << "):\n";
    const HeatmapMatrix& h = *r.heatmap;
    for (std::size_t i = 0; i < h.size(); ++i) {
      out << h.names[i];
      for (std::size_t j = 0; j < h.size(); ++j) {
        out << ',' << fmt("%.3f", h.at(i, j)) << (h.flagged(i, j) ? "*" : "");
      }
      out << "\n";
    }
  }
  for (const auto& note : r.notes) out << "note: " << note << "\n";
  return out.str();
}

std::string pairwise_csv(const PairwiseMatrix& p) {
  std::ostringstream out;
  out << "method";
  for (const auto& n : p.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < p.size(); ++i) {
    out << p.names[i];
    for (std::size_t j = 0; j < p.size(); ++j) out << ',' << fmt("%.6e", p.at(i, j));
    out << '\n';
  }
  return out.str();
}

std::string heatmap_csv(const HeatmapMatrix& h) {
  std::ostringstream out;
  out << "method";
  for (const auto& n : h.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << h.names[i];
    for (std::size_t j = 0; j < h.size(); ++j) out << ',' << fmt("%.4f", h.at(i, j));
    out << '\n';
  }
  return out.str();
}

std::string heatmap_flags_csv(const HeatmapMatrix& h) {
  std::ostringstream out;
  out << "method";
  for (const auto& n : h.names) out << ',' << n;
  out << '\n';
  for (std::size_t i = 0; i < h.size(); ++i) {
    out << h.names[i];
    for (std::size_t j = 0; j < h.size(); ++j) out << ',' << (h.flagged(i, j) ? 1 : 0);
    out << '\n';
  }
  return out.str();
}

std::string heatmap_svg(const HeatmapMatrix& h) {
  // Lower triangle only, like the usual post-hoc heatmap layout.
  const int cell = 48;
  const int label = 170;
  const int k = static_cast<int>(h.size());
  double vmax = kHeatmapThreshold;
  for (double v : h.values) vmax = std::max(vmax, v);
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << label + k * cell + 10 << "\" height=\""
      << label + k * cell + 10 << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i < k; ++i) {
    out << "<text x=\"" << label - 6 << "\" y=\"" << label + i * cell + cell / 2 + 4
        << "\" text-anchor=\"end\">" << h.names[static_cast<std::size_t>(i)] << "</text>\n";
    out << "<text transform=\"translate(" << label + i * cell + cell / 2 + 4 << "," << label - 6
        << ") rotate(-60)\">" << h.names[static_cast<std::size_t>(i)] << "</text>\n";
    for (int j = 0; j <= i; ++j) {
      const double v = h.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      const int shade = 255 - static_cast<int>(std::lround(200.0 * std::min(1.0, v / vmax)));
      out << "<rect x=\"" << label + j * cell << "\" y=\"" << label + i * cell << "\" width=\"" << cell
          << "\" height=\"" << cell << "\" fill=\"rgb(255," << shade << "," << shade << ")\" stroke=\""
          << (h.flagged(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) ? "black" : "#ccc")
          << "\"/>\n";
      out << "<text x=\"" << label + j * cell + cell / 2 << "\" y=\"" << label + i * cell + cell / 2 + 4
          << "\" text-anchor=\"middle\">" << fmt("%.2f", v) << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

void write_report_files(const BenchmarkReport& r, const std::filesystem::path& dir, bool svg) {
  std::filesystem::create_directories(dir);
  write_file(dir / "report.txt", format_report_text(r));

  std::ostringstream summary;
  summary << "method,runs,failures,accuracy_median,accuracy_std,macro_f1_median,macro_f1_std";
  if (r.has_test) summary << ",test_accuracy_median,test_accuracy_std";
  summary << ",footprint_bytes\n";
  std::ostringstream runs;
  runs << "method,run,accuracy,macro_f1" << (r.has_test ? ",test_accuracy" : "") << '\n';
  std::ostringstream timing;
  timing << "method,median_ms_per_fitness_evaluation\n";
  for (const auto& m : r.methods) {
    const std::string name(to_string(m.method));
    summary << name << ',' << m.runs.size() << ',' << m.failures.size();
    if (m.runs.empty()) {
      summary << ",,,,";
      if (r.has_test) summary << ",,";
    } else {
      const auto a = m.accuracies();
      const auto f = m.macro_f1s();
      summary << ',' << fmt("%.6f", median(a)) << ',' << fmt("%.6f", sample_stddev(a)) << ','
              << fmt("%.6f", median(f)) << ',' << fmt("%.6f", sample_stddev(f));
      if (r.has_test) {
        std::vector<double> t;
        for (const auto& s : m.runs) t.push_back(s.test_accuracy.value_or(0.0));
        summary << ',' << fmt("%.6f", median(t)) << ',' << fmt("%.6f", sample_stddev(t));
      }
      std::vector<double> ms;
      for (const auto& s : m.runs) ms.push_back(s.ms_per_evaluation);
      timing << name << ',' << fmt("%.4f", median(ms)) << '\n';
    }
    summary << ',' << m.footprint_bytes << '\n';
    for (const auto& s : m.runs) {
      runs << name << ',' << s.run << ',' << fmt("%.6f", s.accuracy) << ',' << fmt("%.6f", s.macro_f1);
      if (r.has_test) runs << ',' << fmt("%.6f", s.test_accuracy.value_or(0.0));
      runs << '\n';
    }
  }
  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "runs.csv", runs.str());
  write_file(dir / "timing.csv", timing.str());

  std::ostringstream kw;
  kw << "metric,h_statistic,degrees_of_freedom,p_value\n";
  if (r.kruskal) {
    kw << (r.stats_metric == ScoreMetric::accuracy ? "accuracy" : "macro_f1") << ','
       << fmt("%.6f", r.kruskal->h_statistic) << ',' << r.kruskal->degrees_of_freedom << ','
       << fmt("%.6e", r.kruskal->p_value) << '\n';
  }
  write_file(dir / "kruskal_wallis.csv", kw.str());
  if (r.pairwise) {
    write_file(dir / "pairwise_pvalues.csv", pairwise_csv(*r.pairwise));
    write_file(dir / "neglog10_heatmap.csv", heatmap_csv(*r.heatmap));
    write_file(dir / "heatmap_flags.csv", heatmap_flags_csv(*r.heatmap));
    if (svg) write_file(dir / "heatmap.svg", heatmap_svg(*r.heatmap));
  }
}

}  // namespace barcoder
