#include "barcoder/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "barcoder/benchmark.hpp"
#include "barcoder/cs_optimizer.hpp"
#include "barcoder/evaluator.hpp"
#include "barcoder/io.hpp"
#include "barcoder/rng.hpp"
#include "barcoder/stats.hpp"
#include "barcoder/synth.hpp"
#include "barcoder/thresholders.hpp"

namespace barcoder {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags shared by several subcommands.
struct CommonOptions {
  std::uint64_t seed = 0;
  std::optional<std::size_t> maxiter;
  std::optional<std::size_t> max_nfe;
  std::string bounds = "-1,1";
  double val_fraction = 0.2;
  std::string posthoc = "rank-sum";
  std::string format = "auto";
};

void add_seed(CLI::App* app, CommonOptions& o) {
  app->add_option("--seed", o.seed, "Master RNG seed")->capture_default_str();
}
void add_search(CLI::App* app, CommonOptions& o) {
  app->add_option("--maxiter", o.maxiter, "Sweeps per coordinate-search run (required for searching methods)");
  app->add_option("--max-nfe", o.max_nfe, "Fitness-evaluation budget (default: samples x maxiter x 2)");
  app->add_option("--bounds", o.bounds, "Search bounds 'L,U' or 'minmax' for per-feature data range")
      ->capture_default_str();
}
void add_val(CLI::App* app, CommonOptions& o) {
  app->add_option("--val-fraction", o.val_fraction, "Validation fraction of each class")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
}
void add_format(CLI::App* app, CommonOptions& o, const char* help) {
  app->add_option("--format", o.format, help)->capture_default_str()->check(
      CLI::IsMember({"auto", "text", "csv", "binary", "bemb"}));
}

// Applies --maxiter/--max-nfe/--bounds to a search config.
CsConfig make_cs_config(const CommonOptions& o, const EmbeddingMatrix& matrix, bool need_maxiter,
                        std::ostream& err) {
  CsConfig cs;
  if (need_maxiter && !o.maxiter) throw UsageError("--maxiter is required for coordinate-search methods");
  if (o.maxiter) {
    if (*o.maxiter == 0) throw UsageError("--maxiter must be at least 1");
    cs.maxiter = *o.maxiter;
  }
  cs.max_nfe = o.max_nfe;
  cs.seed = o.seed;
  if (o.bounds == "minmax") {
    // Per-feature data range; a constant feature gets a unit-wide window.
    BoundsState b = BoundsState::uniform(matrix.n_dims(), 0.0, 0.0);
    for (std::size_t d = 0; d < matrix.n_dims(); ++d) {
      float lo = matrix(0, d), hi = matrix(0, d);
      for (std::size_t r = 1; r < matrix.n_samples(); ++r) {
        lo = std::min(lo, matrix(r, d));
        hi = std::max(hi, matrix(r, d));
      }
      b.lower[d] = lo;
      b.upper[d] = hi;
      if (!(hi > lo)) {
        b.lower[d] = lo - 0.5;
        b.upper[d] = hi + 0.5;
      }
    }
    cs.lower = *std::min_element(b.lower.begin(), b.lower.end());
    cs.upper = *std::max_element(b.upper.begin(), b.upper.end());
    cs.initial_bounds = std::move(b);
    return cs;
  }
  const auto comma = o.bounds.find(',');
  double lo = 0.0, hi = 0.0;
  const auto parse = [](std::string_view s, double& v) {
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    return r.ec == std::errc() && r.ptr == s.data() + s.size();
  };
  if (comma == std::string::npos || !parse(std::string_view(o.bounds).substr(0, comma), lo) ||
      !parse(std::string_view(o.bounds).substr(comma + 1), hi) || !(hi > lo) || !std::isfinite(lo) ||
      !std::isfinite(hi)) {
    throw UsageError("--bounds expects 'L,U' with L < U, or 'minmax'");
  }
  cs.lower = lo;
  cs.upper = hi;
  if (matrix.min_value() < lo || matrix.max_value() > hi) {
    err << "warning: data range [" << format_double(matrix.min_value()) << ", "
        << format_double(matrix.max_value()) << "] exceeds search bounds [" << format_double(lo) << ", "
        << format_double(hi) << "]; consider --bounds minmax\n";
  }
  return cs;
}

struct Dataset {
  EmbeddingMatrix matrix;
  std::optional<LabelVector> labels;
};

Dataset load_dataset(const std::string& path, const std::string& labels_path, const std::string& format,
                     std::ostream& err) {
  LoadedEmbeddings loaded = load_embeddings(path, parse_embedding_format(format));
  Dataset ds{std::move(loaded.matrix), std::move(loaded.labels)};
  if (!labels_path.empty()) ds.labels = load_labels(labels_path);
  if (ds.labels && ds.labels->size() != ds.matrix.n_samples()) {
    throw std::invalid_argument("label count " + std::to_string(ds.labels->size()) + " does not match " +
                                std::to_string(ds.matrix.n_samples()) + " samples");
  }
  for (const auto& w : loaded.warnings) {
    if (w.find("outside the default search bounds") == std::string::npos) err << "warning: " << w << '\n';
  }
  return ds;
}

const LabelVector& require_labels(const Dataset& ds) {
  if (!ds.labels) throw UsageError("labels required: add a 'label' column or pass --labels");
  return *ds.labels;
}

bool is_search_method(Method m) {
  return m == Method::cs_feature || m == Method::cs_global || m == Method::optimized_simple ||
         m == Method::optimized_otsu || m == Method::optimized_hybrid;
}

void write_metrics(std::ostream& out, const char* prefix, const EvalMetrics& m) {
  out << prefix << "accuracy " << format_double(m.accuracy) << '\n';
  out << prefix << "macro_f1 " << format_double(m.macro_f1) << '\n';
  for (std::size_t k = 0; k < m.per_class_f1.size(); ++k) {
    out << prefix << "f1_class_" << k << ' ' << format_double(m.per_class_f1[k]) << '\n';
  }
}

RunResults read_score_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path + " for reading");
  RunResults results;
  std::string line;
  std::size_t line_no = 0;
  auto cells_of = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) {
      c.erase(0, c.find_first_not_of(" \t"));
      c.erase(c.find_last_not_of(" \t\r") + 1);
      cells.push_back(c);
    }
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = cells_of(line);
    if (results.names.empty()) {
      for (const auto& c : cells) results.add(c, {});
      continue;
    }
    if (cells.size() > results.size()) {
      throw ParseError(path, "line " + std::to_string(line_no), "more cells than methods");
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[j].empty()) continue;
      double v = 0.0;
      const auto r = std::from_chars(cells[j].data(), cells[j].data() + cells[j].size(), v);
      if (r.ec != std::errc() || r.ptr != cells[j].data() + cells[j].size() || !std::isfinite(v)) {
        throw ParseError(path, "line " + std::to_string(line_no) + ", column " + std::to_string(j + 1),
                         "bad score '" + cells[j] + "'");
      }
      results.scores[j].push_back(v);
    }
  }
  if (results.size() < 2) throw ParseError(path, "", "need a header with at least 2 methods");
  return results;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Per-feature threshold optimization for binary embedding barcodes", "barcoder"};
  app.require_subcommand(1);
  CommonOptions o;

  // synth
  SynthSpec synth;
  std::string synth_out, synth_labels_out;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a labelled synthetic embedding file");
  synth_cmd->add_option("--samples", synth.n_samples)->capture_default_str();
  synth_cmd->add_option("--dims", synth.n_dims)->capture_default_str();
  synth_cmd->add_option("--classes", synth.n_classes)->capture_default_str();
  synth_cmd->add_option("--separation", synth.separation)->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise)->capture_default_str();
  synth_cmd->add_option("--informative", synth.informative_fraction, "Fraction of informative dimensions")
      ->capture_default_str();
  synth_cmd->add_option("--cut-spread", synth.cut_spread, "Spread of per-dimension class centres")
      ->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output embedding file")->required();
  synth_cmd->add_option("--labels-out", synth_labels_out, "Also write labels, one per line");
  add_seed(synth_cmd, o);
  add_format(synth_cmd, o, "Output format: text (with label column) or binary");

  // binarize
  std::string bin_input, bin_thresholds, bin_method, bin_out;
  auto* bin_cmd = app.add_subcommand("binarize", "Turn embeddings into a barcode file");
  bin_cmd->add_option("--input", bin_input, "Embedding file")->required();
  auto* thr_opt = bin_cmd->add_option("--thresholds", bin_thresholds, "Threshold file, one cut-point per dimension");
  auto* meth_opt = bin_cmd->add_option("--method", bin_method, "Baseline instead of a threshold file")
                       ->check(CLI::IsMember({"simple", "minmax", "otsu", "hybrid"}));
  thr_opt->excludes(meth_opt);
  bin_cmd->add_option("--out", bin_out, "Barcode file")->required();
  add_format(bin_cmd, o, "Embedding input format");

  // optimize
  std::string opt_input, opt_labels, opt_method = "cs-feature", opt_out, opt_trace;
  bool opt_literal = false;
  double opt_window = 0.5, opt_simple_cut = 0.0;
  std::size_t opt_bins = 256;
  auto* opt_cmd = app.add_subcommand("optimize", "Find thresholds and write a threshold file");
  opt_cmd->add_option("--input", opt_input, "Embedding file")->required();
  opt_cmd->add_option("--labels", opt_labels, "Label file (overrides a label column)");
  opt_cmd->add_option("--method", opt_method)
      ->capture_default_str()
      ->check(CLI::IsMember({"cs-feature", "cs-global", "simple", "otsu", "hybrid", "optimized-simple",
                             "optimized-otsu", "optimized-hybrid"}));
  opt_cmd->add_option("--out", opt_out, "Threshold file")->required();
  opt_cmd->add_option("--trace", opt_trace, "Write the search trace as JSON lines");
  opt_cmd->add_flag("--no-reset-bounds", opt_literal, "Carry shrunken bounds across restarts");
  opt_cmd->add_option("--window", opt_window, "Half-width of the scalar refinement window")->capture_default_str();
  opt_cmd->add_option("--simple-cut", opt_simple_cut, "Cut-point of the simple baseline")->capture_default_str();
  opt_cmd->add_option("--otsu-bins", opt_bins)->capture_default_str();
  add_seed(opt_cmd, o);
  add_search(opt_cmd, o);
  add_val(opt_cmd, o);
  add_format(opt_cmd, o, "Embedding input format");

  // evaluate
  std::string ev_input, ev_barcodes, ev_thresholds, ev_labels, ev_model;
  double ev_test = 0.0;
  auto* ev_cmd = app.add_subcommand("evaluate", "Train and score a classifier on a seeded split");
  auto* ev_in = ev_cmd->add_option("--input", ev_input, "Embedding file (real-valued unless --thresholds)");
  auto* ev_bc = ev_cmd->add_option("--barcodes", ev_barcodes, "Barcode file");
  ev_in->excludes(ev_bc);
  ev_cmd->add_option("--thresholds", ev_thresholds, "Binarize --input with this threshold file")->needs(ev_in);
  ev_cmd->add_option("--labels", ev_labels, "Label file (required with --barcodes)");
  ev_cmd->add_option("--test-fraction", ev_test, "Held-out test fraction")->capture_default_str();
  ev_cmd->add_option("--model-out", ev_model, "Write the trained weights");
  add_seed(ev_cmd, o);
  add_val(ev_cmd, o);
  add_format(ev_cmd, o, "Embedding input format");

  // benchmark
  std::string bm_input, bm_labels, bm_methods = "all", bm_out, bm_name, bm_metric = "accuracy";
  std::size_t bm_runs = 15;
  double bm_test = 0.0;
  bool bm_holm = false, bm_svg = false, bm_literal = false;
  auto* bm_cmd = app.add_subcommand("benchmark", "Compare thresholding methods over repeated seeded runs");
  bm_cmd->add_option("--input", bm_input, "Embedding file")->required();
  bm_cmd->add_option("--labels", bm_labels, "Label file (overrides a label column)");
  bm_cmd->add_option("--methods", bm_methods, "Comma-separated methods or 'all'")->capture_default_str();
  bm_cmd->add_option("--runs", bm_runs)->capture_default_str();
  bm_cmd->add_option("--out-dir", bm_out, "Report directory")->required();
  bm_cmd->add_option("--name", bm_name, "Dataset name in the report");
  bm_cmd->add_option("--test-fraction", bm_test)->capture_default_str();
  bm_cmd->add_option("--stats-metric", bm_metric)->capture_default_str()->check(CLI::IsMember({"accuracy", "macro-f1"}));
  bm_cmd->add_flag("--holm", bm_holm, "Holm-adjust pairwise p-values");
  bm_cmd->add_flag("--svg", bm_svg, "Also render heatmap.svg");
  bm_cmd->add_flag("--no-reset-bounds", bm_literal, "Carry shrunken bounds across restarts");
  bm_cmd->add_option("--posthoc", o.posthoc)->capture_default_str()->check(CLI::IsMember({"rank-sum", "dunn"}));
  add_seed(bm_cmd, o);
  add_search(bm_cmd, o);
  add_val(bm_cmd, o);
  add_format(bm_cmd, o, "Embedding input format");

  // stats
  std::string st_input, st_out;
  bool st_holm = false;
  auto* st_cmd = app.add_subcommand("stats", "Kruskal-Wallis and pairwise tests on score lists");
  st_cmd->add_option("--input", st_input, "CSV: header of method names, one run per row")->required();
  st_cmd->add_option("--out-dir", st_out, "Also write CSV matrices here");
  st_cmd->add_option("--posthoc", o.posthoc)->capture_default_str()->check(CLI::IsMember({"rank-sum", "dunn"}));
  st_cmd->add_flag("--holm", st_holm, "Holm-adjust pairwise p-values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth_cmd) {
      synth.seed = o.seed;
      const auto [matrix, labels] = generate_synthetic(synth);
      const EmbeddingFormat fmt = parse_embedding_format(o.format);
      save_embeddings(synth_out, matrix, &labels, fmt == EmbeddingFormat::binary ? fmt : EmbeddingFormat::text);
      if (!synth_labels_out.empty()) save_labels(synth_labels_out, labels);
      out << "wrote " << matrix.n_samples() << " x " << matrix.n_dims() << " embeddings to " << synth_out << '\n';
    } else if (*bin_cmd) {
      const Dataset ds = load_dataset(bin_input, "", o.format, err);
      BinaryMatrix binary(0, 0);
      if (!bin_thresholds.empty()) {
        binary = binarize(ds.matrix, load_thresholds(bin_thresholds));
      } else if (bin_method == "minmax") {
        binary = minmax_binarize(ds.matrix);
      } else if (bin_method == "simple") {
        binary = binarize(ds.matrix, simple_threshold());
      } else if (bin_method == "otsu") {
        binary = binarize(ds.matrix, otsu_threshold(ds.matrix));
      } else if (bin_method == "hybrid") {
        binary = binarize(ds.matrix, hybrid_threshold(ds.matrix));
      } else {
        throw UsageError("binarize needs --thresholds or --method");
      }
      save_barcodes(binary, bin_out);
      const Footprint fp = packed_footprint(binary);
      out << "wrote " << binary.n_samples() << " x " << binary.n_dims() << " barcodes to " << bin_out
          << " (packed payload " << fp.payload_bytes << " bytes)\n";
    } else if (*opt_cmd) {
      const Dataset ds = load_dataset(opt_input, opt_labels, o.format, err);
      const Method method = parse_method(opt_method);
      const std::size_t n = ds.matrix.n_samples();
      const std::size_t d = ds.matrix.n_dims();
      std::vector<std::string> header = {"method " + opt_method, "seed " + std::to_string(o.seed),
                                         "dims " + std::to_string(d)};
      std::optional<ThresholdVector> result;
      std::optional<OptimizationTrace> trace;
      if (!is_search_method(method)) {
        GlobalThreshold g = method == Method::otsu     ? otsu_threshold(ds.matrix, opt_bins)
                            : method == Method::hybrid ? hybrid_threshold(ds.matrix)
                                                       : simple_threshold(opt_simple_cut);
        if (!g.warning.empty()) err << "warning: " << g.warning << '\n';
        header.push_back("cut " + format_double(g.value) +
                         (g.comparison == Comparison::greater ? " (strict, stored as next double up)" : ""));
        result = g.expand(d);
      } else {
        const LabelVector& labels = require_labels(ds);
        CsConfig cs = make_cs_config(o, ds.matrix, true, err);
        cs.reset_bounds_per_run = !opt_literal;
        const SplitIndices split = stratified_split(labels, o.val_fraction, derive_seed(o.seed, 0));
        const ClassifierFitness fitness(ds.matrix, labels, split);
        cs.seed = derive_seed(o.seed, 1);
        header.push_back("maxiter " + std::to_string(cs.maxiter) + " max_nfe " +
                         (cs.max_nfe ? std::to_string(*cs.max_nfe) : std::string("auto")) + " bounds " + o.bounds +
                         " reset_bounds " + (cs.reset_bounds_per_run ? "1" : "0"));
        header.push_back("val_fraction " + format_double(o.val_fraction));
        double fit = 0.0;
        if (method == Method::cs_feature) {
          FeatureSearchResult r = optimize_feature_thresholds(d, n, fitness, cs);
          fit = r.fitness;
          result = std::move(r.thresholds);
          trace = std::move(r.trace);
        } else if (method == Method::cs_global) {
          GlobalSearchResult r = optimize_global_threshold(d, n, fitness, cs);
          fit = r.fitness;
          result = r.threshold.expand(d);
          trace = std::move(r.trace);
        } else {
          const GlobalThreshold start = method == Method::optimized_otsu     ? otsu_threshold(ds.matrix, opt_bins)
                                        : method == Method::optimized_hybrid ? hybrid_threshold(ds.matrix)
                                                                             : simple_threshold(opt_simple_cut);
          RefineResult r = refine_scalar(start, d, fitness, cs, opt_window);
          fit = r.fitness;
          header.push_back("start " + format_double(start.value) + " start_fitness " + format_double(r.start_fitness));
          result = r.threshold.expand(d);
          trace = std::move(r.trace);
        }
        header.push_back("validation_macro_f1 " + format_double(fit));
        out << "validation macro_f1 " << format_double(fit) << '\n';
        if (trace) out << "fitness evaluations " << trace->evaluations << '\n';
      }
      save_thresholds(opt_out, *result, header);
      if (!opt_trace.empty()) {
        if (!trace) throw UsageError("--trace needs a searching method");
        std::ofstream tf(opt_trace, std::ios::binary | std::ios::trunc);
        if (!tf) throw std::runtime_error("cannot open " + opt_trace + " for writing");
        write_trace_jsonl(tf, *trace);
      }
      out << "wrote " << d << " thresholds to " << opt_out << '\n';
    } else if (*ev_cmd) {
      std::optional<Dataset> ds;
      std::optional<BinaryMatrix> binary;
      LabelVector labels({0, 1}, 2);
      if (!ev_barcodes.empty()) {
        binary = load_barcodes(ev_barcodes);
        if (ev_labels.empty()) throw UsageError("--barcodes needs --labels");
        labels = load_labels(ev_labels);
        if (labels.size() != binary->n_samples()) throw std::invalid_argument("label count does not match barcode rows");
      } else if (!ev_input.empty()) {
        ds = load_dataset(ev_input, ev_labels, o.format, err);
        labels = require_labels(*ds);
        if (!ev_thresholds.empty()) binary = binarize(ds->matrix, load_thresholds(ev_thresholds));
      } else {
        throw UsageError("evaluate needs --input or --barcodes");
      }
      const SplitIndices split = stratified_split(labels, o.val_fraction, derive_seed(o.seed, 0), ev_test);
      const SplitMetrics m = binary ? evaluate_split(*binary, labels, split) : evaluate_split(ds->matrix, labels, split);
      out << "features " << (binary ? "binary" : "real") << '\n';
      write_metrics(out, "validation_", m.validation);
      if (m.test) write_metrics(out, "test_", *m.test);
      if (!ev_model.empty()) {
        const ClassifierModel model = binary ? train_logistic(*binary, labels, split.train_rows)
                                             : train_logistic(ds->matrix, labels, split.train_rows);
        std::ofstream mf(ev_model, std::ios::binary | std::ios::trunc);
        if (!mf) throw std::runtime_error("cannot open " + ev_model + " for writing");
        write_model(mf, model);
      }
    } else if (*bm_cmd) {
      const Dataset ds = load_dataset(bm_input, bm_labels, o.format, err);
      const LabelVector& labels = require_labels(ds);
      const std::vector<Method> methods = parse_method_list(bm_methods);
      const bool searching = std::any_of(methods.begin(), methods.end(), is_search_method);
      BenchmarkConfig cfg;
      cfg.runs = bm_runs;
      cfg.seed = o.seed;
      cfg.cs = make_cs_config(o, ds.matrix, searching, err);
      cfg.cs.reset_bounds_per_run = !bm_literal;
      cfg.validation_fraction = o.val_fraction;
      cfg.test_fraction = bm_test;
      cfg.posthoc = parse_posthoc(o.posthoc);
      cfg.adjustment = bm_holm ? Adjustment::holm : Adjustment::none;
      cfg.stats_metric = bm_metric == "accuracy" ? ScoreMetric::accuracy : ScoreMetric::macro_f1;
      cfg.dataset_name = bm_name.empty() ? std::filesystem::path(bm_input).stem().string() : bm_name;
      const BenchmarkReport report = run_benchmark(ds.matrix, labels, methods, cfg);
      write_report_files(report, bm_out, bm_svg);
      out << format_report_text(report);
    } else if (*st_cmd) {
      const RunResults results = read_score_table(st_input);
      const KwResult kw = kruskal_wallis(results.scores);
      const PairwiseMatrix p = posthoc_pairwise(results.scores, results.names, parse_posthoc(o.posthoc),
                                                st_holm ? Adjustment::holm : Adjustment::none);
      const HeatmapMatrix h = neglog10_matrix(p);
      if (kw.degenerate) err << "warning: " << kw.warning << '\n';
      out << "kruskal-wallis H = " << format_double(kw.h_statistic) << " df = " << kw.degrees_of_freedom
          << " p = " << format_double(kw.p_value) << '\n';
      out << "\npairwise p-values (" << to_string(parse_posthoc(o.posthoc)) << "):\n" << pairwise_csv(p);
      out << "\n-log10(p):\n" << heatmap_csv(h);
      if (!st_out.empty()) {
        std::filesystem::create_directories(st_out);
        std::ofstream(std::filesystem::path(st_out) / "kruskal_wallis.csv")
            << "h_statistic,degrees_of_freedom,p_value\n"
            << format_double(kw.h_statistic) << ',' << kw.degrees_of_freedom << ',' << format_double(kw.p_value) << '\n';
        std::ofstream(std::filesystem::path(st_out) / "pairwise_pvalues.csv") << pairwise_csv(p);
        std::ofstream(std::filesystem::path(st_out) / "neglog10_heatmap.csv") << heatmap_csv(h);
        std::ofstream(std::filesystem::path(st_out) / "heatmap_flags.csv") << heatmap_flags_csv(h);
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace barcoder
