// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "barcoder/benchmark.hpp"
#include "barcoder/cli.hpp"
#include "barcoder/core_types.hpp"
#include "barcoder/cs_optimizer.hpp"
#include "barcoder/evaluator.hpp"
#include "barcoder/io.hpp"
#include "barcoder/rng.hpp"
#include "barcoder/stats.hpp"
#include "barcoder/synth.hpp"
#include "barcoder/thresholders.hpp"
#include "test_util.hpp"

using namespace barcoder;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v{false, ""};
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::printf("criterion %2d %-34s %s  (%.2fs)  %s\n", id, name.c_str(), v.pass ? "PASS" : "FAIL", secs,
              v.detail.c_str());
  std::fflush(stdout);
}

double ulps_apart(double a, double b) { return std::abs(a - b) / (std::nextafter(b, INFINITY) - b); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

// Shared synthetic benchmark for criteria 5, 6 and 12.
constexpr std::size_t kSeeds = 10;
constexpr std::size_t kRunsPerSeed = 5;
constexpr std::size_t kMaxiter = 4;
constexpr std::size_t kMaxNfe = 2 * 24 * kMaxiter;  // R_max = 1 for cs-feature

SynthSpec acceptance_spec(std::uint64_t seed) {
  SynthSpec s;
  s.n_samples = 600;
  s.n_dims = 24;
  s.n_classes = 2;
  s.informative_fraction = 8.0 / 24.0;
  s.seed = seed;
  return s;
}

BenchmarkConfig acceptance_config(std::uint64_t seed) {
  BenchmarkConfig c;
  c.runs = kRunsPerSeed;
  c.seed = seed;
  c.cs.maxiter = kMaxiter;
  c.cs.max_nfe = kMaxNfe;
  c.stats_metric = ScoreMetric::macro_f1;
  return c;
}

const MethodSummary& summary_of(const BenchmarkReport& r, Method m) {
  for (const auto& s : r.methods) {
    if (s.method == m) return s;
  }
  throw std::runtime_error("method missing from report");
}

std::vector<BenchmarkReport>& acceptance_reports() {
  static std::vector<BenchmarkReport> reports = [] {
    std::vector<BenchmarkReport> out;
    const std::vector<Method> methods = all_methods();
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
      const auto [m, y] = generate_synthetic(acceptance_spec(1000 + seed));
      out.push_back(run_benchmark(m, y, methods, acceptance_config(seed)));
    }
    return out;
  }();
  return reports;
}

Verdict criterion1() {
  Engine rng(1);
  double worst = 0.0;
  std::size_t checks = 0;
  for (int seq = 0; seq < 50; ++seq) {
    BoundsState b = BoundsState::uniform(16);
    std::vector<int> visits(16, 0);
    for (int step = 0; step < 400; ++step) {
      const std::size_t d = uniform_index(rng, 16);
      shrink(b, d, uniform01(rng) < 0.5 ? Winner::x : Winner::y);
      const double expect = std::ldexp(1.0, 1 - ++visits[d]);
      worst = std::max(worst, ulps_apart(b.width(d), expect));
      ++checks;
    }
  }
  // the same law inside the optimizer's recorded decisions
  CsConfig c;
  c.maxiter = 12;
  c.max_nfe = 2 * 16 * 12 * 3;
  const auto r = optimize_feature_thresholds(
      16, 16, [](const ThresholdVector& s) { return std::sin(5 * s[0]) + s[3] * s[7] - s[11]; }, c);
  std::map<std::pair<std::size_t, std::size_t>, int> visits;
  for (const auto& d : r.trace.decisions) {
    const double expect = std::ldexp(1.0, 1 - ++visits[{d.run, d.dim}]);
    worst = std::max(worst, ulps_apart(d.upper - d.lower, expect));
    ++checks;
  }
  return {worst <= 4.0, std::to_string(checks) + " widths checked, worst " + fmt(worst) + " ulps"};
}

Verdict criterion2() {
  BoundsState b = BoundsState::uniform(1);
  const CandidatePair c = cs_candidates(b, 0);
  shrink(b, 0, Winner::x);
  const bool ok = c.x_value == -0.5 && c.y_value == 0.5 && b.lower[0] == -1.0 && b.upper[0] == 0.0;
  return {ok, "candidates (" + fmt(c.x_value) + ", " + fmt(c.y_value) + "), after X-win [" + fmt(b.lower[0]) + ", " +
                  fmt(b.upper[0]) + "]"};
}

Verdict criterion3() {
  CsConfig c;
  c.maxiter = 6;
  std::size_t calls = 0;
  const FitnessFunction stub = [&calls](const ThresholdVector& s) {
    ++calls;
    double h = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) h += std::cos(3.0 * s[i] + static_cast<double>(i));
    return h;
  };
  const auto r = optimize_feature_thresholds(32, 2048, stub, c);
  const std::size_t expect = 2 * 32 * 6 * 64 + 64;
  const bool ok = r.trace.r_max == 64 && r.trace.evaluations == expect;
  return {ok, "R_max " + std::to_string(r.trace.r_max) + ", evaluations " + std::to_string(r.trace.evaluations) +
                  " (expected " + std::to_string(expect) + ", " + std::to_string(calls) + " uncached)"};
}

Verdict criterion4() {
  Engine rng(4);
  std::vector<double> t(8);
  for (double& v : t) v = -0.999 + 1.998 * uniform01(rng);
  CsConfig c;
  c.maxiter = 20;
  c.max_nfe = 2 * 8 * 20;
  const auto r = optimize_feature_thresholds(
      8, 8,
      [&t](const ThresholdVector& s) {
        double f = 0.0;
        for (std::size_t i = 0; i < 8; ++i) f -= (s[i] - t[i]) * (s[i] - t[i]);
        return f;
      },
      c);
  double worst = 0.0;
  for (std::size_t i = 0; i < 8; ++i) worst = std::max(worst, std::abs(r.thresholds[i] - t[i]));
  return {worst <= std::ldexp(1.0, -18), "max |S*_i - t_i| = " + fmt(worst) + " (bound " + fmt(std::ldexp(1.0, -18)) + ")"};
}

Verdict criterion5() {
  const auto& reports = acceptance_reports();
  std::size_t seeds_ok = 0;
  std::size_t refine_violations = 0;
  std::ostringstream losses;
  for (std::size_t s = 0; s < reports.size(); ++s) {
    const auto& r = reports[s];
    for (const auto& m : r.methods) {
      if (!m.failures.empty()) throw std::runtime_error(std::string(to_string(m.method)) + ": " + m.failures.front());
    }
    const double cs = median(summary_of(r, Method::cs_feature).macro_f1s());
    bool ok = true;
    for (Method rival : {Method::cs_global, Method::simple, Method::minmax, Method::otsu, Method::hybrid}) {
      const double v = median(summary_of(r, rival).macro_f1s());
      if (cs < v) {
        ok = false;
        losses << " seed " << s << ": " << to_string(rival) << " " << fmt(v) << " > " << fmt(cs) << ";";
      }
    }
    seeds_ok += ok ? 1 : 0;
    const std::pair<Method, Method> pairs[] = {{Method::optimized_simple, Method::simple},
                                               {Method::optimized_otsu, Method::otsu},
                                               {Method::optimized_hybrid, Method::hybrid}};
    for (const auto& [opt, start] : pairs) {
      const auto& a = summary_of(r, opt).runs;
      const auto& b = summary_of(r, start).runs;
      for (std::size_t i = 0; i < a.size(); ++i) refine_violations += a[i].macro_f1 < b[i].macro_f1 ? 1 : 0;
    }
  }
  const bool ok = seeds_ok >= 9 && refine_violations == 0;
  return {ok, "cs-feature leads in " + std::to_string(seeds_ok) + "/10 seeds, refine violations " +
                  std::to_string(refine_violations) + losses.str()};
}

Verdict criterion6() {
  const auto& reports = acceptance_reports();
  std::size_t ok_count = 0;
  double worst_gap = -1.0;
  for (const auto& r : reports) {
    const double real = median(summary_of(r, Method::real_valued_reference).accuracies());
    const double cs = median(summary_of(r, Method::cs_feature).accuracies());
    worst_gap = std::max(worst_gap, cs - real);
    ok_count += real >= cs - 0.05 ? 1 : 0;
  }
  return {ok_count == reports.size(),
          std::to_string(ok_count) + "/10 seeds, largest cs-feature minus real-valued gap " + fmt(worst_gap)};
}

Verdict criterion7() {
  bool ok = true;
  std::ostringstream d;
  for (const auto [n, dims] : {std::pair<std::size_t, std::size_t>{8, 768}, {50000, 768}}) {
    const std::size_t packed = packed_footprint(n, dims).payload_bytes;
    const std::size_t real = real_footprint_bytes(n, dims);
    ok = ok && packed * 32 == real;
    d << "(" << n << "," << dims << "): " << packed << " / " << real << " bytes; ";
  }
  return {ok, d.str()};
}

Verdict criterion8() {
  Engine rng(8);
  std::size_t agree = 0;
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 10 + uniform_index(rng, 9991);
    std::vector<float> v(n);
    const double split = uniform01(rng);
    const double a = -0.8 + 0.6 * uniform01(rng), b = 0.2 + 0.6 * uniform01(rng);
    for (float& x : v) x = static_cast<float>((uniform01(rng) < split ? a : b) + 0.2 * standard_normal(rng));
    agree += otsu_threshold(v, 256).value == testing::otsu_oracle(v, 256) ? 1 : 0;
  }
  return {agree == 100, std::to_string(agree) + "/100 inputs match the exhaustive scan"};
}

Verdict criterion9() {
  const auto m = testing::random_matrix(256, 64, 9);
  Engine rng(90);
  ThresholdVector t = testing::random_thresholds(64, rng);
  BinaryMatrix b = binarize(m, t);
  std::size_t agree = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t d = uniform_index(rng, 64);
    const double cut = -1.0 + 2.0 * uniform01(rng);
    t.set(d, cut);
    rebinarize_column(b, m, d, cut);
    agree += b == binarize(m, t) ? 1 : 0;
  }
  return {agree == 1000, std::to_string(agree) + "/1000 updates match full re-binarization"};
}

Verdict criterion10() {
  Engine rng(10);
  DenseFeatures x{40, 6, std::vector<double>(240)};
  for (double& v : x.values) v = standard_normal(rng);
  std::vector<std::uint32_t> y(40);
  for (std::size_t i = 0; i < 40; ++i) y[i] = static_cast<std::uint32_t>(i % 3);
  double worst = 0.0;
  for (int point = 0; point < 5; ++point) {
    std::vector<double> w(3 * 7);
    for (double& v : w) v = standard_normal(rng);
    const LossGradient g = softmax_loss_gradient(x, y, 3, w, 1e-4);
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double h = 1e-5;
      auto a = w, b = w;
      a[j] += h;
      b[j] -= h;
      const double fd =
          (softmax_loss_gradient(x, y, 3, a, 1e-4).loss - softmax_loss_gradient(x, y, 3, b, 1e-4).loss) / (2 * h);
      worst = std::max(worst, std::abs(fd - g.gradient[j]) / std::max(1e-8, std::max(std::abs(fd), std::abs(g.gradient[j]))));
    }
  }
  return {worst < 1e-4, "max relative error " + fmt(worst)};
}

Verdict criterion11() {
  const KwResult r = kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
  const double nl = neglog10(0.05);
  const bool ok = std::abs(r.h_statistic - 7.2) < 1e-12 && r.degrees_of_freedom == 2 && std::abs(nl - 1.3010) <= 1e-3;
  return {ok, "H " + fmt(r.h_statistic) + ", df " + std::to_string(r.degrees_of_freedom) + ", -log10(0.05) " + fmt(nl)};
}

Verdict criterion12() {
  testing::TempDir dir("acceptance12");
  const auto [m, y] = generate_synthetic(acceptance_spec(1000));
  save_embeddings(dir / "data.bemb", m, nullptr, EmbeddingFormat::binary);
  save_labels(dir / "labels.txt", y);
  const auto run = [&](const std::string& out) {
    const std::string input = (dir / "data.bemb").string(), labels = (dir / "labels.txt").string();
    const std::string runs = std::to_string(kRunsPerSeed), maxiter = std::to_string(kMaxiter),
                      nfe = std::to_string(kMaxNfe), outdir = (dir / out).string();
    const char* argv[] = {"barcoder", "benchmark", "--input", input.c_str(), "--labels", labels.c_str(),
                          "--runs", runs.c_str(), "--maxiter", maxiter.c_str(), "--max-nfe", nfe.c_str(),
                          "--seed", "0", "--svg", "--out-dir", outdir.c_str()};
    std::ostringstream sink_out, sink_err;
    const int status = cli_dispatch(static_cast<int>(std::size(argv)), argv, sink_out, sink_err);
    if (status != 0) throw std::runtime_error("benchmark exited " + std::to_string(status) + ": " + sink_err.str());
  };
  run("a");
  run("b");
  std::size_t compared = 0, identical = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    if (name == "timing.csv") continue;  // wall-clock, intentionally outside the deterministic set
    std::ifstream fa(entry.path(), std::ios::binary), fb(dir / "b" / name, std::ios::binary);
    const std::string a{std::istreambuf_iterator<char>(fa), {}}, b{std::istreambuf_iterator<char>(fb), {}};
    ++compared;
    identical += (!a.empty() && a == b) ? 1 : 0;
  }
  return {compared >= 8 && identical == compared,
          std::to_string(identical) + "/" + std::to_string(compared) + " report files byte-identical"};
}

}  // namespace

int main() {
  report(1, "interval-halving law", criterion1);
  report(2, "worked example", criterion2);
  report(3, "budget accounting", criterion3);
  report(4, "hidden-target recovery", criterion4);
  report(5, "method ordering", criterion5);
  report(6, "real-valued reference", criterion6);
  report(7, "memory ratio", criterion7);
  report(8, "otsu oracle", criterion8);
  report(9, "incremental binarization", criterion9);
  report(10, "gradient check", criterion10);
  report(11, "kruskal-wallis fixture", criterion11);
  report(12, "end-to-end determinism", criterion12);
  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "PASSED", failures);
  return failures ? 1 : 0;
}
