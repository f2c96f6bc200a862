#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "barcoder/cli.hpp"
#include "barcoder/io.hpp"
#include "test_util.hpp"

using namespace barcoder;
using barcoder::testing::TempDir;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "barcoder");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string metric_lines(const std::string& text) {
  std::istringstream in(text);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.rfind("validation_", 0) == 0) kept += line + '\n';
  }
  return kept;
}

}  // namespace

TEST_CASE("cli end to end") {
  TempDir dir("cli");
  const std::string data = (dir / "d.csv").string();
  REQUIRE(run({"synth", "--samples", "160", "--dims", "6", "--seed", "3", "--out", data}).status == 0);

  SUBCASE("optimize is deterministic") {
    const std::string a = (dir / "a.txt").string(), b = (dir / "b.txt").string();
    const auto ra = run({"optimize", "--input", data, "--method", "cs-feature", "--maxiter", "8", "--seed", "7",
                         "--max-nfe", "100", "--out", a, "--trace", (dir / "t.jsonl").string()});
    REQUIRE_MESSAGE(ra.status == 0, ra.err);
    REQUIRE(run({"optimize", "--input", data, "--method", "cs-feature", "--maxiter", "8", "--seed", "7",
                 "--max-nfe", "100", "--out", b})
                .status == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(load_thresholds(a).size() == 6);
    CHECK(slurp(dir / "t.jsonl").find("\"type\":\"summary\"") != std::string::npos);
  }

  SUBCASE("binarize then evaluate matches direct evaluation") {
    const std::string t = (dir / "t.txt").string();
    REQUIRE(run({"optimize", "--input", data, "--method", "otsu", "--out", t}).status == 0);
    const std::string bars = (dir / "b.bbar").string(), labels = (dir / "y.txt").string();
    REQUIRE(run({"binarize", "--input", data, "--thresholds", t, "--out", bars}).status == 0);
    REQUIRE(run({"synth", "--samples", "160", "--dims", "6", "--seed", "3", "--out", (dir / "copy.csv").string(),
                 "--labels-out", labels})
                .status == 0);
    const auto via_bars = run({"evaluate", "--barcodes", bars, "--labels", labels, "--seed", "4"});
    const auto direct = run({"evaluate", "--input", data, "--thresholds", t, "--seed", "4"});
    REQUIRE_MESSAGE(via_bars.status == 0, via_bars.err);
    REQUIRE(direct.status == 0);
    CHECK(metric_lines(via_bars.out) == metric_lines(direct.out));
    CHECK_FALSE(metric_lines(direct.out).empty());
  }

  SUBCASE("binarize with each baseline") {
    for (const char* m : {"simple", "minmax", "otsu", "hybrid"}) {
      const auto r = run({"binarize", "--input", data, "--method", m, "--out", (dir / "x.bbar").string()});
      CHECK_MESSAGE(r.status == 0, r.err);
      CHECK(load_barcodes(dir / "x.bbar").n_dims() == 6);
    }
  }

  SUBCASE("benchmark writes reports") {
    const std::string out = (dir / "rep").string();
    const auto r = run({"benchmark", "--input", data, "--methods", "simple,cs-global,real", "--runs", "2",
                        "--maxiter", "2", "--max-nfe", "8", "--out-dir", out, "--posthoc", "dunn", "--holm"});
    REQUIRE_MESSAGE(r.status == 0, r.err);
    CHECK(std::filesystem::exists(dir / "rep" / "pairwise_pvalues.csv"));
    CHECK(r.out.find("cs-global") != std::string::npos);
  }

  SUBCASE("search methods require maxiter") {
    const auto r = run({"optimize", "--input", data, "--method", "cs-feature", "--out", (dir / "z.txt").string()});
    CHECK(r.status != 0);
    CHECK(r.err.find("--maxiter") != std::string::npos);
  }

  SUBCASE("bad bounds are rejected") {
    const auto r = run({"optimize", "--input", data, "--method", "cs-global", "--maxiter", "2", "--bounds", "1,-1",
                        "--out", (dir / "z.txt").string()});
    CHECK(r.status != 0);
  }
}

TEST_CASE("stats subcommand reports H = 7.2") {
  TempDir dir("clistats");
  {
    std::ofstream f(dir / "s.csv");
    f << "a,b,c\n1,4,7\n2,5,8\n3,6,9\n";
  }
  const auto r = run({"stats", "--input", (dir / "s.csv").string(), "--out-dir", (dir / "o").string()});
  REQUIRE_MESSAGE(r.status == 0, r.err);
  CHECK(r.out.find("H = 7.2") != std::string::npos);
  CHECK(r.out.find("df = 2") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "o" / "neglog10_heatmap.csv"));
}

TEST_CASE("usage errors exit nonzero") {
  CHECK(run({}).status != 0);
  CHECK(run({"frobnicate"}).status != 0);
  const auto r = run({"stats", "--input", "x.csv", "--no-such-flag"});
  CHECK(r.status != 0);
  CHECK_FALSE(r.err.empty());
  CHECK(run({"stats", "--input", "/nonexistent/file.csv"}).status != 0);
  CHECK(run({"--help"}).status == 0);
}
