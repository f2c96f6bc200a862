#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "barcoder/core_types.hpp"
#include "test_util.hpp"

using namespace barcoder;
using barcoder::testing::matches;
using barcoder::testing::oracle_bits;
using barcoder::testing::random_matrix;
using barcoder::testing::random_thresholds;

namespace {
EmbeddingMatrix example() { return EmbeddingMatrix(2, 2, {-0.5F, 0.7F, 0.2F, -0.1F}); }
}  // namespace

TEST_CASE("embedding matrix validates shape and values") {
  CHECK_THROWS(EmbeddingMatrix(0, 2, {}));
  CHECK_THROWS(EmbeddingMatrix(2, 2, {1.0F, 2.0F, 3.0F}));
  CHECK_THROWS(EmbeddingMatrix(1, 2, {1.0F, std::numeric_limits<float>::quiet_NaN()}));
  CHECK_THROWS(EmbeddingMatrix(1, 1, {std::numeric_limits<float>::infinity()}));
  const EmbeddingMatrix m = example();
  CHECK(m(1, 0) == doctest::Approx(0.2));
  CHECK(m.min_value() == -0.5F);
  CHECK(m.max_value() == 0.7F);
}

TEST_CASE("label vector requires every class") {
  CHECK_THROWS(LabelVector({0, 0, 2}, 3));
  CHECK_THROWS(LabelVector({0, 0}, 1));
  CHECK_THROWS(LabelVector({0, 3}, 2));
  const LabelVector l = LabelVector::from_values({1, 0, 2});
  CHECK(l.n_classes() == 3);
}

TEST_CASE("threshold vector rejects non-finite cut-points") {
  CHECK_THROWS(ThresholdVector({0.0, std::nan("")}));
  ThresholdVector t = ThresholdVector::constant(3, 0.5);
  CHECK_THROWS(t.set(3, 0.0));
  CHECK(t.with(1, 0.2)[1] == 0.2);
  CHECK(t[1] == 0.5);
}

TEST_CASE("binarize at zero") {
  const BinaryMatrix b = binarize(example(), ThresholdVector({0.0, 0.0}));
  CHECK(b.bit(0, 0) == false);
  CHECK(b.bit(0, 1) == true);
  CHECK(b.bit(1, 0) == true);
  CHECK(b.bit(1, 1) == false);
}

TEST_CASE("binarize is inclusive per dimension") {
  const BinaryMatrix b = binarize(example(), ThresholdVector({0.3, -0.2}));
  CHECK(b.bit(0, 0) == false);
  CHECK(b.bit(0, 1) == true);
  CHECK(b.bit(1, 0) == false);
  CHECK(b.bit(1, 1) == true);
}

TEST_CASE("binarize boundary value maps to one") {
  const EmbeddingMatrix m(1, 1, {0.25F});
  CHECK(binarize(m, ThresholdVector({0.25})).bit(0, 0));
  CHECK_FALSE(binarize(m, ThresholdVector({std::nextafter(0.25, 1.0)})).bit(0, 0));
}

TEST_CASE("binarize dimension mismatch reports both lengths") {
  try {
    (void)binarize(example(), ThresholdVector({0.0, 0.0, 0.0}));
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find('3') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
}

TEST_CASE("binarize matches element-wise oracle on random inputs") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = random_matrix(64 + seed, 16, seed);
    Engine rng(seed + 100);
    const auto t = random_thresholds(16, rng);
    const BinaryMatrix b = binarize(m, t);
    CHECK(matches(b, oracle_bits(m, t)));
    for (std::size_t d = 0; d < 16; ++d) {
      // padding bits stay zero
      const auto col = b.column(d);
      const std::size_t tail = b.n_samples() % 64;
      if (tail) CHECK((col.back() >> tail) == 0);
    }
  }
}

TEST_CASE("binarize is monotone in the threshold") {
  const auto m = random_matrix(100, 8, 7);
  Engine rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_thresholds(8, rng);
    const std::size_t d = uniform_index(rng, 8);
    const auto lo = binarize(m, t);
    const auto hi = binarize(m, t.with(d, t[d] + 0.1));
    CHECK(hi.count_ones(d) <= lo.count_ones(d));
    for (std::size_t r = 0; r < 100; ++r) CHECK((!hi.bit(r, d) || lo.bit(r, d)));
  }
}

TEST_CASE("update column examples") {
  const EmbeddingMatrix m = example();
  const BinaryMatrix b = binarize(m, ThresholdVector({0.0, 0.0}));
  const BinaryMatrix u = update_column(b, m, 0, 0.3);
  CHECK(u.bit(0, 0) == false);
  CHECK(u.bit(1, 0) == false);
  CHECK(u.bit(0, 1) == b.bit(0, 1));
  CHECK(u.bit(1, 1) == b.bit(1, 1));
  CHECK(update_column(b, m, 1, 0.0) == b);
  CHECK_THROWS(update_column(b, m, 2, 0.0));
}

TEST_CASE("interleaved updates match full re-binarization") {
  const auto m = random_matrix(200, 32, 11);
  Engine rng(12);
  ThresholdVector t = random_thresholds(32, rng);
  BinaryMatrix b = binarize(m, t);
  for (int step = 0; step < 50; ++step) {
    const std::size_t d = uniform_index(rng, 32);
    const double cut = -1.0 + 2.0 * uniform01(rng);
    const BinaryMatrix before = b;
    t.set(d, cut);
    b = update_column(b, m, d, cut);
    REQUIRE(b == binarize(m, t));
    for (std::size_t other = 0; other < 32; ++other) {
      if (other == d) continue;
      const auto a = before.column(other);
      const auto c = b.column(other);
      CHECK(std::equal(a.begin(), a.end(), c.begin()));
    }
  }
}

TEST_CASE("packed footprint") {
  CHECK(packed_footprint(8, 768).payload_bytes == 768);
  CHECK(packed_footprint(9, 4).payload_bytes == 8);
  CHECK(packed_footprint(50000, 768).payload_bytes == 4800000);
  CHECK(packed_footprint(8, 768).header_bytes == kBarcodeHeaderBytes);
  CHECK(packed_footprint(BinaryMatrix(9, 4)).total_bytes() == 8 + kBarcodeHeaderBytes);
  for (std::size_t n : {8U, 64U, 800U}) {
    CHECK(packed_footprint(n, 768).payload_bytes * 32 == real_footprint_bytes(n, 768));
    CHECK(packed_footprint(n, 768).total_bytes() * 31 < real_footprint_bytes(n, 768));
  }
}
