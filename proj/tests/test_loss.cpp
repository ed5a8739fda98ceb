#include <cmath>
#include <limits>
#include <vector>

#include "depthsynth/error.hpp"
#include "depthsynth/loss.hpp"
#include "depthsynth/rng.hpp"
#include "doctest.h"
#include "g2_oracle.hpp"

using namespace depthsynth;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an exception");
  return ErrorCode::IoError;
}

oracle::Grid to_grid(const DepthMap& d) {
  oracle::Grid g(d.height(), std::vector<double>(d.width()));
  for (std::size_t y = 0; y < d.height(); ++y) {
    for (std::size_t x = 0; x < d.width(); ++x) {
      const std::size_t i = d.index(x, y);
      g[y][x] = d.is_valid(i) ? d.value(i) : std::numeric_limits<double>::quiet_NaN();
    }
  }
  return g;
}

DepthMap random_map(SeededRng& rng, std::size_t w, std::size_t h, double holes) {
  std::vector<double> v(w * h);
  for (auto& x : v) x = rng.uniform() < holes ? 0.0 : 0.2 + 9.0 * rng.uniform();
  return DepthMap::from_values(w, h, std::move(v));
}

}  // namespace

TEST_CASE("identical maps give zero loss") {
  SeededRng rng(1);
  const DepthMap d = random_map(rng, 8, 8, 0.1);
  const LossBreakdown b = g2_loss(d, d);
  CHECK(b.total == 0.0);
  CHECK(b.standardized_l1 == 0.0);
  CHECK(b.absolute_l1 == 0.0);
  CHECK(b.gradient_term == 0.0);
}

TEST_CASE("constant shift only costs the absolute term") {
  SeededRng rng(2);
  const DepthMap label = random_map(rng, 7, 6, 0.0);
  std::vector<double> v(label.values().begin(), label.values().end());
  for (auto& x : v) x += 1.0;
  const LossBreakdown b = g2_loss(DepthMap::from_values(7, 6, v), label);
  CHECK(b.standardized_l1 < 1e-12);
  CHECK(b.gradient_term < 1e-12);
  CHECK(b.total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("small hand example matches the oracle") {
  const DepthMap pred = DepthMap::from_values(2, 2, {1, 2, 3, 4});
  const DepthMap label = DepthMap::from_values(2, 2, {1, 2, 3, 5});
  const LossBreakdown b = g2_loss(pred, label);
  const oracle::Terms t = oracle::g2(to_grid(pred), to_grid(label));
  CHECK(std::abs(b.total - t.total) <= 1e-9);
  CHECK(std::abs(b.standardized_l1 - t.t1) <= 1e-9);
  CHECK(b.absolute_l1 == doctest::Approx(0.25));
  CHECK(b.gradient_term == 0.0);
}

TEST_CASE("random pairs match the oracle") {
  SeededRng rng(3);
  for (int n = 0; n < 200; ++n) {
    const std::size_t w = 2 + rng.below(7), h = 2 + rng.below(7);
    const DepthMap pred = random_map(rng, w, h, 0.1);
    const DepthMap label = random_map(rng, w, h, 0.1);
    LossBreakdown b;
    try {
      b = g2_loss(pred, label);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InsufficientValid);
      continue;
    }
    const oracle::Terms t = oracle::g2(to_grid(pred), to_grid(label), true);
    REQUIRE(std::abs(b.total - t.total) <= 1e-9);
    REQUIRE(std::abs(b.gradient_term - t.t3) <= 1e-9);

    LossOptions full;
    full.normalization = PyramidNormalization::FullResolution;
    const oracle::Terms f = oracle::g2(to_grid(pred), to_grid(label), false);
    REQUIRE(std::abs(g2_loss(pred, label, full).total - f.total) <= 1e-9);

    // The absolute term is symmetric.
    REQUIRE(std::abs(g2_loss(label, pred).absolute_l1 - b.absolute_l1) <= 1e-15);
    REQUIRE(b.standardized_l1 >= 0.0);
    REQUIRE(b.gradient_term >= 0.0);
  }
}

TEST_CASE("affine related maps collapse to the absolute term") {
  SeededRng rng(4);
  for (double a : {0.5, 2.0, 7.0}) {
    for (double b : {0.0, 0.3, 4.0}) {
      const DepthMap label = random_map(rng, 8, 8, 0.1);
      std::vector<double> v(label.size(), 0.0);
      double expect = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!label.is_valid(i)) continue;
        v[i] = a * label.value(i) + b;
        expect += std::abs((a - 1.0) * label.value(i) + b);
      }
      expect /= static_cast<double>(label.valid_count());
      const LossBreakdown r = g2_loss(DepthMap::from_values(8, 8, v), label);
      CHECK(r.standardized_l1 < 1e-9);
      CHECK(r.gradient_term < 1e-9);
      CHECK(std::abs(r.absolute_l1 - expect) < 1e-9);
    }
  }
}

TEST_CASE("sobel responses") {
  MaskedGrid c = MaskedGrid::dense(5, 4, std::vector<double>(20, 3.0));
  const MaskedGrid zc = sobel_abs(c);
  for (std::size_t i = 0; i < zc.size(); ++i) CHECK(zc.value(i) == 0.0);

  std::vector<double> ramp(6 * 5);
  for (std::size_t y = 0; y < 5; ++y)
    for (std::size_t x = 0; x < 6; ++x) ramp[y * 6 + x] = static_cast<double>(x);
  const MaskedGrid r = sobel_abs(MaskedGrid::dense(6, 5, ramp));
  // Interior: (1 + 2 + 1) * (u+1 - (u-1)) = 8 horizontally, 0 vertically.
  for (std::size_t y = 1; y < 4; ++y)
    for (std::size_t x = 1; x < 5; ++x) CHECK(r.at(x, y) == 8.0);

  std::vector<double> sym{1, 2, 1, 2, 5, 2, 1, 2, 1};
  const MaskedGrid s = sobel_abs(MaskedGrid::dense(3, 3, sym));
  CHECK(s.at(0, 0) == s.at(2, 2));
  CHECK(s.at(0, 2) == s.at(2, 0));
  CHECK(s.at(1, 0) == s.at(1, 2));
  CHECK(s.at(0, 1) == s.at(2, 1));

  MaskedGrid hole = MaskedGrid::dense(4, 4, std::vector<double>(16, 1.0));
  hole.invalidate(0);
  const MaskedGrid h = sobel_abs(hole);
  CHECK_FALSE(h.valid_at(1, 1));
  CHECK(h.valid_at(2, 2));

  CHECK(code_of([] { sobel_abs(MaskedGrid(2, 5)); }) == ErrorCode::ShapeError);
}

TEST_CASE("nearest neighbour pyramid") {
  std::vector<double> v(16);
  for (std::size_t i = 0; i < 16; ++i) v[i] = static_cast<double>(i);
  const MaskedGrid g = MaskedGrid::dense(4, 4, v);
  CHECK(pyramid_nn(g, 0) == g);
  const MaskedGrid h = pyramid_nn(g, 1);
  REQUIRE(h.width() == 2);
  REQUIRE(h.height() == 2);
  CHECK(h.at(0, 0) == 0.0);
  CHECK(h.at(1, 0) == 2.0);
  CHECK(h.at(0, 1) == 8.0);
  CHECK(h.at(1, 1) == 10.0);
  const MaskedGrid q = pyramid_nn(MaskedGrid::dense(5, 5, std::vector<double>(25, 1.0)), 2);
  CHECK(q.width() == 2);
  CHECK(q.height() == 2);
}

TEST_CASE("loss preconditions") {
  const DepthMap a = DepthMap::from_values(2, 2, {1, 2, 3, 4});
  CHECK(code_of([&] { g2_loss(a, DepthMap::from_values(4, 1, {1, 2, 3, 4})); }) == ErrorCode::ShapeError);
  CHECK(code_of([&] { g2_loss(a, DepthMap::from_values(2, 2, {1, 0, 0, 0})); }) ==
        ErrorCode::InsufficientValid);
  CHECK(code_of([&] {
          g2_loss(DepthMap::from_values(2, 2, {1, 0, 0, 0}), DepthMap::from_values(2, 2, {1, 2, 3, 4}));
        }) == ErrorCode::InsufficientValid);
}

TEST_CASE("l1 plus l2") {
  const L1L2Breakdown b =
      l1l2_loss(DepthMap::from_values(3, 1, {1, 2, 3}), DepthMap::from_values(3, 1, {2, 2, 5}));
  CHECK(b.l1 == doctest::Approx(1.0));
  CHECK(b.l2 == doctest::Approx(5.0 / 3.0));
  CHECK(b.total == doctest::Approx(1.0 + 5.0 / 3.0));
}
