#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <vector>

#include "depthsynth/error.hpp"
#include "depthsynth/samplers.hpp"
#include "doctest.h"

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

DepthMap random_map(std::uint64_t seed, std::size_t w, std::size_t h, double holes = 0.05) {
  SeededRng rng(seed);
  std::vector<double> v(w * h);
  for (auto& x : v) x = rng.uniform() < holes ? 0.0 : 0.5 + 30.0 * rng.uniform();
  return DepthMap::from_values(w, h, std::move(v));
}

/// Map with exactly `valid` valid pixels.
DepthMap with_valid(std::size_t w, std::size_t h, std::size_t valid) {
  std::vector<double> v(w * h, 0.0);
  for (std::size_t i = 0; i < valid; ++i) v[(i * 7919) % (w * h)] = 1.0 + 0.001 * i;
  DepthMap d = DepthMap::from_values(w, h, std::move(v));
  REQUIRE(d.valid_count() == valid);
  return d;
}

void check_consistent(const SparseDepth& s, const DepthMap& d) {
  REQUIRE(s.width == d.width());
  REQUIRE(s.height == d.height());
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const SparsePoint& p = s.points[i];
    REQUIRE(d.is_valid(p.pixel));
    REQUIRE(p.depth == d.value(p.pixel));
    if (i > 0) REQUIRE(s.points[i - 1].pixel < p.pixel);
  }
}

std::set<std::size_t> pixels(const SparseDepth& s) {
  std::set<std::size_t> out;
  for (const auto& p : s.points) out.insert(p.pixel);
  return out;
}

/// Depth that grows towards the bottom of the frame, like a ground plane.
DepthMap ramp_scene(std::size_t w, std::size_t h) {
  DepthMap d(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) d.set(d.index(x, y), 40.0 - 35.0 * y / h + 0.01 * x);
  }
  return d;
}

}  // namespace

TEST_CASE("uniform counts") {
  const DepthMap d = with_valid(50, 40, 1000);
  SeededRng rng(1);
  const SparseDepth a = sample_uniform(d, 0.01, rng);
  CHECK(a.points.size() == 10);
  check_consistent(a, d);

  const SparseDepth b = sample_uniform(d, 1e-5, rng);
  CHECK(b.points.size() == 2);
  check_consistent(b, d);

  const SparseDepth all = sample_uniform(d, 1.0, rng);
  CHECK(all.points.size() == 1000);
  std::set<std::size_t> valid;
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d.is_valid(i)) valid.insert(i);
  }
  CHECK(pixels(all) == valid);

  for (double rho : {0.1, 0.01, 0.001}) {
    const DepthMap big = random_map(7, 120, 90);
    const std::size_t eta = big.valid_count();
    const auto expect = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(rho * eta)));
    SeededRng r(3);
    const SparseDepth s = sample_uniform(big, rho, r);
    CHECK(s.points.size() == expect);
    check_consistent(s, big);
  }

  CHECK(code_of([&] { sample_uniform(with_valid(4, 4, 1), 0.5, rng); }) == ErrorCode::InsufficientValid);
  CHECK(code_of([&] { sample_uniform(d, 0.0, rng); }) == ErrorCode::ConfigError);
}

TEST_CASE("uniform samples are nested prefixes and deterministic") {
  const DepthMap d = random_map(11, 100, 80);
  SeededRng a(5), b(5), c(5);
  const SparseDepth small = sample_uniform(d, 0.001, a);
  const SparseDepth large = sample_uniform(d, 0.01, b);
  const SparseDepth again = sample_uniform(d, 0.01, c);
  const auto s = pixels(small), l = pixels(large);
  CHECK(std::includes(l.begin(), l.end(), s.begin(), s.end()));
  CHECK(large.points == again.points);
}

TEST_CASE("lidar beam count is monotone") {
  const DepthMap d = ramp_scene(320, 240);
  const CameraIntrinsics k{250, 250, 160, 120};
  SeededRng r64(1), r16(1), r4(1);
  auto beams = [](std::size_t b) {
    LidarParams p;
    p.beams = b;
    return p;
  };
  const SparseDepth s64 = sample_lidar(d, k, beams(64), r64);
  const SparseDepth s16 = sample_lidar(d, k, beams(16), r16);
  const SparseDepth s4 = sample_lidar(d, k, beams(4), r4);
  CHECK(s64.points.size() > s16.points.size());
  CHECK(s16.points.size() > s4.points.size());
  check_consistent(s64, d);
  check_consistent(s16, d);
  check_consistent(s4, d);
}

TEST_CASE("lidar points sit on at most B elevation lines") {
  const DepthMap d = random_map(4, 200, 150, 0.2);
  const CameraIntrinsics k{180, 180, 100, 75};
  for (std::size_t beams : {64, 16, 4}) {
    LidarParams p;
    p.beams = beams;
    const LidarLayout layout = lidar_layout(d, k, p);
    REQUIRE(layout.beam_elevations.size() == beams);
    SeededRng rng(9);
    const SparseDepth s = sample_lidar(d, k, p, rng);
    check_consistent(s, d);
    std::set<std::size_t> used;
    for (const auto& pt : s.points) {
      const double u = static_cast<double>(pt.pixel % d.width());
      const double v = static_cast<double>(pt.pixel / d.width());
      const double phi = ray_elevation(k, u, v);
      std::size_t best = 0;
      for (std::size_t b = 1; b < beams; ++b) {
        if (std::abs(phi - layout.beam_elevations[b]) < std::abs(phi - layout.beam_elevations[best])) {
          best = b;
        }
      }
      if (beams > 1) CHECK(std::abs(phi - layout.beam_elevations[best]) < layout.spacing / 2);
      used.insert(best);
    }
    CHECK(used.size() <= beams);
  }
}

TEST_CASE("single beam over one azimuth bin falls back to two points") {
  const DepthMap d = ramp_scene(64, 48);
  LidarParams p;
  p.beams = 1;
  p.azimuth_resolution_deg = 360.0;
  SeededRng rng(2);
  const SparseDepth s = sample_lidar(d, {50, 50, 32, 24}, p, rng);
  CHECK(s.points.size() == 2);
  check_consistent(s, d);
}

TEST_CASE("feature budget is exact") {
  const std::size_t w = 640, h = 480;
  const DepthMap d = random_map(21, w, h, 0.1);
  GrayImage img{w, h, std::vector<double>(w * h)};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) img.pixels[y * w + x] = ((x / 16 + y / 16) % 2) ? 0.9 : 0.1;
  }
  for (std::size_t k : {1500, 500, 150}) {
    SeededRng rng(3);
    const SparseDepth s = sample_features(d, img, FeatureParams{k}, rng);
    CHECK(s.points.size() == k);
    check_consistent(s, d);
  }
  // Checker corners win over the uniform fill.
  const std::vector<double> resp = harris_response(img, 1.5, 0.04);
  CHECK(resp[img.width * 16 + 16] > resp[img.width * 8 + 8]);
}

TEST_CASE("feature sampler on flat texture and small maps") {
  const DepthMap d = random_map(5, 60, 40);
  const GrayImage flat{60, 40, std::vector<double>(2400, 0.5)};
  SeededRng a(8), b(8);
  const SparseDepth s = sample_features(d, flat, FeatureParams{150}, a);
  CHECK(s.points.size() == 150);
  check_consistent(s, d);
  CHECK(sample_features(d, flat, FeatureParams{150}, b).points == s.points);

  const DepthMap few = with_valid(30, 20, 40);
  const GrayImage img{30, 20, std::vector<double>(600, 0.2)};
  SeededRng c(1);
  CHECK(sample_features(few, img, FeatureParams{1500}, c).points.size() == 40);
  CHECK(code_of([&] { sample_features(few, GrayImage{3, 3, std::vector<double>(9)}, FeatureParams{}, c); }) ==
        ErrorCode::ShapeError);
}

TEST_CASE("dispatch and randomized fraction") {
  const DepthMap d = random_map(2, 80, 60);
  SeededRng rng(4);
  const SampleResult r = sample(d, SamplerSpec::uniform(std::nullopt), nullptr, nullptr, rng);
  REQUIRE(r.rho.has_value());
  CHECK(*r.rho >= 1e-4);
  CHECK(*r.rho <= 1.0);
  const auto expect = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::llround(*r.rho * static_cast<double>(d.valid_count()))));
  CHECK(r.sparse.points.size() == expect);

  CHECK(code_of([&] { sample(d, SamplerSpec::lidar(16), nullptr, nullptr, rng); }) == ErrorCode::ConfigError);
  CHECK(code_of([&] { sample(d, SamplerSpec::features(100), nullptr, nullptr, rng); }) ==
        ErrorCode::ConfigError);
  CHECK(code_of([] { SamplerSpec::features(1).validate(); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { SamplerSpec::lidar(0).validate(); }) == ErrorCode::ConfigError);

  const SparseDepth round = SparseDepth::from_depth_map(r.sparse.to_depth_map());
  CHECK(round.points == r.sparse.points);
}
