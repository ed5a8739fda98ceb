#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "depthsynth/depth_stats.hpp"
#include "depthsynth/error.hpp"
#include "depthsynth/rng.hpp"
#include "depthsynth/synthesis.hpp"
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

DepthMap filled(std::size_t w, std::size_t h, double v) {
  return DepthMap::from_values(w, h, std::vector<double>(w * h, v));
}

DepthMap random_map(SeededRng& rng, std::size_t w, std::size_t h, double holes = 0.1) {
  std::vector<double> v(w * h);
  for (auto& x : v) x = rng.uniform() < holes ? 0.0 : 0.5 + 20.0 * rng.uniform();
  return DepthMap::from_values(w, h, std::move(v));
}

ModelPrediction pred(std::string id, DepthMap d, ScaleKind kind = ScaleKind::Metric) {
  return {std::move(id), std::move(d), kind, std::nullopt};
}

}  // namespace

TEST_CASE("interpolate at the weight boundaries") {
  SeededRng rng(1);
  const DepthMap gt = random_map(rng, 8, 6);
  const std::vector<ModelPrediction> one{pred("a", random_map(rng, 8, 6, 0.0))};

  const DepthMap at0 = interpolate(&gt, one, {{0.0}});
  CHECK(at0 == gt);
  const DepthMap at1 = interpolate(&gt, one, {{1.0}});
  CHECK(at1 == one[0].depth);
}

TEST_CASE("interpolate two models by hand") {
  const DepthMap gt = filled(2, 2, 2.0);
  const std::vector<ModelPrediction> preds{pred("r1", filled(2, 2, 4.0)), pred("r2", filled(2, 2, 8.0))};
  const DepthMap d = interpolate(&gt, preds, {{0.25, 0.25}});
  // 0.25 * 4 + 0.25 * 8 + 0.5 * 2
  for (std::size_t i = 0; i < 4; ++i) CHECK(d.value(i) == 4.0);
}

TEST_CASE("interpolate masks and weight errors") {
  DepthMap gt = filled(3, 1, 2.0);
  gt.invalidate(0);
  DepthMap r = filled(3, 1, 4.0);
  r.invalidate(2);
  const std::vector<ModelPrediction> preds{pred("m", r)};
  const DepthMap mixed = interpolate(&gt, preds, {{0.5}});
  CHECK(mixed.valid_count() == 1);
  CHECK(mixed.value(1) == 3.0);
  // A source with zero weight does not restrict the mask.
  CHECK(interpolate(&gt, preds, {{0.0}}).valid_count() == 2);

  CHECK(code_of([&] { interpolate(&gt, preds, {{1.0 + 1e-9}}); }) == ErrorCode::WeightError);
  CHECK(code_of([&] { interpolate(nullptr, preds, {{0.5}}); }) == ErrorCode::WeightError);
  CHECK(code_of([&] { interpolate(&gt, preds, {{0.5, 0.1}}); }) == ErrorCode::WeightError);
  CHECK(code_of([&] { interpolate(&gt, preds, {{-0.1}}); }) == ErrorCode::WeightError);
  const std::vector<ModelPrediction> wrong{pred("wide", filled(4, 1, 1.0))};
  try {
    interpolate(&gt, wrong, {{0.5}});
    FAIL("expected ShapeError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeError);
    CHECK(std::string(e.what()).find("wide") != std::string::npos);
  }
  CHECK(interpolate(nullptr, preds, {{1.0}}) == r);
}

TEST_CASE("relocate") {
  const DepthMap d = DepthMap::from_values(3, 1, {1, 2, 3});
  const DepthMap r = relocate(d, {2.0});
  CHECK(r.value(0) == 2.0);
  CHECK(r.value(1) == 4.0);
  CHECK(r.value(2) == 6.0);
  CHECK(relocate(d, {1.0}) == d);
  CHECK(code_of([&] { relocate(d, {0.0}); }) == ErrorCode::FactorError);
  CHECK(code_of([&] { relocate(d, {-1.0}); }) == ErrorCode::FactorError);

  SeededRng rng(5);
  const DepthMap m = random_map(rng, 7, 7);
  const DepthMap ab = relocate(relocate(m, {1.7}), {0.6});
  const DepthMap direct = relocate(m, {1.7 * 0.6});
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m.is_valid(i)) CHECK(std::abs(ab.value(i) - direct.value(i)) <= 1e-12 * direct.value(i));
  }
}

TEST_CASE("one-hot branch is a fair coin between gt and model") {
  SynthesisConfig cfg;
  cfg.p_interpolation = 0.0;
  SeededRng rng(2024);
  const int n = 100000;
  int gt_picks = 0;
  for (int i = 0; i < n; ++i) {
    const MixDraw d = draw_mix(rng, 1, true, cfg);
    REQUIRE_FALSE(d.interpolated);
    REQUIRE(d.weights.lambdas.size() == 1);
    const double l = d.weights.lambdas[0];
    REQUIRE((l == 0.0 || l == 1.0));
    gt_picks += l == 0.0 ? 1 : 0;
  }
  // Binomial(n, 1/2): mean n/2, sigma sqrt(n)/2.
  const double sigma = std::sqrt(static_cast<double>(n)) / 2.0;
  CHECK(std::abs(gt_picks - n / 2.0) <= 3.0 * sigma);
}

TEST_CASE("simplex draws stay on the simplex") {
  SynthesisConfig cfg;
  SeededRng rng(9);
  for (int i = 0; i < 20000; ++i) {
    const std::size_t models = 1 + static_cast<std::size_t>(i % 4);
    const bool labeled = i % 3 != 0;
    const MixDraw d = draw_mix(rng, models, labeled, cfg);
    REQUIRE(d.interpolated);
    double sum = 0.0;
    for (double l : d.weights.lambdas) {
      REQUIRE(l >= 0.0);
      REQUIRE(l <= 1.0);
      sum += l;
    }
    REQUIRE(sum <= 1.0);
    if (!labeled) REQUIRE(sum == 1.0);
  }
  CHECK(code_of([&] { draw_mix(rng, 0, true, cfg); }) == ErrorCode::ConfigError);
}

TEST_CASE("theta draws") {
  SynthesisConfig cfg;
  SeededRng rng(77);
  std::vector<double> draws(100000);
  for (auto& t : draws) {
    t = draw_theta(rng, cfg).theta;
    REQUIRE(t >= 0.5);
    REQUIRE(t <= 2.0);
  }
  std::nth_element(draws.begin(), draws.begin() + draws.size() / 2, draws.end());
  // The range is symmetric in log space, so the median is sqrt(0.5 * 2) = 1.
  CHECK(std::abs(draws[draws.size() / 2] - 1.0) <= 0.02);

  SynthesisConfig off = cfg;
  off.relocation = false;
  SeededRng a(3), b(3);
  CHECK(draw_theta(a, off).theta == 1.0);
  CHECK(a.next_u64() == b.next_u64());

  SynthesisConfig fixed = cfg;
  fixed.theta_min = fixed.theta_max = 1.3;
  for (int i = 0; i < 100; ++i) CHECK(draw_theta(rng, fixed).theta == 1.3);

  SynthesisConfig bad = cfg;
  bad.theta_min = 0.0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::ConfigError);
  bad.theta_min = 3.0;
  CHECK(code_of([&] { draw_theta(rng, bad); }) == ErrorCode::ConfigError);
}

TEST_CASE("all knobs at identity return the ground truth") {
  SeededRng rng(4);
  const DepthMap gt = random_map(rng, 10, 8);
  const std::vector<ModelPrediction> preds{pred("m", random_map(rng, 10, 8, 0.0))};
  SynthesisConfig cfg;
  cfg.p_interpolation = 0.0;
  cfg.relocation = false;
  int gt_branch = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const SynthesisResult r = synthesize_label("img", &gt, preds, cfg, seed);
    CHECK_FALSE(r.provenance.interpolated);
    CHECK(r.provenance.theta.theta == 1.0);
    if (r.provenance.weights.lambdas[0] == 0.0) {
      ++gt_branch;
      CHECK(r.label == gt);
    } else {
      CHECK(r.label == preds[0].depth);
    }
  }
  CHECK(gt_branch > 0);
}

TEST_CASE("synthesis is deterministic per seed") {
  SeededRng rng(8);
  const DepthMap gt = random_map(rng, 12, 9);
  std::vector<double> rel(12 * 9);
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = 0.1 + 0.05 * (gt.is_valid(i) ? gt.value(i) : 3.0);
  const std::vector<ModelPrediction> preds{
      pred("metric", random_map(rng, 12, 9, 0.0)),
      pred("relative", DepthMap::from_values(12, 9, rel), ScaleKind::Relative)};
  SynthesisConfig cfg;
  const SynthesisResult a = synthesize_label("x", &gt, preds, cfg, 99);
  const SynthesisResult b = synthesize_label("x", &gt, preds, cfg, 99);
  CHECK(a.label == b.label);
  CHECK(a.provenance == b.provenance);
  CHECK(a.provenance.alignment[1].applied == AlignmentMode::AffineLsq);
  CHECK(a.provenance.alignment[1].reference == "gt");
  CHECK(a.provenance.alignment[0].applied == AlignmentMode::None);
  const SynthesisResult c = synthesize_label("x", &gt, preds, cfg, 100);
  CHECK_FALSE(c.provenance.weights == a.provenance.weights);

  // The model filter drops predictions before anything is drawn.
  SynthesisConfig only = cfg;
  only.models = {"metric"};
  const SynthesisResult f = synthesize_label("x", &gt, preds, only, 99);
  CHECK(f.provenance.model_ids == std::vector<std::string>{"metric"});
}

TEST_CASE("unlabeled image with one model and no relocation") {
  SeededRng rng(12);
  const std::vector<ModelPrediction> preds{pred("m", random_map(rng, 6, 6, 0.0))};
  SynthesisConfig cfg;
  cfg.relocation = false;
  const SynthesisResult r = synthesize_label("u", nullptr, preds, cfg, 1);
  CHECK(r.label == preds[0].depth);
  CHECK(r.provenance.weights.lambdas == std::vector<double>{1.0});
  CHECK_FALSE(r.provenance.labeled);

  CHECK(code_of([&] { synthesize_label("u", nullptr, {}, cfg, 1); }) == ErrorCode::ConfigError);
}

TEST_CASE("relative prediction on an unlabeled image aligns to the metric one") {
  SeededRng rng(13);
  const DepthMap metric = random_map(rng, 6, 6, 0.0);
  std::vector<double> rel(36);
  for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = 0.5 * metric.value(i) + 1.0;
  const std::vector<ModelPrediction> preds{pred("rel", DepthMap::from_values(6, 6, rel), ScaleKind::Relative),
                                           pred("met", metric)};
  SynthesisConfig cfg;
  cfg.relocation = false;
  const SynthesisResult r = synthesize_label("u", nullptr, preds, cfg, 5);
  CHECK(r.provenance.alignment[0].reference == "met");
  CHECK(r.provenance.alignment[0].scale == doctest::Approx(2.0));
  for (std::size_t i = 0; i < 36; ++i) CHECK(r.label.value(i) == doctest::Approx(metric.value(i)));
}

TEST_CASE("convex hull and standardized shape under relocation") {
  SeededRng rng(21);
  SynthesisConfig mix;
  mix.relocation = false;
  for (int trial = 0; trial < 50; ++trial) {
    const DepthMap gt = random_map(rng, 9, 7);
    const std::vector<ModelPrediction> preds{pred("a", random_map(rng, 9, 7)),
                                             pred("b", random_map(rng, 9, 7)),
                                             pred("c", random_map(rng, 9, 7))};
    const SynthesisResult r = synthesize_label("c", &gt, preds, mix, trial);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (!r.label.is_valid(i)) continue;
      double lo = gt.value(i), hi = gt.value(i);
      for (const auto& p : preds) {
        lo = std::min(lo, p.depth.value(i));
        hi = std::max(hi, p.depth.value(i));
      }
      REQUIRE(r.label.value(i) >= lo);
      REQUIRE(r.label.value(i) <= hi);
    }
    const MaskedGrid base = standardize(r.label);
    for (double theta : {0.5, 1.0, 2.0, 3.7}) {
      const MaskedGrid s = standardize(relocate(r.label, {theta}));
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.is_valid(i)) REQUIRE(std::abs(s.value(i) - base.value(i)) <= 1e-9);
      }
    }
  }
}

TEST_CASE("depth_max only warns") {
  const DepthMap gt = filled(3, 3, 10.0);
  SynthesisConfig cfg;
  cfg.theta_min = cfg.theta_max = 2.0;
  cfg.depth_max = 15.0;
  const SynthesisResult r = synthesize_label("w", &gt, {}, cfg, 0);
  CHECK(r.label.value(0) == 20.0);
  CHECK(r.provenance.warnings.size() == 1);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0, 1, 2}) {
    for (const char* tag : {"a", "b", "scene_000001"}) {
      for (std::uint64_t i = 0; i < 4; ++i) seen.insert(derive_seed(base, tag, i));
    }
  }
  CHECK(seen.size() == 36);
  SeededRng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}
