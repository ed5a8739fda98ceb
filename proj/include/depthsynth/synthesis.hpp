#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "depthsynth/alignment.hpp"
#include "depthsynth/depth_map.hpp"
#include "depthsynth/rng.hpp"

namespace depthsynth {

enum class ScaleKind { Relative, Metric };

std::string_view to_string(ScaleKind kind);
ScaleKind parse_scale_kind(std::string_view text);

/// Precomputed dense prediction of one monocular depth model.
struct ModelPrediction {
  std::string model_id;
  DepthMap depth;
  ScaleKind scale_kind = ScaleKind::Metric;
  /// Overrides the per-kind default of SynthesisConfig when set.
  std::optional<AlignmentMode> alignment;
};

/// Per-model interpolation weights, parallel to the prediction list. The
/// ground-truth weight is whatever the models leave over.
struct MixWeights {
  std::vector<double> lambdas;

  double model_sum() const noexcept;
  double gt_weight() const noexcept { return 1.0 - model_sum(); }

  friend bool operator==(const MixWeights&, const MixWeights&) = default;
};

struct MixDraw {
  MixWeights weights;
  /// False when the one-hot branch was taken instead of a simplex draw.
  bool interpolated = true;
};

struct RelocationFactor {
  double theta = 1.0;
  friend bool operator==(const RelocationFactor&, const RelocationFactor&) = default;
};

struct SynthesisConfig {
  /// Model ids allowed to participate; empty means every prediction given.
  std::vector<std::string> models;
  double p_interpolation = 1.0;
  bool relocation = true;
  double theta_min = 0.5;
  double theta_max = 2.0;
  AlignmentMode relative_alignment = AlignmentMode::AffineLsq;
  AlignmentMode metric_alignment = AlignmentMode::None;
  /// Labels whose relocated maximum exceeds this get a provenance warning.
  std::optional<double> depth_max;

  /// Throws ConfigError on out-of-range knobs.
  void validate() const;
  AlignmentMode default_alignment(ScaleKind kind) const noexcept {
    return kind == ScaleKind::Relative ? relative_alignment : metric_alignment;
  }

  friend bool operator==(const SynthesisConfig&, const SynthesisConfig&) = default;
};

struct ModelAlignment {
  std::string model_id;
  AlignmentMode requested = AlignmentMode::None;
  AlignmentMode applied = AlignmentMode::None;
  double scale = 1.0;
  double shift = 0.0;
  bool fell_back = false;
  /// "gt", the id of the metric prediction used, or empty when nothing could
  /// serve as a reference.
  std::string reference;

  friend bool operator==(const ModelAlignment&, const ModelAlignment&) = default;
};

struct SynthesisProvenance {
  std::string image_id;
  std::uint64_t seed = 0;
  bool labeled = false;
  std::vector<std::string> model_ids;
  MixWeights weights;
  RelocationFactor theta;
  std::vector<ModelAlignment> alignment;
  bool interpolated = false;
  std::vector<std::string> warnings;

  friend bool operator==(const SynthesisProvenance&, const SynthesisProvenance&) = default;
};

struct SynthesisResult {
  DepthMap label;
  SynthesisProvenance provenance;
};

/// sum_t lambda_t * R_t + (1 - sum_t lambda_t) * gt over the pixels valid in
/// every source with a positive weight. Results are clamped to the range of
/// those sources so rounding never leaves their convex hull.
///
/// gt may be null for unlabeled images, in which case the weights must sum to
/// exactly one.
DepthMap interpolate(const DepthMap* gt, std::span<const ModelPrediction> preds,
                     const MixWeights& weights);

/// Scales every valid depth by theta. Throws FactorError unless theta > 0.
DepthMap relocate(const DepthMap& depth, RelocationFactor theta);

/// With probability p_interpolation draws weights uniformly on the simplex
/// over {models, gt} (labeled) or {models} (unlabeled); otherwise picks one
/// source uniformly. Weights are multiples of 2^-53, so every partial sum is
/// exact and the constraint sum <= 1 holds without rounding slack.
MixDraw draw_mix(SeededRng& rng, std::size_t num_models, bool labeled,
                 const SynthesisConfig& cfg);

/// Log-uniform on [theta_min, theta_max], or exactly 1 with relocation off.
RelocationFactor draw_theta(SeededRng& rng, const SynthesisConfig& cfg);

/// Full label synthesis: align, draw weights, interpolate, draw theta,
/// relocate. The result is a pure function of the inputs and seed.
SynthesisResult synthesize_label(std::string_view image_id, const DepthMap* gt,
                                 std::span<const ModelPrediction> preds,
                                 const SynthesisConfig& cfg, std::uint64_t seed);

}  // namespace depthsynth
