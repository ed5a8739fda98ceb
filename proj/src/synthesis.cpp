#include "depthsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

// Weights live on a 2^-53 lattice; see draw_mix.
constexpr std::uint64_t kSimplexResolution = std::uint64_t{1} << 53;
constexpr double kSimplexUnit = 0x1.0p-53;
constexpr double kWeightTolerance = 1e-12;

std::string shape_string(const DepthMap& d) {
  return std::to_string(d.width()) + "x" + std::to_string(d.height());
}

}  // namespace

std::string_view to_string(ScaleKind kind) {
  return kind == ScaleKind::Relative ? "relative" : "metric";
}

ScaleKind parse_scale_kind(std::string_view text) {
  if (text == "relative") return ScaleKind::Relative;
  if (text == "metric") return ScaleKind::Metric;
  throw Error(ErrorCode::ConfigError, "unknown scale kind '" + std::string(text) + "'");
}

double MixWeights::model_sum() const noexcept {
  double sum = 0.0;
  for (const double l : lambdas) sum += l;
  return sum;
}

void SynthesisConfig::validate() const {
  if (!(p_interpolation >= 0.0 && p_interpolation <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "p_interpolation must lie in [0, 1]");
  }
  if (!(std::isfinite(theta_min) && std::isfinite(theta_max) && theta_min > 0.0 &&
        theta_min <= theta_max)) {
    throw Error(ErrorCode::ConfigError, "theta range must satisfy 0 < theta_min <= theta_max");
  }
  if (depth_max && !(*depth_max > 0.0)) {
    throw Error(ErrorCode::ConfigError, "depth_max must be positive");
  }
}

DepthMap interpolate(const DepthMap* gt, std::span<const ModelPrediction> preds,
                     const MixWeights& weights) {
  if (weights.lambdas.size() != preds.size()) {
    throw Error(ErrorCode::WeightError, "interpolate: " + std::to_string(weights.lambdas.size()) +
                                            " weights for " + std::to_string(preds.size()) +
                                            " predictions");
  }
  if (preds.empty() && gt == nullptr) {
    throw Error(ErrorCode::WeightError, "interpolate: no sources");
  }
  const DepthMap& shape_ref = gt != nullptr ? *gt : preds.front().depth;
  for (const auto& p : preds) {
    if (!p.depth.same_shape(shape_ref)) {
      throw Error(ErrorCode::ShapeError, "prediction '" + p.model_id + "' is " +
                                             shape_string(p.depth) + ", expected " +
                                             shape_string(shape_ref));
    }
  }
  for (const double l : weights.lambdas) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw Error(ErrorCode::WeightError, "interpolation weights must lie in [0, 1]");
    }
  }
  const double sum = weights.model_sum();
  if (sum > 1.0 + kWeightTolerance) {
    throw Error(ErrorCode::WeightError, "model weights sum to more than one");
  }
  if (gt == nullptr && sum < 1.0 - kWeightTolerance) {
    throw Error(ErrorCode::WeightError,
                "without ground truth the model weights must sum to exactly one");
  }
  const double gt_weight = gt == nullptr ? 0.0 : std::max(0.0, 1.0 - sum);

  std::vector<const DepthMap*> sources;
  std::vector<double> w;
  for (std::size_t t = 0; t < preds.size(); ++t) {
    if (weights.lambdas[t] > 0.0) {
      sources.push_back(&preds[t].depth);
      w.push_back(weights.lambdas[t]);
    }
  }
  const bool use_gt = gt != nullptr && gt_weight > 0.0;

  DepthMap out(shape_ref.width(), shape_ref.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (use_gt && !gt->is_valid(i)) continue;
    bool valid = true;
    for (const DepthMap* s : sources) {
      if (!s->is_valid(i)) {
        valid = false;
        break;
      }
    }
    if (!valid) continue;

    double acc = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const double v = sources[s]->value(i);
      acc += w[s] * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (use_gt) {
      const double v = gt->value(i);
      acc += gt_weight * v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out.set(i, std::clamp(acc, lo, hi));
  }
  return out;
}

DepthMap relocate(const DepthMap& depth, RelocationFactor theta) {
  if (!(theta.theta > 0.0) || !std::isfinite(theta.theta)) {
    throw Error(ErrorCode::FactorError, "relocation factor must be finite and positive");
  }
  DepthMap out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.is_valid(i)) out.set(i, theta.theta * depth.value(i));
  }
  return out;
}

MixDraw draw_mix(SeededRng& rng, std::size_t num_models, bool labeled,
                 const SynthesisConfig& cfg) {
  if (num_models == 0) {
    throw Error(ErrorCode::ConfigError, "draw_mix needs at least one model");
  }
  MixDraw draw;
  draw.weights.lambdas.assign(num_models, 0.0);
  draw.interpolated = rng.uniform() < cfg.p_interpolation;

  if (draw.interpolated) {
    // Sorted uniform cut points on the integer lattice [0, 2^53]; the gaps are
    // uniform on the simplex and convert to doubles without rounding.
    const std::size_t parts = labeled ? num_models + 1 : num_models;
    std::vector<std::uint64_t> cuts(parts - 1);
    for (auto& c : cuts) c = rng.below(kSimplexResolution + 1);
    std::sort(cuts.begin(), cuts.end());
    std::uint64_t prev = 0;
    for (std::size_t t = 0; t < num_models; ++t) {
      const std::uint64_t next = t < cuts.size() ? cuts[t] : kSimplexResolution;
      draw.weights.lambdas[t] = static_cast<double>(next - prev) * kSimplexUnit;
      prev = next;
    }
    return draw;
  }

  const std::size_t choices = labeled ? num_models + 1 : num_models;
  const std::uint64_t pick = rng.below(choices);
  if (pick < num_models) draw.weights.lambdas[pick] = 1.0;
  return draw;
}

RelocationFactor draw_theta(SeededRng& rng, const SynthesisConfig& cfg) {
  cfg.validate();
  if (!cfg.relocation) return {1.0};
  return {rng.log_uniform(cfg.theta_min, cfg.theta_max)};
}

SynthesisResult synthesize_label(std::string_view image_id, const DepthMap* gt,
                                 std::span<const ModelPrediction> preds,
                                 const SynthesisConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  std::vector<const ModelPrediction*> used;
  for (const auto& p : preds) {
    if (cfg.models.empty() ||
        std::find(cfg.models.begin(), cfg.models.end(), p.model_id) != cfg.models.end()) {
      used.push_back(&p);
    }
  }
  if (gt == nullptr && used.empty()) {
    throw Error(ErrorCode::ConfigError, "image '" + std::string(image_id) +
                                            "' has neither ground truth nor usable predictions");
  }

  const DepthMap& shape_ref = gt != nullptr ? *gt : used.front()->depth;
  for (const ModelPrediction* p : used) {
    if (!p->depth.same_shape(shape_ref)) {
      throw Error(ErrorCode::ShapeError, "prediction '" + p->model_id + "' is " +
                                             shape_string(p->depth) + ", expected " +
                                             shape_string(shape_ref));
    }
  }

  SynthesisProvenance prov;
  prov.image_id = std::string(image_id);
  prov.seed = seed;
  prov.labeled = gt != nullptr;

  // Unlabeled images borrow the first metric prediction as the reference.
  const DepthMap* reference = gt;
  std::string reference_name = gt != nullptr ? "gt" : "";
  const ModelPrediction* reference_pred = nullptr;
  if (reference == nullptr) {
    for (const ModelPrediction* p : used) {
      if (p->scale_kind == ScaleKind::Metric) {
        reference_pred = p;
        reference = &p->depth;
        reference_name = p->model_id;
        break;
      }
    }
  }

  std::vector<ModelPrediction> aligned;
  aligned.reserve(used.size());
  for (const ModelPrediction* p : used) {
    ModelAlignment rec;
    rec.model_id = p->model_id;
    rec.requested = p->alignment.value_or(cfg.default_alignment(p->scale_kind));
    ModelPrediction a{p->model_id, {}, p->scale_kind, p->alignment};
    if (rec.requested == AlignmentMode::None || reference == nullptr || p == reference_pred) {
      rec.applied = AlignmentMode::None;
      rec.reference = reference == nullptr ? "" : reference_name;
      a.depth = p->depth;
    } else {
      AlignmentResult r = affine_align(p->depth, *reference, rec.requested);
      rec.applied = r.applied;
      rec.scale = r.scale;
      rec.shift = r.shift;
      rec.fell_back = r.fell_back;
      rec.reference = reference_name;
      a.depth = std::move(r.aligned);
      if (r.fell_back) {
        prov.warnings.push_back("model '" + p->model_id +
                                "' has zero variance on the overlap; used median_scale");
      }
    }
    prov.model_ids.push_back(p->model_id);
    prov.alignment.push_back(std::move(rec));
    aligned.push_back(std::move(a));
  }

  SeededRng rng(seed);
  if (aligned.empty()) {
    prov.interpolated = false;
  } else {
    MixDraw draw = draw_mix(rng, aligned.size(), gt != nullptr, cfg);
    prov.weights = std::move(draw.weights);
    prov.interpolated = draw.interpolated;
  }

  DepthMap mixed = interpolate(gt, aligned, prov.weights);
  prov.theta = draw_theta(rng, cfg);
  DepthMap label = relocate(mixed, prov.theta);

  const std::size_t valid = label.valid_count();
  if (valid == 0) {
    throw Error(ErrorCode::EmptyResult,
                "image '" + std::string(image_id) + "' produced a label with no valid pixels");
  }
  if (cfg.depth_max) {
    double max_depth = 0.0;
    for (std::size_t i = 0; i < label.size(); ++i) {
      if (label.is_valid(i)) max_depth = std::max(max_depth, label.value(i));
    }
    if (max_depth > *cfg.depth_max) {
      std::ostringstream msg;
      msg << "relocated maximum depth " << max_depth << " m exceeds depth_max "
          << *cfg.depth_max << " m";
      prov.warnings.push_back(msg.str());
    }
  }
  return {std::move(label), std::move(prov)};
}

}  // namespace depthsynth
