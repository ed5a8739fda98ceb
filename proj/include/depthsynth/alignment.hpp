#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "depthsynth/depth_map.hpp"

namespace depthsynth {

enum class AlignmentMode { None, MedianScale, AffineLsq };

std::string_view to_string(AlignmentMode mode);
/// Accepts "none", "median_scale", "affine_lsq"; throws ConfigError otherwise.
AlignmentMode parse_alignment_mode(std::string_view text);

struct AlignmentResult {
  DepthMap aligned;
  AlignmentMode requested = AlignmentMode::None;
  AlignmentMode applied = AlignmentMode::None;
  double scale = 1.0;
  double shift = 0.0;
  /// Set when affine_lsq met a zero-variance source and fell back to
  /// median_scale.
  bool fell_back = false;
};

/// Brings src into the units of ref using the pixels valid in both.
///
/// median_scale multiplies by median(ref) / median(src). affine_lsq fits
/// (a, b) minimizing sum (a * src + b - ref)^2; outputs that are not strictly
/// positive become invalid. The fit applies to every valid src pixel, not
/// only the overlap. Throws ShapeError on shape mismatch and
/// InsufficientOverlap when fewer than two pixels are shared.
AlignmentResult affine_align(const DepthMap& src, const DepthMap& ref, AlignmentMode mode);

}  // namespace depthsynth
