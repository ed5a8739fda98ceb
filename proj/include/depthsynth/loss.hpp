#pragma once

#include <cstddef>

#include "depthsynth/depth_map.hpp"

namespace depthsynth {

/// How the multi-scale gradient term is normalized.
enum class PyramidNormalization {
  /// Each level divided by its own count of valid gradient pixels.
  PerLevel,
  /// Every level divided by the full-resolution valid count.
  FullResolution,
};

struct LossOptions {
  PyramidNormalization normalization = PyramidNormalization::PerLevel;
  int levels = 4;  // pyramid levels r = 0 .. levels - 1
  double gradient_weight = 0.5;
};

struct LossBreakdown {
  double standardized_l1 = 0.0;  // unitless
  double absolute_l1 = 0.0;      // meters
  double gradient_term = 0.0;    // unitless
  double total = 0.0;
  std::size_t valid_count = 0;
};

/// |Sobel_x * m| + |Sobel_y * m| with replicated borders. An output pixel is
/// valid only if every pixel of its 3x3 window is. Throws ShapeError below 3x3.
MaskedGrid sobel_abs(const MaskedGrid& grid);

/// Nearest-neighbour downsample to ceil(h / 2^r) x ceil(w / 2^r), sampling the
/// top-left pixel of each 2^r block; the mask follows the same rule.
MaskedGrid pyramid_nn(const MaskedGrid& grid, int level);

/// Standardized L1 + absolute L1 + weighted multi-scale Sobel term of the
/// standardized residual, over pixels valid in both maps. Both maps are
/// standardized on that common mask. Pyramid levels smaller than 3x3 carry no
/// gradient and contribute zero.
///
/// Throws ShapeError on mismatched shapes and InsufficientValid when the label
/// (or the overlap) has fewer than two valid pixels.
LossBreakdown g2_loss(const DepthMap& pred, const DepthMap& label, const LossOptions& options = {});

struct L1L2Breakdown {
  double l1 = 0.0;
  double l2 = 0.0;
  double total = 0.0;
  std::size_t valid_count = 0;
};

/// Mean absolute plus mean squared error on the common mask.
L1L2Breakdown l1l2_loss(const DepthMap& pred, const DepthMap& label);

}  // namespace depthsynth
