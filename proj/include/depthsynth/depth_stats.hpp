#pragma once

#include <cstddef>

#include "depthsynth/depth_map.hpp"

namespace depthsynth {

/// Guard on the mean absolute deviation used by standardize (meters).
inline constexpr double kStandardizeEpsilon = 1e-6;

struct ImageStats {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double mad = 0.0;  // mean absolute deviation about the mean
  std::size_t valid_count = 0;
};

/// Moments over valid pixels only. Throws EmptyDepth when nothing is valid.
ImageStats image_stats(const MaskedGrid& grid);
inline ImageStats image_stats(const DepthMap& depth) { return image_stats(depth.grid()); }

/// Mean-deviation standardization: (d - mean) / max(mad, eps) on valid pixels,
/// mask preserved. The result is affine invariant for positive scale.
MaskedGrid standardize(const MaskedGrid& grid, double eps = kStandardizeEpsilon);
inline MaskedGrid standardize(const DepthMap& depth, double eps = kStandardizeEpsilon) {
  return standardize(depth.grid(), eps);
}

}  // namespace depthsynth
