#pragma once

#include <cstddef>
#include <vector>

#include "depthsynth/depth_map.hpp"

namespace depthsynth {

/// Pinhole intrinsics in pixels. Camera frame: x right, y down, z forward.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Throws ConfigError unless fx, fy are finite and > 0 and cx, cy finite.
  void validate() const;

  /// Direction of the ray through pixel (u, v) scaled so that z == 1.
  double ray_x(double u) const noexcept { return (u - cx) / fx; }
  double ray_y(double v) const noexcept { return (v - cy) / fy; }

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

struct CameraPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::size_t pixel = 0;
};

struct PointCloud {
  std::vector<CameraPoint> points;
};

/// Back-projects every valid pixel i to d_i * K^-1 (u_i, v_i, 1)^T, in pixel
/// order. z equals the stored depth exactly. Throws EmptyDepth when no pixel is
/// valid.
PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& k);

}  // namespace depthsynth
