#include "depthsynth/camera.hpp"

#include <cmath>

#include "depthsynth/error.hpp"

namespace depthsynth {

void CameraIntrinsics::validate() const {
  if (!(std::isfinite(fx) && fx > 0.0) || !(std::isfinite(fy) && fy > 0.0)) {
    throw Error(ErrorCode::ConfigError, "focal lengths must be finite and positive");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw Error(ErrorCode::ConfigError, "principal point must be finite");
  }
}

PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& k) {
  k.validate();
  const std::size_t w = depth.width();
  PointCloud cloud;
  cloud.points.reserve(depth.valid_count());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.is_valid(i)) continue;
    const double d = depth.value(i);
    const double u = static_cast<double>(i % w);
    const double v = static_cast<double>(i / w);
    cloud.points.push_back({d * k.ray_x(u), d * k.ray_y(v), d, i});
  }
  if (cloud.points.empty()) {
    throw Error(ErrorCode::EmptyDepth, "unproject: depth map has no valid pixels");
  }
  return cloud;
}

}  // namespace depthsynth
