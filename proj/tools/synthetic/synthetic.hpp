#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>

#include "depthsynth/camera.hpp"
#include "depthsynth/depth_map.hpp"
#include "depthsynth/manifest.hpp"
#include "depthsynth/samplers.hpp"

namespace depthsynth::synthetic {

/// Tilted plane with Gaussian bumps and a few rectangular holes.
DepthMap scene_depth(std::size_t width, std::size_t height, std::uint64_t seed);

/// Shaded depth with a checker texture so corner detectors have something to find.
GrayImage scene_image(const DepthMap& depth, std::uint64_t seed);

CameraIntrinsics scene_intrinsics(std::size_t width, std::size_t height);

struct DatasetOptions {
  std::size_t count = 10;
  std::size_t width = 64;
  std::size_t height = 48;
  std::uint64_t seed = 1;
  /// Every k-th entry (k > 0) is written without ground truth.
  std::size_t unlabeled_every = 0;
  bool metric_prediction = true;
  bool relative_prediction = true;
};

/// Writes images/, depth/, pred/ and manifest.json under dir and returns the
/// manifest as written.
Manifest generate_dataset(const std::filesystem::path& dir, const DatasetOptions& options);

}  // namespace depthsynth::synthetic
