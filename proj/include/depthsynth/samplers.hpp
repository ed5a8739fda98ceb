#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "depthsynth/camera.hpp"
#include "depthsynth/depth_map.hpp"
#include "depthsynth/rng.hpp"

namespace depthsynth {

/// Fewest sparse points any sampler emits.
inline constexpr std::size_t kMinSparsePoints = 2;

struct SparsePoint {
  std::size_t pixel = 0;
  double depth = 0.0;
  friend bool operator==(const SparsePoint&, const SparsePoint&) = default;
};

/// Sparse metric depth. Points are sorted by pixel index and unique.
struct SparseDepth {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<SparsePoint> points;

  /// Dense map with only the sampled pixels valid.
  DepthMap to_depth_map() const;
  static SparseDepth from_depth_map(const DepthMap& depth);
};

/// Grayscale intensities in [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;
};

struct UniformParams {
  /// Fraction of valid pixels; drawn log-uniform in [rho_min, rho_max] per
  /// call when unset.
  std::optional<double> rho;
  double rho_min = 1e-4;
  double rho_max = 1.0;
  friend bool operator==(const UniformParams&, const UniformParams&) = default;
};

struct LidarParams {
  std::size_t beams = 64;
  double azimuth_resolution_deg = 0.2;
  /// Beam elevation span; defaults to percentiles of the observed elevations.
  std::optional<double> elevation_min_deg;
  std::optional<double> elevation_max_deg;
  double percentile_low = 2.0;
  double percentile_high = 98.0;
  friend bool operator==(const LidarParams&, const LidarParams&) = default;
};

struct FeatureParams {
  std::size_t points = 1500;
  std::size_t nms_radius = 5;
  double sigma = 1.5;
  double harris_k = 0.04;
  /// Corners below this fraction of the strongest response are ignored.
  double response_threshold = 0.01;
  friend bool operator==(const FeatureParams&, const FeatureParams&) = default;
};

enum class SamplerKind { Uniform, Lidar, Features };

std::string_view to_string(SamplerKind kind);

struct SamplerSpec {
  std::variant<UniformParams, LidarParams, FeatureParams> params;

  SamplerKind kind() const noexcept { return static_cast<SamplerKind>(params.index()); }
  /// Throws ConfigError on out-of-range parameters.
  void validate() const;

  static SamplerSpec uniform(std::optional<double> rho) { return {UniformParams{rho}}; }
  static SamplerSpec lidar(std::size_t beams) {
    LidarParams p;
    p.beams = beams;
    return {p};
  }
  static SamplerSpec features(std::size_t points) {
    FeatureParams p;
    p.points = points;
    return {p};
  }

  friend bool operator==(const SamplerSpec&, const SamplerSpec&) = default;
};

/// Exactly max(2, round(rho * eta)) distinct valid pixels: the prefix of a
/// seeded permutation of the valid pixels, so smaller fractions drawn with the
/// same seed are subsets of larger ones. Throws InsufficientValid if eta < 2.
SparseDepth sample_uniform(const DepthMap& depth, double rho, SeededRng& rng);

/// Beam geometry the LiDAR sampler uses for a given frame.
struct LidarLayout {
  std::vector<double> beam_elevations;  // radians, ascending
  double spacing = 0.0;                 // radians between adjacent beams
  double azimuth_min = 0.0;             // radians
  double azimuth_bin = 0.0;             // radians
};

/// Elevation of the ray through pixel (u, v): atan2(-y, sqrt(x^2 + z^2)).
double ray_elevation(const CameraIntrinsics& k, double u, double v) noexcept;
/// Azimuth of the ray through pixel (u, v): atan2(x, z).
double ray_azimuth(const CameraIntrinsics& k, double u, double v) noexcept;

LidarLayout lidar_layout(const DepthMap& depth, const CameraIntrinsics& k,
                         const LidarParams& params);

/// Simulated spinning LiDAR: per beam and azimuth bin keeps the pixel whose
/// elevation is closest to the beam and within half a beam spacing. Tops up to
/// two points with uniform picks when the scan yields fewer.
SparseDepth sample_lidar(const DepthMap& depth, const CameraIntrinsics& k,
                         const LidarParams& params, SeededRng& rng);

/// Harris corner response of the structure tensor smoothed with a Gaussian
/// window of the given sigma.
std::vector<double> harris_response(const GrayImage& image, double sigma, double k);

/// Greedy corner picks with non-maximum suppression, filled up with uniform
/// picks; emits exactly min(points, eta) samples.
SparseDepth sample_features(const DepthMap& depth, const GrayImage& image,
                            const FeatureParams& params, SeededRng& rng);

struct SampleResult {
  SparseDepth sparse;
  /// Fraction used by the uniform sampler (drawn when SamplerSpec has no rho).
  std::optional<double> rho;
};

/// Dispatches on spec.kind(). The LiDAR sampler needs intrinsics and the
/// feature sampler an image; a missing input is a ConfigError.
SampleResult sample(const DepthMap& depth, const SamplerSpec& spec, const CameraIntrinsics* k,
                    const GrayImage* image, SeededRng& rng);

}  // namespace depthsynth
