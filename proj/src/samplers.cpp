#include "depthsynth/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::size_t kMaxLidarCells = std::size_t{1} << 26;

std::vector<std::size_t> valid_pixels(const DepthMap& depth) {
  std::vector<std::size_t> out;
  out.reserve(depth.valid_count());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.is_valid(i)) out.push_back(i);
  }
  return out;
}

void require_two_valid(std::size_t eta, std::string_view who) {
  if (eta < kMinSparsePoints) {
    throw Error(ErrorCode::InsufficientValid, std::string(who) + ": " + std::to_string(eta) +
                                                  " valid pixels, need at least 2");
  }
}

// Moves `count` uniformly chosen elements to the front of pool (partial
// Fisher-Yates). The first k picks do not depend on count.
void shuffle_prefix(std::vector<std::size_t>& pool, std::size_t count, SeededRng& rng) {
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < count && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(pool[i], pool[j]);
  }
}

SparseDepth make_sparse(const DepthMap& depth, std::vector<std::size_t> pixels) {
  std::sort(pixels.begin(), pixels.end());
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  SparseDepth out{depth.width(), depth.height(), {}};
  out.points.reserve(pixels.size());
  for (const std::size_t p : pixels) out.points.push_back({p, depth.value(p)});
  return out;
}

// Adds uniform picks among the valid pixels not yet chosen until `target`.
void fill_uniform(const DepthMap& depth, std::vector<std::size_t>& chosen, std::size_t target,
                  SeededRng& rng) {
  if (chosen.size() >= target) return;
  std::vector<std::uint8_t> taken(depth.size(), 0);
  for (const std::size_t p : chosen) taken[p] = 1;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.is_valid(i) && taken[i] == 0) pool.push_back(i);
  }
  const std::size_t need = std::min(target - chosen.size(), pool.size());
  shuffle_prefix(pool, need, rng);
  chosen.insert(chosen.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(need));
}

double percentile(std::vector<double> v, double pct) {
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const auto lo_it = v.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(v.begin(), lo_it, v.end());
  const double a = *lo_it;
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(lo_it + 1, v.end());
  return a + (pos - static_cast<double>(lo)) * (b - a);
}

void check_image_shape(const DepthMap& depth, const GrayImage& image) {
  if (image.width != depth.width() || image.height != depth.height() ||
      image.pixels.size() != image.width * image.height) {
    throw Error(ErrorCode::ShapeError, "image " + std::to_string(image.width) + "x" +
                                           std::to_string(image.height) +
                                           " does not match depth " +
                                           std::to_string(depth.width()) + "x" +
                                           std::to_string(depth.height()));
  }
}

// Separable Gaussian blur with replicated borders.
std::vector<double> gaussian_blur(const std::vector<double>& src, std::size_t w, std::size_t h,
                                  double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    norm += kernel[i + radius];
  }
  for (double& k : kernel) k /= norm;

  const auto clampi = [](long v, long hi) { return std::clamp(v, 0L, hi); };
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const auto xx = static_cast<std::size_t>(clampi(static_cast<long>(x) + i, long(w) - 1));
        acc += kernel[i + radius] * src[y * w + xx];
      }
      tmp[y * w + x] = acc;
    }
  }
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const auto yy = static_cast<std::size_t>(clampi(static_cast<long>(y) + i, long(h) - 1));
        acc += kernel[i + radius] * tmp[yy * w + x];
      }
      out[y * w + x] = acc;
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SamplerKind kind) {
  switch (kind) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::Lidar: return "lidar";
    case SamplerKind::Features: return "features";
  }
  return "uniform";
}

DepthMap SparseDepth::to_depth_map() const {
  DepthMap out(width, height);
  for (const auto& p : points) out.set(p.pixel, p.depth);
  return out;
}

SparseDepth SparseDepth::from_depth_map(const DepthMap& depth) {
  SparseDepth out{depth.width(), depth.height(), {}};
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.is_valid(i)) out.points.push_back({i, depth.value(i)});
  }
  return out;
}

void SamplerSpec::validate() const {
  if (const auto* u = std::get_if<UniformParams>(&params)) {
    if (u->rho && !(*u->rho > 0.0 && *u->rho <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "uniform rho must lie in (0, 1]");
    }
    if (!(u->rho_min > 0.0 && u->rho_min <= u->rho_max && u->rho_max <= 1.0)) {
      throw Error(ErrorCode::ConfigError, "uniform rho range must satisfy 0 < min <= max <= 1");
    }
  } else if (const auto* l = std::get_if<LidarParams>(&params)) {
    if (l->beams < 1) throw Error(ErrorCode::ConfigError, "lidar needs at least one beam");
    if (!(l->azimuth_resolution_deg > 0.0)) {
      throw Error(ErrorCode::ConfigError, "lidar azimuth resolution must be positive");
    }
    if (l->elevation_min_deg.has_value() != l->elevation_max_deg.has_value()) {
      throw Error(ErrorCode::ConfigError, "lidar elevation range needs both min and max");
    }
    if (l->elevation_min_deg && !(*l->elevation_min_deg <= *l->elevation_max_deg)) {
      throw Error(ErrorCode::ConfigError, "lidar elevation min exceeds max");
    }
    if (!(l->percentile_low >= 0.0 && l->percentile_low <= l->percentile_high &&
          l->percentile_high <= 100.0)) {
      throw Error(ErrorCode::ConfigError, "lidar percentiles must satisfy 0 <= low <= high <= 100");
    }
  } else {
    const auto& f = std::get<FeatureParams>(params);
    if (f.points < kMinSparsePoints) {
      throw Error(ErrorCode::ConfigError, "feature budget must be at least 2");
    }
    if (!(f.sigma > 0.0)) throw Error(ErrorCode::ConfigError, "feature sigma must be positive");
    if (!(f.response_threshold >= 0.0 && f.response_threshold < 1.0)) {
      throw Error(ErrorCode::ConfigError, "feature response threshold must lie in [0, 1)");
    }
  }
}

SparseDepth sample_uniform(const DepthMap& depth, double rho, SeededRng& rng) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw Error(ErrorCode::ConfigError, "uniform rho must lie in (0, 1]");
  }
  std::vector<std::size_t> pool = valid_pixels(depth);
  const std::size_t eta = pool.size();
  require_two_valid(eta, "sample_uniform");
  const auto rounded = static_cast<std::size_t>(std::llround(rho * static_cast<double>(eta)));
  const std::size_t count = std::min(eta, std::max(kMinSparsePoints, rounded));
  shuffle_prefix(pool, count, rng);
  pool.resize(count);
  return make_sparse(depth, std::move(pool));
}

double ray_elevation(const CameraIntrinsics& k, double u, double v) noexcept {
  const double x = k.ray_x(u);
  const double y = k.ray_y(v);
  return std::atan2(-y, std::sqrt(x * x + 1.0));
}

double ray_azimuth(const CameraIntrinsics& k, double u, double /*v*/) noexcept {
  return std::atan2(k.ray_x(u), 1.0);
}

LidarLayout lidar_layout(const DepthMap& depth, const CameraIntrinsics& k,
                         const LidarParams& params) {
  k.validate();
  SamplerSpec{params}.validate();
  const std::size_t w = depth.width();
  std::vector<double> elevations;
  double az_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.is_valid(i)) continue;
    const double u = static_cast<double>(i % w);
    const double v = static_cast<double>(i / w);
    elevations.push_back(ray_elevation(k, u, v));
    az_min = std::min(az_min, ray_azimuth(k, u, v));
  }
  if (elevations.empty()) {
    throw Error(ErrorCode::InsufficientValid, "lidar_layout: no valid pixels");
  }

  double lo = 0.0;
  double hi = 0.0;
  if (params.elevation_min_deg) {
    lo = *params.elevation_min_deg * kDegToRad;
    hi = *params.elevation_max_deg * kDegToRad;
  } else {
    lo = percentile(elevations, params.percentile_low);
    hi = percentile(std::move(elevations), params.percentile_high);
  }

  LidarLayout layout;
  layout.azimuth_min = az_min;
  layout.azimuth_bin = params.azimuth_resolution_deg * kDegToRad;
  const std::size_t beams = params.beams;
  // A zero-width span still needs a positive acceptance window.
  const double span = std::max(hi - lo, 1e-9);
  if (beams == 1) {
    layout.beam_elevations = {0.5 * (lo + hi)};
    layout.spacing = span;
  } else {
    layout.spacing = span / static_cast<double>(beams - 1);
    for (std::size_t b = 0; b < beams; ++b) {
      layout.beam_elevations.push_back(lo + static_cast<double>(b) * layout.spacing);
    }
  }
  return layout;
}

SparseDepth sample_lidar(const DepthMap& depth, const CameraIntrinsics& k,
                         const LidarParams& params, SeededRng& rng) {
  require_two_valid(depth.valid_count(), "sample_lidar");
  const LidarLayout layout = lidar_layout(depth, k, params);
  const std::size_t w = depth.width();
  const std::size_t beams = layout.beam_elevations.size();
  const double first = layout.beam_elevations.front();
  const double half = 0.5 * layout.spacing;

  double az_max = layout.azimuth_min;
  for (std::size_t x = 0; x < w; ++x) {
    az_max = std::max(az_max, ray_azimuth(k, static_cast<double>(x), 0.0));
  }
  const auto bins = static_cast<std::size_t>(
                        std::floor((az_max - layout.azimuth_min) / layout.azimuth_bin)) +
                    1;
  if (bins > kMaxLidarCells / beams) {
    throw Error(ErrorCode::ConfigError, "lidar azimuth resolution too fine for this frame");
  }

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::pair<double, std::size_t>> best(beams * bins, {half, kNone});
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.is_valid(i)) continue;
    const double u = static_cast<double>(i % w);
    const double v = static_cast<double>(i / w);
    const double elev = ray_elevation(k, u, v);
    const double slot = std::round((elev - first) / layout.spacing);
    if (slot < 0.0 || slot > static_cast<double>(beams - 1)) continue;
    const auto b = static_cast<std::size_t>(slot);
    const double dev = std::abs(elev - layout.beam_elevations[b]);
    if (!(dev < half)) continue;
    const auto bin = static_cast<std::size_t>(
        std::floor((ray_azimuth(k, u, v) - layout.azimuth_min) / layout.azimuth_bin));
    auto& cell = best[b * bins + std::min(bin, bins - 1)];
    // Cells start at the acceptance bound; pixels arrive in index order, so
    // ties keep the lower index.
    if (dev < cell.first) cell = {dev, i};
  }

  std::vector<std::size_t> chosen;
  for (const auto& cell : best) {
    if (cell.second != kNone) chosen.push_back(cell.second);
  }
  std::sort(chosen.begin(), chosen.end());
  chosen.erase(std::unique(chosen.begin(), chosen.end()), chosen.end());
  fill_uniform(depth, chosen, kMinSparsePoints, rng);
  return make_sparse(depth, std::move(chosen));
}

std::vector<double> harris_response(const GrayImage& image, double sigma, double k) {
  const std::size_t w = image.width;
  const std::size_t h = image.height;
  const auto& px = image.pixels;
  const auto at = [&](long x, long y) {
    x = std::clamp(x, 0L, static_cast<long>(w) - 1);
    y = std::clamp(y, 0L, static_cast<long>(h) - 1);
    return px[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
  };
  std::vector<double> ixx(w * h);
  std::vector<double> iyy(w * h);
  std::vector<double> ixy(w * h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const long xl = static_cast<long>(x);
      const long yl = static_cast<long>(y);
      const double gx = (at(xl + 1, yl - 1) + 2.0 * at(xl + 1, yl) + at(xl + 1, yl + 1)) -
                        (at(xl - 1, yl - 1) + 2.0 * at(xl - 1, yl) + at(xl - 1, yl + 1));
      const double gy = (at(xl - 1, yl + 1) + 2.0 * at(xl, yl + 1) + at(xl + 1, yl + 1)) -
                        (at(xl - 1, yl - 1) + 2.0 * at(xl, yl - 1) + at(xl + 1, yl - 1));
      const std::size_t i = y * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  const auto sxx = gaussian_blur(ixx, w, h, sigma);
  const auto syy = gaussian_blur(iyy, w, h, sigma);
  const auto sxy = gaussian_blur(ixy, w, h, sigma);
  std::vector<double> response(w * h);
  for (std::size_t i = 0; i < response.size(); ++i) {
    const double trace = sxx[i] + syy[i];
    response[i] = sxx[i] * syy[i] - sxy[i] * sxy[i] - k * trace * trace;
  }
  return response;
}

SparseDepth sample_features(const DepthMap& depth, const GrayImage& image,
                            const FeatureParams& params, SeededRng& rng) {
  SamplerSpec{params}.validate();
  check_image_shape(depth, image);
  const std::size_t eta = depth.valid_count();
  require_two_valid(eta, "sample_features");
  const std::size_t target = std::min(params.points, eta);

  const auto response = harris_response(image, params.sigma, params.harris_k);
  double max_response = 0.0;
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (depth.is_valid(i)) max_response = std::max(max_response, response[i]);
  }

  std::vector<std::size_t> candidates;
  if (max_response > 0.0) {
    const double floor_value = params.response_threshold * max_response;
    for (std::size_t i = 0; i < depth.size(); ++i) {
      if (depth.is_valid(i) && response[i] > 0.0 && response[i] >= floor_value) {
        candidates.push_back(i);
      }
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      return response[a] != response[b] ? response[a] > response[b] : a < b;
    });
  }

  const std::size_t w = depth.width();
  const std::size_t h = depth.height();
  const long r = static_cast<long>(params.nms_radius);
  std::vector<std::uint8_t> suppressed(depth.size(), 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(target);
  for (const std::size_t c : candidates) {
    if (chosen.size() >= target) break;
    if (suppressed[c] != 0) continue;
    chosen.push_back(c);
    const long cx = static_cast<long>(c % w);
    const long cy = static_cast<long>(c / w);
    for (long dy = -r; dy <= r; ++dy) {
      const long y = cy + dy;
      if (y < 0 || y >= static_cast<long>(h)) continue;
      for (long dx = -r; dx <= r; ++dx) {
        const long x = cx + dx;
        if (x < 0 || x >= static_cast<long>(w) || dx * dx + dy * dy > r * r) continue;
        suppressed[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = 1;
      }
    }
  }
  fill_uniform(depth, chosen, target, rng);
  return make_sparse(depth, std::move(chosen));
}

SampleResult sample(const DepthMap& depth, const SamplerSpec& spec, const CameraIntrinsics* k,
                    const GrayImage* image, SeededRng& rng) {
  spec.validate();
  SampleResult result;
  switch (spec.kind()) {
    case SamplerKind::Uniform: {
      const auto& p = std::get<UniformParams>(spec.params);
      const double rho = p.rho ? *p.rho : rng.log_uniform(p.rho_min, p.rho_max);
      result.rho = rho;
      result.sparse = sample_uniform(depth, rho, rng);
      break;
    }
    case SamplerKind::Lidar:
      if (k == nullptr) throw Error(ErrorCode::ConfigError, "lidar sampler needs intrinsics");
      result.sparse = sample_lidar(depth, *k, std::get<LidarParams>(spec.params), rng);
      break;
    case SamplerKind::Features:
      if (image == nullptr) throw Error(ErrorCode::ConfigError, "feature sampler needs an image");
      result.sparse = sample_features(depth, *image, std::get<FeatureParams>(spec.params), rng);
      break;
  }
  return result;
}

}  // namespace depthsynth
