#include "synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "depthsynth/depth_io.hpp"
#include "depthsynth/rng.hpp"

namespace depthsynth::synthetic {

namespace fs = std::filesystem;

DepthMap scene_depth(std::size_t width, std::size_t height, std::uint64_t seed) {
  SeededRng rng(seed);
  const double base = 2.0 + 10.0 * rng.uniform();
  const double tilt_x = (rng.uniform() - 0.5) * 0.8 * base;
  const double tilt_y = rng.uniform() * 0.9 * base;
  struct Bump {
    double x, y, r, h;
  };
  std::vector<Bump> bumps(3 + rng.below(4));
  for (auto& b : bumps) {
    b = {rng.uniform(), rng.uniform(), 0.05 + 0.2 * rng.uniform(), (rng.uniform() - 0.6) * 0.5 * base};
  }
  DepthMap d(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (x + 0.5) / static_cast<double>(width);
      const double v = (y + 0.5) / static_cast<double>(height);
      double z = base + tilt_x * (u - 0.5) + tilt_y * (0.5 - v);
      for (const auto& b : bumps) {
        const double r2 = ((u - b.x) * (u - b.x) + (v - b.y) * (v - b.y)) / (b.r * b.r);
        z += b.h * std::exp(-0.5 * r2);
      }
      d.set(d.index(x, y), std::max(z, 0.3));
    }
  }
  const std::size_t holes = 1 + rng.below(3);
  for (std::size_t h = 0; h < holes; ++h) {
    const std::size_t hw = 1 + rng.below(std::max<std::size_t>(1, width / 8));
    const std::size_t hh = 1 + rng.below(std::max<std::size_t>(1, height / 8));
    const std::size_t x0 = rng.below(width);
    const std::size_t y0 = rng.below(height);
    for (std::size_t y = y0; y < std::min(height, y0 + hh); ++y) {
      for (std::size_t x = x0; x < std::min(width, x0 + hw); ++x) d.invalidate(d.index(x, y));
    }
  }
  return d;
}

GrayImage scene_image(const DepthMap& depth, std::uint64_t seed) {
  SeededRng rng(seed);
  const std::size_t cell = 4 + rng.below(5);
  GrayImage img{depth.width(), depth.height(), std::vector<double>(depth.size(), 0.0)};
  for (std::size_t y = 0; y < depth.height(); ++y) {
    for (std::size_t x = 0; x < depth.width(); ++x) {
      const std::size_t i = depth.index(x, y);
      const double shade = depth.is_valid(i) ? 1.0 / (1.0 + 0.1 * depth.value(i)) : 0.0;
      const bool checker = ((x / cell) + (y / cell)) % 2 == 0;
      img.pixels[i] = std::clamp(0.15 + 0.45 * shade + (checker ? 0.35 : 0.0) + 0.05 * rng.uniform(),
                                 0.0, 1.0);
    }
  }
  return img;
}

CameraIntrinsics scene_intrinsics(std::size_t width, std::size_t height) {
  const double f = 0.8 * static_cast<double>(width);
  return {f, f, 0.5 * static_cast<double>(width), 0.5 * static_cast<double>(height)};
}

Manifest generate_dataset(const fs::path& dir, const DatasetOptions& options) {
  for (const char* sub : {"images", "depth", "pred"}) fs::create_directories(dir / sub);
  Manifest m;
  m.base_dir = dir;
  for (std::size_t i = 0; i < options.count; ++i) {
    const std::uint64_t seed = derive_seed(options.seed, "scene", i);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "%06zu", i);
    const DepthMap gt = scene_depth(options.width, options.height, seed);
    SeededRng rng(derive_seed(seed, "pred", 0));

    ManifestEntry e;
    e.id = std::string("scene_") + stem;
    e.image_path = std::string("images/") + stem + ".png";
    e.intrinsics = scene_intrinsics(options.width, options.height);
    write_gray_image(scene_image(gt, seed), dir / e.image_path);

    const bool labeled = options.unlabeled_every == 0 || (i + 1) % options.unlabeled_every != 0;
    if (labeled) {
      e.depth_path = std::string("depth/") + stem + ".png";
      e.depth_unit = DepthUnit::Millimeters;
      write_depth(gt, dir / *e.depth_path, DepthFormat::Png16, DepthUnit::Millimeters);
    }

    // Predictions are dense: the model fills holes with the plane it sees.
    const double wrong_scale = 0.6 + 0.9 * rng.uniform();
    const double wobble = 0.05 * rng.uniform();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    double fill = 0.0;
    for (std::size_t k = 0; k < gt.size(); ++k) fill = gt.is_valid(k) ? gt.value(k) : fill;
    std::vector<double> metric(gt.size()), relative(gt.size());
    const double a = 0.05 + 0.2 * rng.uniform();
    const double b = 0.1 + rng.uniform();
    for (std::size_t y = 0; y < gt.height(); ++y) {
      for (std::size_t x = 0; x < gt.width(); ++x) {
        const std::size_t k = gt.index(x, y);
        const double z = gt.is_valid(k) ? gt.value(k) : fill;
        const double u = static_cast<double>(x) / static_cast<double>(gt.width());
        metric[k] = z * wrong_scale * (1.0 + wobble * std::sin(6.0 * u + phase));
        relative[k] = a * z + b + 0.02 * rng.uniform();
      }
    }
    if (options.metric_prediction) {
      PredictionRef p{"metric_net", std::string("pred/") + stem + "_metric.pfm", ScaleKind::Metric,
                      DepthUnit::Meters, std::nullopt};
      write_depth(DepthMap::from_values(gt.width(), gt.height(), metric), dir / p.path,
                  DepthFormat::Pfm, DepthUnit::Meters);
      e.predictions.push_back(std::move(p));
    }
    if (options.relative_prediction) {
      PredictionRef p{"relative_net", std::string("pred/") + stem + "_relative.pfm",
                      ScaleKind::Relative, DepthUnit::Meters, std::nullopt};
      write_depth(DepthMap::from_values(gt.width(), gt.height(), relative), dir / p.path,
                  DepthFormat::Pfm, DepthUnit::Meters);
      e.predictions.push_back(std::move(p));
    }
    m.entries.push_back(std::move(e));
  }
  write_manifest(m, dir / "manifest.json");
  return m;
}

}  // namespace depthsynth::synthetic
