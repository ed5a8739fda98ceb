#include "depthsynth/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "depthsynth/depth_stats.hpp"
#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

// Sobel kernels, row-major over (dy, dx) in {-1, 0, 1}.
constexpr double kSobelX[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
constexpr double kSobelY[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};

std::size_t common_mask(const DepthMap& pred, const DepthMap& label,
                        std::vector<std::uint8_t>& mask) {
  if (!pred.same_shape(label)) {
    throw Error(ErrorCode::ShapeError, "loss: prediction and label shapes differ");
  }
  if (label.valid_count() < 2) {
    throw Error(ErrorCode::InsufficientValid, "loss: label needs at least two valid pixels");
  }
  mask.assign(pred.size(), 0);
  std::size_t n = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred.is_valid(i) && label.is_valid(i)) {
      mask[i] = 1;
      ++n;
    }
  }
  if (n < 2) {
    throw Error(ErrorCode::InsufficientValid,
                "loss: prediction and label share " + std::to_string(n) + " valid pixels");
  }
  return n;
}

MaskedGrid restrict_to(const DepthMap& depth, const std::vector<std::uint8_t>& mask) {
  MaskedGrid out(depth.width(), depth.height());
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (mask[i] != 0) out.set(i, depth.value(i));
  }
  return out;
}

}  // namespace

MaskedGrid sobel_abs(const MaskedGrid& grid) {
  const std::size_t w = grid.width();
  const std::size_t h = grid.height();
  if (w < 3 || h < 3) {
    throw Error(ErrorCode::ShapeError, "sobel_abs needs at least a 3x3 grid, got " +
                                           std::to_string(w) + "x" + std::to_string(h));
  }
  MaskedGrid out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double gx = 0.0;
      double gy = 0.0;
      bool valid = true;
      for (int dy = -1; dy <= 1 && valid; ++dy) {
        const auto yy = static_cast<std::size_t>(
            std::clamp(static_cast<long>(y) + dy, 0L, static_cast<long>(h) - 1));
        for (int dx = -1; dx <= 1; ++dx) {
          const auto xx = static_cast<std::size_t>(
              std::clamp(static_cast<long>(x) + dx, 0L, static_cast<long>(w) - 1));
          if (!grid.valid_at(xx, yy)) {
            valid = false;
            break;
          }
          const double v = grid.at(xx, yy);
          gx += kSobelX[dy + 1][dx + 1] * v;
          gy += kSobelY[dy + 1][dx + 1] * v;
        }
      }
      if (valid) out.set(grid.index(x, y), std::abs(gx) + std::abs(gy));
    }
  }
  return out;
}

MaskedGrid pyramid_nn(const MaskedGrid& grid, int level) {
  if (level < 0) throw Error(ErrorCode::ConfigError, "pyramid level must be non-negative");
  if (level == 0) return grid;
  const std::size_t stride = std::size_t{1} << level;
  const std::size_t w = (grid.width() + stride - 1) / stride;
  const std::size_t h = (grid.height() + stride - 1) / stride;
  MaskedGrid out(w, h);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t src = grid.index(x * stride, y * stride);
      if (grid.is_valid(src)) out.set(out.index(x, y), grid.value(src));
    }
  }
  return out;
}

LossBreakdown g2_loss(const DepthMap& pred, const DepthMap& label, const LossOptions& options) {
  std::vector<std::uint8_t> mask;
  const std::size_t eta = common_mask(pred, label, mask);
  const MaskedGrid tp = standardize(restrict_to(pred, mask));
  const MaskedGrid tl = standardize(restrict_to(label, mask));

  MaskedGrid residual(pred.width(), pred.height());
  double standardized = 0.0;
  double absolute = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    const double r = tp.value(i) - tl.value(i);
    residual.set(i, r);
    standardized += std::abs(r);
    absolute += std::abs(pred.value(i) - label.value(i));
  }

  double gradient = 0.0;
  for (int r = 0; r < options.levels; ++r) {
    const MaskedGrid level = pyramid_nn(residual, r);
    if (level.width() < 3 || level.height() < 3) continue;
    const MaskedGrid g = sobel_abs(level);
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.is_valid(i)) continue;
      sum += g.value(i);
      ++count;
    }
    if (count == 0) continue;
    const double norm = options.normalization == PyramidNormalization::PerLevel
                            ? static_cast<double>(count)
                            : static_cast<double>(eta);
    gradient += sum / norm;
  }

  LossBreakdown out;
  out.valid_count = eta;
  out.standardized_l1 = standardized / static_cast<double>(eta);
  out.absolute_l1 = absolute / static_cast<double>(eta);
  out.gradient_term = options.gradient_weight * gradient;
  out.total = out.standardized_l1 + out.absolute_l1 + out.gradient_term;
  return out;
}

L1L2Breakdown l1l2_loss(const DepthMap& pred, const DepthMap& label) {
  std::vector<std::uint8_t> mask;
  const std::size_t eta = common_mask(pred, label, mask);
  double l1 = 0.0;
  double l2 = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0) continue;
    const double d = pred.value(i) - label.value(i);
    l1 += std::abs(d);
    l2 += d * d;
  }
  L1L2Breakdown out;
  out.valid_count = eta;
  out.l1 = l1 / static_cast<double>(eta);
  out.l2 = l2 / static_cast<double>(eta);
  out.total = out.l1 + out.l2;
  return out;
}

}  // namespace depthsynth
