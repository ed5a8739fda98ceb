#include "depthsynth/depth_stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "depthsynth/error.hpp"

namespace depthsynth {

ImageStats image_stats(const MaskedGrid& grid) {
  const auto values = grid.values();
  const auto mask = grid.mask();
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == 0) continue;
    sum += values[i];
    ++n;
  }
  if (n == 0) throw Error(ErrorCode::EmptyDepth, "image_stats: no valid pixels");

  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  double abs_dev = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (mask[i] == 0) continue;
    const double r = values[i] - mean;
    sq += r * r;
    abs_dev += std::abs(r);
  }
  ImageStats s;
  s.mean = mean;
  s.std = std::sqrt(sq / static_cast<double>(n));
  s.mad = abs_dev / static_cast<double>(n);
  s.valid_count = n;
  return s;
}

MaskedGrid standardize(const MaskedGrid& grid, double eps) {
  const ImageStats s = image_stats(grid);
  const double scale = std::max(s.mad, eps);
  MaskedGrid out(grid.width(), grid.height());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_valid(i)) out.set(i, (grid.value(i) - s.mean) / scale);
  }
  return out;
}

}  // namespace depthsynth
