#include "depthsynth/alignment.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "depthsynth/error.hpp"

namespace depthsynth {

std::string_view to_string(AlignmentMode mode) {
  switch (mode) {
    case AlignmentMode::None: return "none";
    case AlignmentMode::MedianScale: return "median_scale";
    case AlignmentMode::AffineLsq: return "affine_lsq";
  }
  return "none";
}

AlignmentMode parse_alignment_mode(std::string_view text) {
  if (text == "none") return AlignmentMode::None;
  if (text == "median_scale") return AlignmentMode::MedianScale;
  if (text == "affine_lsq") return AlignmentMode::AffineLsq;
  throw Error(ErrorCode::ConfigError, "unknown alignment mode '" + std::string(text) + "'");
}

namespace {

double median_of(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

DepthMap apply_affine(const DepthMap& src, double a, double b) {
  DepthMap out(src.width(), src.height());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src.is_valid(i)) out.set(i, a * src.value(i) + b);
  }
  return out;
}

}  // namespace

AlignmentResult affine_align(const DepthMap& src, const DepthMap& ref, AlignmentMode mode) {
  if (!src.same_shape(ref)) {
    throw Error(ErrorCode::ShapeError, "affine_align: source and reference shapes differ");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src.is_valid(i) && ref.is_valid(i)) {
      xs.push_back(src.value(i));
      ys.push_back(ref.value(i));
    }
  }
  if (xs.size() < 2) {
    throw Error(ErrorCode::InsufficientOverlap,
                "affine_align: " + std::to_string(xs.size()) + " common valid pixels, need 2");
  }

  AlignmentResult result;
  result.requested = mode;
  result.applied = mode;
  if (mode == AlignmentMode::None) {
    result.aligned = src;
    return result;
  }

  if (mode == AlignmentMode::AffineLsq) {
    const double n = static_cast<double>(xs.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double dx = xs[i] - mx;
      sxx += dx * dx;
      sxy += dx * (ys[i] - my);
    }
    if (sxx > 0.0) {
      result.scale = sxy / sxx;
      result.shift = my - result.scale * mx;
      result.aligned = apply_affine(src, result.scale, result.shift);
      return result;
    }
    result.applied = AlignmentMode::MedianScale;
    result.fell_back = true;
  }

  result.scale = median_of(ys) / median_of(std::move(xs));
  result.shift = 0.0;
  result.aligned = apply_affine(src, result.scale, 0.0);
  return result;
}

}  // namespace depthsynth
