#include "depthsynth/depth_map.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "depthsynth/error.hpp"

namespace depthsynth {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDepth: return "EmptyDepth";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::InsufficientValid: return "InsufficientValid";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::WeightError: return "WeightError";
    case ErrorCode::FactorError: return "FactorError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::RangeError: return "RangeError";
    case ErrorCode::ManifestError: return "ManifestError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

MaskedGrid::MaskedGrid(std::size_t width, std::size_t height)
    : width_(width), height_(height), values_(width * height, 0.0), valid_(width * height, 0) {}

MaskedGrid::MaskedGrid(std::size_t width, std::size_t height, std::vector<double> values,
                       std::vector<std::uint8_t> valid)
    : width_(width), height_(height), values_(std::move(values)), valid_(std::move(valid)) {
  const std::size_t n = width * height;
  if (values_.size() != n || valid_.size() != n) {
    throw Error(ErrorCode::ShapeError, "grid " + std::to_string(width) + "x" +
                                           std::to_string(height) + " expects " +
                                           std::to_string(n) + " values and mask entries");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (valid_[i] == 0) {
      values_[i] = 0.0;
    } else if (!std::isfinite(values_[i])) {
      throw Error(ErrorCode::ConfigError,
                  "non-finite value at valid pixel " + std::to_string(i));
    } else {
      valid_[i] = 1;
    }
  }
}

MaskedGrid MaskedGrid::dense(std::size_t width, std::size_t height, std::vector<double> values) {
  std::vector<std::uint8_t> valid(values.size(), 1);
  return MaskedGrid(width, height, std::move(values), std::move(valid));
}

std::size_t MaskedGrid::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

void MaskedGrid::set(std::size_t i, double v) {
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::ConfigError, "non-finite value at pixel " + std::to_string(i));
  }
  values_[i] = v;
  valid_[i] = 1;
}

DepthMap DepthMap::from_values(std::size_t width, std::size_t height, std::vector<double> values) {
  std::vector<std::uint8_t> valid(values.size(), 1);
  return from_values(width, height, std::move(values), std::move(valid));
}

DepthMap DepthMap::from_values(std::size_t width, std::size_t height, std::vector<double> values,
                               std::vector<std::uint8_t> valid) {
  const std::size_t n = width * height;
  if (values.size() != n || valid.size() != n) {
    throw Error(ErrorCode::ShapeError, "depth map " + std::to_string(width) + "x" +
                                           std::to_string(height) + " expects " +
                                           std::to_string(n) + " values");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_depth_value(values[i])) valid[i] = 0;
  }
  DepthMap out;
  out.grid_ = MaskedGrid(width, height, std::move(values), std::move(valid));
  return out;
}

void DepthMap::set(std::size_t i, double v) noexcept {
  if (is_depth_value(v)) {
    grid_.set(i, v);
  } else {
    grid_.invalidate(i);
  }
}

}  // namespace depthsynth
