#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace depthsynth {

/// Row-major grid of doubles with a per-pixel validity mask.
///
/// Valid pixels hold finite values; invalid pixels hold 0.0 and are never
/// read by the numeric kernels. Values may be of either sign, which is what
/// standardized maps and loss residuals need.
class MaskedGrid {
 public:
  MaskedGrid() = default;
  /// All pixels invalid.
  MaskedGrid(std::size_t width, std::size_t height);
  /// Throws ShapeError on size mismatch and ConfigError when a pixel flagged
  /// valid is not finite.
  MaskedGrid(std::size_t width, std::size_t height, std::vector<double> values,
             std::vector<std::uint8_t> valid);
  /// Fully valid grid; throws when any value is not finite.
  static MaskedGrid dense(std::size_t width, std::size_t height, std::vector<double> values);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  bool same_shape(const MaskedGrid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  std::size_t index(std::size_t x, std::size_t y) const noexcept { return y * width_ + x; }
  double value(std::size_t i) const noexcept { return values_[i]; }
  double at(std::size_t x, std::size_t y) const noexcept { return values_[index(x, y)]; }
  bool is_valid(std::size_t i) const noexcept { return valid_[i] != 0; }
  bool valid_at(std::size_t x, std::size_t y) const noexcept { return valid_[index(x, y)] != 0; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const std::uint8_t> mask() const noexcept { return valid_; }
  std::size_t valid_count() const noexcept;

  /// Marks the pixel valid with value v (v must be finite).
  void set(std::size_t i, double v);
  void invalidate(std::size_t i) noexcept {
    values_[i] = 0.0;
    valid_[i] = 0;
  }

  friend bool operator==(const MaskedGrid&, const MaskedGrid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> valid_;
};

/// Dense metric depth in meters. Valid pixels are finite and strictly positive.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(std::size_t width, std::size_t height) : grid_(width, height) {}

  /// Applies the ingest sentinel rule: non-finite or non-positive values become
  /// invalid.
  static DepthMap from_values(std::size_t width, std::size_t height, std::vector<double> values);
  /// Explicit mask; pixels flagged valid but non-finite or <= 0 are invalidated.
  static DepthMap from_values(std::size_t width, std::size_t height, std::vector<double> values,
                              std::vector<std::uint8_t> valid);

  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t size() const noexcept { return grid_.size(); }
  bool empty() const noexcept { return grid_.empty(); }
  bool same_shape(const DepthMap& other) const noexcept { return grid_.same_shape(other.grid_); }
  std::size_t index(std::size_t x, std::size_t y) const noexcept { return grid_.index(x, y); }
  double value(std::size_t i) const noexcept { return grid_.value(i); }
  double at(std::size_t x, std::size_t y) const noexcept { return grid_.at(x, y); }
  bool is_valid(std::size_t i) const noexcept { return grid_.is_valid(i); }
  std::span<const double> values() const noexcept { return grid_.values(); }
  std::span<const std::uint8_t> mask() const noexcept { return grid_.mask(); }
  std::size_t valid_count() const noexcept { return grid_.valid_count(); }

  /// Stores v if finite and > 0, otherwise invalidates the pixel.
  void set(std::size_t i, double v) noexcept;
  void invalidate(std::size_t i) noexcept { grid_.invalidate(i); }

  const MaskedGrid& grid() const noexcept { return grid_; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  MaskedGrid grid_;
};

/// True when the value is a legal depth sample.
inline bool is_depth_value(double v) noexcept { return v > 0.0 && v < std::numeric_limits<double>::infinity(); }

}  // namespace depthsynth
