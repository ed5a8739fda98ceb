#pragma once

#include <filesystem>
#include <string_view>

#include "depthsynth/depth_map.hpp"
#include "depthsynth/samplers.hpp"

namespace depthsynth {

enum class DepthUnit { Millimeters, Meters };
enum class DepthFormat { Png16, Pfm };

std::string_view to_string(DepthUnit unit);
DepthUnit parse_depth_unit(std::string_view text);
std::string_view to_string(DepthFormat format);
DepthFormat parse_depth_format(std::string_view text);
/// File extension including the dot.
std::string_view extension(DepthFormat format);

/// PNG stores integers in mm, PFM stores float meters.
inline DepthUnit default_unit(DepthFormat format) {
  return format == DepthFormat::Png16 ? DepthUnit::Millimeters : DepthUnit::Meters;
}

/// Reads a 16-bit (or 8-bit) grayscale PNG or a single-channel PFM, detected by
/// magic bytes. PNG 0 and PFM non-finite or <= 0 become invalid; values are
/// converted from `unit` to meters.
///
/// Throws IoError if the file cannot be opened, FormatError for unknown or
/// unsupported formats and CorruptFile for truncated or malformed data.
DepthMap read_depth(const std::filesystem::path& path, DepthUnit unit);
inline DepthMap read_depth(const std::filesystem::path& path) {
  return read_depth(path, DepthUnit::Meters);
}

/// Writes little-endian PFM (bottom-to-top rows, invalid as 0) or 16-bit PNG
/// (invalid as 0). Throws RangeError when a valid depth is not representable,
/// e.g. beyond 65.535 m as PNG millimeters.
void write_depth(const DepthMap& depth, const std::filesystem::path& path, DepthFormat format,
                 DepthUnit unit);
inline void write_depth(const DepthMap& depth, const std::filesystem::path& path,
                        DepthFormat format) {
  write_depth(depth, path, format, default_unit(format));
}

/// The map read_depth(write_depth(depth)) would return, computed in memory.
DepthMap quantize_for(const DepthMap& depth, DepthFormat format, DepthUnit unit);
inline DepthMap quantize_for(const DepthMap& depth, DepthFormat format) {
  return quantize_for(depth, format, default_unit(format));
}

/// Any 8/16-bit PNG, converted to luma in [0, 1].
GrayImage read_gray_image(const std::filesystem::path& path);
/// 8-bit grayscale PNG; intensities are clamped to [0, 1].
void write_gray_image(const GrayImage& image, const std::filesystem::path& path);

}  // namespace depthsynth
