#include "depthsynth/depth_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "depthsynth/error.hpp"

namespace depthsynth {

namespace {

constexpr std::size_t kMaxPixels = std::size_t{1} << 28;
constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

bool is_png(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0;
}

bool is_pfm(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F');
}

// ---------------------------------------------------------------------------
// libpng glue. libpng reports errors by longjmp; the functions below keep all
// C++ objects with destructors outside the setjmp frame.

struct PngErrorContext {
  char message[256] = {0};
};

void png_on_error(png_structp png, png_const_charp msg) {
  auto* ctx = static_cast<PngErrorContext*>(png_get_error_ptr(png));
  std::snprintf(ctx->message, sizeof(ctx->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_on_warning(png_structp, png_const_charp) {}

struct PngMemoryReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<PngMemoryReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) png_error(png, "unexpected end of file");
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

void png_write_memory(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + n);
}

void png_flush_memory(png_structp) {}

struct PngPixels {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  int bit_depth = 0;
  int channels = 0;
  bool gray = false;
  std::vector<std::uint8_t> raw;  // rows as stored, 16-bit samples big-endian
  std::vector<png_bytep> rows;
};

// Returns false and fills ctx.message on failure.
bool decode_png(const std::vector<std::uint8_t>& bytes, PngPixels& out, PngErrorContext& ctx) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &ctx, png_on_error, png_on_warning);
  if (png == nullptr) {
    std::snprintf(ctx.message, sizeof(ctx.message), "out of memory");
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    std::snprintf(ctx.message, sizeof(ctx.message), "out of memory");
    return false;
  }
  PngMemoryReader reader{bytes.data(), bytes.size(), 0};
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &reader, png_read_memory);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.channels = png_get_channels(png, info);
  out.gray = (png_get_color_type(png, info) & PNG_COLOR_MASK_COLOR) == 0;
  if (static_cast<std::size_t>(out.width) * out.height > kMaxPixels) {
    png_error(png, "image too large");
  }
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  out.raw.resize(row_bytes * out.height);
  out.rows.resize(out.height);
  for (std::uint32_t y = 0; y < out.height; ++y) out.rows[y] = out.raw.data() + y * row_bytes;
  png_read_image(png, out.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_png_gray(const std::vector<std::uint8_t>& raw, std::uint32_t width,
                     std::uint32_t height, int bit_depth, std::vector<std::uint8_t>& out,
                     PngErrorContext& ctx) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &ctx, png_on_error, png_on_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, png_write_memory, png_flush_memory);
  png_set_compression_level(png, 1);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * (bit_depth / 8);
  for (std::uint32_t y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(raw.data() + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

PngPixels load_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
  PngPixels px;
  PngErrorContext ctx;
  if (!decode_png(bytes, px, ctx)) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + ctx.message);
  }
  return px;
}

double png_sample(const PngPixels& px, std::size_t x, std::size_t y, int channel) {
  const std::uint8_t* row = px.rows[y];
  const std::size_t k = x * static_cast<std::size_t>(px.channels) + static_cast<std::size_t>(channel);
  if (px.bit_depth == 16) return static_cast<double>((row[2 * k] << 8) | row[2 * k + 1]);
  return static_cast<double>(row[k]);
}

double unit_scale(DepthUnit unit) { return unit == DepthUnit::Millimeters ? 1000.0 : 1.0; }

// ---------------------------------------------------------------------------
// PFM

DepthMap decode_pfm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path,
                    DepthUnit unit) {
  if (bytes[1] == 'F') {
    throw Error(ErrorCode::FormatError, path.string() + ": 3-channel PFM is not a depth map");
  }
  std::size_t pos = 2;
  const auto next_token = [&]() {
    while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) ++pos;
    return std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                       bytes.begin() + static_cast<std::ptrdiff_t>(pos));
  };
  const std::string ws = next_token();
  const std::string hs = next_token();
  const std::string ss = next_token();
  if (pos >= bytes.size()) throw Error(ErrorCode::CorruptFile, path.string() + ": truncated PFM header");
  ++pos;  // single whitespace byte ends the header

  std::size_t width = 0;
  std::size_t height = 0;
  double scale = 0.0;
  try {
    std::size_t used = 0;
    width = std::stoul(ws, &used);
    if (used != ws.size()) throw std::invalid_argument(ws);
    height = std::stoul(hs, &used);
    if (used != hs.size()) throw std::invalid_argument(hs);
    scale = std::stod(ss, &used);
    if (used != ss.size()) throw std::invalid_argument(ss);
  } catch (const std::exception&) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": malformed PFM header");
  }
  if (width == 0 || height == 0 || width * height > kMaxPixels || scale == 0.0 ||
      !std::isfinite(scale)) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": invalid PFM dimensions or scale");
  }
  const std::size_t n = width * height;
  if (bytes.size() - pos < n * 4) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": truncated PFM data");
  }

  const bool little = scale < 0.0;
  const double to_m = 1.0 / unit_scale(unit);
  std::vector<double> values(n);
  for (std::size_t row = 0; row < height; ++row) {
    const std::size_t y = height - 1 - row;  // stored bottom to top
    for (std::size_t x = 0; x < width; ++x) {
      const std::uint8_t* b = bytes.data() + pos + 4 * (row * width + x);
      const std::uint32_t word =
          little ? (std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
                    std::uint32_t(b[3]) << 24)
                 : (std::uint32_t(b[3]) | std::uint32_t(b[2]) << 8 | std::uint32_t(b[1]) << 16 |
                    std::uint32_t(b[0]) << 24);
      const double v = static_cast<double>(std::bit_cast<float>(word));
      values[y * width + x] = unit == DepthUnit::Meters ? v : v * to_m;
    }
  }
  return DepthMap::from_values(width, height, std::move(values));
}

float to_pfm_value(double meters, DepthUnit unit) {
  return static_cast<float>(unit == DepthUnit::Meters ? meters : meters * unit_scale(unit));
}

double from_pfm_value(float stored, DepthUnit unit) {
  const double v = static_cast<double>(stored);
  return unit == DepthUnit::Meters ? v : v * (1.0 / unit_scale(unit));
}

double png_quantize(double meters, DepthUnit unit) {
  return std::floor(meters * unit_scale(unit) + 0.5);
}

}  // namespace

std::string_view to_string(DepthUnit unit) {
  return unit == DepthUnit::Millimeters ? "mm" : "m";
}

DepthUnit parse_depth_unit(std::string_view text) {
  if (text == "mm") return DepthUnit::Millimeters;
  if (text == "m") return DepthUnit::Meters;
  throw Error(ErrorCode::ConfigError, "unknown depth unit '" + std::string(text) + "'");
}

std::string_view to_string(DepthFormat format) {
  return format == DepthFormat::Png16 ? "png" : "pfm";
}

DepthFormat parse_depth_format(std::string_view text) {
  if (text == "png") return DepthFormat::Png16;
  if (text == "pfm") return DepthFormat::Pfm;
  throw Error(ErrorCode::ConfigError, "unknown depth format '" + std::string(text) + "'");
}

std::string_view extension(DepthFormat format) {
  return format == DepthFormat::Png16 ? ".png" : ".pfm";
}

DepthMap read_depth(const std::filesystem::path& path, DepthUnit unit) {
  const auto bytes = read_file(path);
  if (is_pfm(bytes)) return decode_pfm(bytes, path, unit);
  if (!is_png(bytes)) {
    throw Error(ErrorCode::FormatError, path.string() + ": neither PNG nor PFM");
  }
  const PngPixels px = load_png(bytes, path);
  if (!px.gray || px.channels != 1) {
    throw Error(ErrorCode::FormatError, path.string() + ": depth PNG must be single-channel gray");
  }
  const double scale = unit_scale(unit);
  std::vector<double> values(static_cast<std::size_t>(px.width) * px.height);
  for (std::size_t y = 0; y < px.height; ++y) {
    for (std::size_t x = 0; x < px.width; ++x) {
      const double raw = png_sample(px, x, y, 0);
      values[y * px.width + x] = scale == 1.0 ? raw : raw / scale;
    }
  }
  return DepthMap::from_values(px.width, px.height, std::move(values));
}

DepthMap quantize_for(const DepthMap& depth, DepthFormat format, DepthUnit unit) {
  DepthMap out(depth.width(), depth.height());
  const double scale = unit_scale(unit);
  for (std::size_t i = 0; i < depth.size(); ++i) {
    if (!depth.is_valid(i)) continue;
    if (format == DepthFormat::Pfm) {
      out.set(i, from_pfm_value(to_pfm_value(depth.value(i), unit), unit));
    } else {
      const double q = png_quantize(depth.value(i), unit);
      out.set(i, scale == 1.0 ? q : q / scale);
    }
  }
  return out;
}

void write_depth(const DepthMap& depth, const std::filesystem::path& path, DepthFormat format,
                 DepthUnit unit) {
  if (depth.empty()) throw Error(ErrorCode::ShapeError, "write_depth: empty depth map");
  const std::size_t w = depth.width();
  const std::size_t h = depth.height();

  if (format == DepthFormat::Pfm) {
    const std::string header = "Pf\n" + std::to_string(w) + " " + std::to_string(h) + "\n-1.0\n";
    std::vector<std::uint8_t> bytes(header.begin(), header.end());
    bytes.reserve(header.size() + 4 * w * h);
    for (std::size_t row = 0; row < h; ++row) {
      const std::size_t y = h - 1 - row;
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t i = y * w + x;
        float v = 0.0f;
        if (depth.is_valid(i)) {
          v = to_pfm_value(depth.value(i), unit);
          if (!is_depth_value(static_cast<double>(v))) {
            throw Error(ErrorCode::RangeError, "depth " + std::to_string(depth.value(i)) +
                                                   " m is not representable as float32");
          }
        }
        const auto word = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<std::uint8_t>(word >> (8 * b)));
      }
    }
    write_file(path, bytes);
    return;
  }

  std::vector<std::uint8_t> raw(2 * w * h);
  for (std::size_t i = 0; i < w * h; ++i) {
    std::uint32_t q = 0;
    if (depth.is_valid(i)) {
      const double v = png_quantize(depth.value(i), unit);
      if (v < 1.0 || v > 65535.0) {
        throw Error(ErrorCode::RangeError,
                    "depth " + std::to_string(depth.value(i)) + " m does not fit 16-bit PNG " +
                        std::string(to_string(unit)) +
                        " (range 1..65535); write PFM for far or sub-quantum depths");
      }
      q = static_cast<std::uint32_t>(v);
    }
    raw[2 * i] = static_cast<std::uint8_t>(q >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
  }
  std::vector<std::uint8_t> bytes;
  PngErrorContext ctx;
  if (!encode_png_gray(raw, static_cast<std::uint32_t>(w), static_cast<std::uint32_t>(h), 16,
                       bytes, ctx)) {
    throw Error(ErrorCode::IoError, path.string() + ": PNG encoding failed: " + ctx.message);
  }
  write_file(path, bytes);
}

GrayImage read_gray_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  if (!is_png(bytes)) throw Error(ErrorCode::FormatError, path.string() + ": not a PNG image");
  const PngPixels px = load_png(bytes, path);
  const double full = px.bit_depth == 16 ? 65535.0 : 255.0;
  GrayImage img{px.width, px.height, std::vector<double>(std::size_t(px.width) * px.height)};
  for (std::size_t y = 0; y < px.height; ++y) {
    for (std::size_t x = 0; x < px.width; ++x) {
      double v = 0.0;
      if (px.gray) {
        v = png_sample(px, x, y, 0);
      } else {
        v = 0.299 * png_sample(px, x, y, 0) + 0.587 * png_sample(px, x, y, 1) +
            0.114 * png_sample(px, x, y, 2);
      }
      img.pixels[y * px.width + x] = v / full;
    }
  }
  return img;
}

void write_gray_image(const GrayImage& image, const std::filesystem::path& path) {
  if (image.pixels.size() != image.width * image.height || image.pixels.empty()) {
    throw Error(ErrorCode::ShapeError, "write_gray_image: pixel count does not match shape");
  }
  std::vector<std::uint8_t> raw(image.pixels.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    raw[i] = static_cast<std::uint8_t>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  std::vector<std::uint8_t> bytes;
  PngErrorContext ctx;
  if (!encode_png_gray(raw, static_cast<std::uint32_t>(image.width),
                       static_cast<std::uint32_t>(image.height), 8, bytes, ctx)) {
    throw Error(ErrorCode::IoError, path.string() + ": PNG encoding failed: " + ctx.message);
  }
  write_file(path, bytes);
}

}  // namespace depthsynth
