#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cxr/error.hpp"

namespace cxr {

enum class ViewKind { AP, LAT };

inline const char* to_string(ViewKind v) { return v == ViewKind::AP ? "AP" : "LAT"; }

struct Point2 {
  double x = 0;
  double y = 0;
};

struct Point2i {
  int x = 0;
  int y = 0;
  bool operator==(const Point2i&) const = default;
};

/// Single-channel intensity raster, row-major, 8- or 16-bit.
/// Pixels are stored widened to 16 bits; bit_depth bounds the legal range.
struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, int depth = 8) : width(w), height(h), bit_depth(depth) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "image dimensions must be >= 1");
    if (depth != 8 && depth != 16) fail(ErrorCode::InvalidParams, "bit depth must be 8 or 16");
    pixels.assign(static_cast<std::size_t>(w) * h, 0);
  }

  int max_value() const { return (1 << bit_depth) - 1; }
  std::uint16_t& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  bool operator==(const GrayImage&) const = default;
};

/// Real-valued raster, row-major.
struct RealImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  RealImage() = default;
  RealImage(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "image dimensions must be >= 1");
    values.assign(static_cast<std::size_t>(w) * h, 0.0);
  }

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Binary raster with values strictly in {0, 1}.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  BinaryMask() = default;
  BinaryMask(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "mask dimensions must be >= 1");
    bits.assign(static_cast<std::size_t>(w) * h, 0);
  }

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

  std::int64_t count() const {
    std::int64_t n = 0;
    for (auto b : bits) n += b;
    return n;
  }
  bool empty() const { return count() == 0; }

  bool operator==(const BinaryMask&) const = default;
};

/// Interleaved 8-bit RGB raster (overlay rendering output).
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // 3 * width * height

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "image dimensions must be >= 1");
    rgb.assign(static_cast<std::size_t>(w) * h * 3, 0);
  }

  std::uint8_t* px(int x, int y) { return &rgb[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* px(int x, int y) const {
    return &rgb[(static_cast<std::size_t>(y) * width + x) * 3];
  }

  bool operator==(const RgbImage&) const = default;
};

/// Axis-aligned box with inclusive integer pixel coordinates.
/// width = x_max - x_min + 1.
struct BBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const { return x_max - x_min + 1; }
  int height() const { return y_max - y_min + 1; }

  bool valid() const { return x_min >= 0 && y_min >= 0 && x_min <= x_max && y_min <= y_max; }
  bool inside(int canvas_w, int canvas_h) const {
    return valid() && x_max < canvas_w && y_max < canvas_h;
  }
  bool contains(int x, int y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }

  bool operator==(const BBox&) const = default;
};

inline BBox union_of(const BBox& a, const BBox& b) {
  return BBox{std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
              std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

/// Tightest box containing every set bit.
inline BBox bbox_of(const BinaryMask& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      if (x < x0) x0 = x;
      if (x > x1) x1 = x;
      if (y < y0) y0 = y;
      if (y > y1) y1 = y;
    }
  }
  if (x1 < 0) fail(ErrorCode::EmptyMask, "bbox_of: mask has no set bits");
  return BBox{x0, y0, x1, y1};
}

inline GrayImage crop(const GrayImage& img, const BBox& box) {
  if (!box.inside(img.width, img.height))
    fail(ErrorCode::BoxOutsideImage, "crop box exceeds image bounds");
  GrayImage out(box.width(), box.height(), img.bit_depth);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = img.at(box.x_min + x, box.y_min + y);
  return out;
}

inline BinaryMask crop(const BinaryMask& mask, const BBox& box) {
  if (!box.inside(mask.width, mask.height))
    fail(ErrorCode::BoxOutsideImage, "crop box exceeds mask bounds");
  BinaryMask out(box.width(), box.height());
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(x, y) = mask.at(box.x_min + x, box.y_min + y);
  return out;
}

}  // namespace cxr
