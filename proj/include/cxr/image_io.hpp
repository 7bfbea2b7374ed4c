#pragma once

#include <png.h>

#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "cxr/error.hpp"
#include "cxr/image.hpp"

namespace cxr {
namespace detail {

// Decoded raster before interpretation as image or mask. maxval is the
// declared white level (PGM header value, or 2^depth - 1 for PNG).
struct RawRaster {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  long maxval = 255;
  std::vector<std::uint16_t> px;
};

struct FileCloser {
  std::FILE* f = nullptr;
  ~FileCloser() {
    if (f) std::fclose(f);
  }
};

inline bool ends_with(const std::string& s, const char* suffix) {
  std::size_t n = std::strlen(suffix);
  if (s.size() < n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    char a = static_cast<char>(std::tolower(static_cast<unsigned char>(s[s.size() - n + i])));
    if (a != suffix[i]) return false;
  }
  return true;
}

// ---- PGM (P5) ----

inline int pgm_next_token(std::FILE* f, const std::string& path) {
  int c = std::fgetc(f);
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = std::fgetc(f);
    } else if (std::isspace(c)) {
      c = std::fgetc(f);
      continue;
    } else {
      break;
    }
    c = std::fgetc(f);
  }
  if (c == EOF || !std::isdigit(c)) fail(ErrorCode::CorruptData, "bad PGM header in " + path);
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1000000) fail(ErrorCode::CorruptData, "PGM header value out of range in " + path);
    c = std::fgetc(f);
  }
  if (c != EOF) std::ungetc(c, f);
  return static_cast<int>(v);
}

inline RawRaster load_pgm(std::FILE* f, const std::string& path) {
  char magic[2];
  if (std::fread(magic, 1, 2, f) != 2 || magic[0] != 'P' || magic[1] != '5')
    fail(ErrorCode::UnsupportedFormat, "not a P5 PGM: " + path);
  RawRaster r;
  r.width = pgm_next_token(f, path);
  r.height = pgm_next_token(f, path);
  r.maxval = pgm_next_token(f, path);
  if (r.width < 1 || r.height < 1 || r.maxval < 1 || r.maxval > 65535)
    fail(ErrorCode::CorruptData, "bad PGM dimensions/maxval in " + path);
  int c = std::fgetc(f);  // single whitespace separates header from data
  if (c == EOF || !std::isspace(c)) fail(ErrorCode::CorruptData, "bad PGM header in " + path);
  r.bit_depth = r.maxval > 255 ? 16 : 8;
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  const int bytes_per = r.maxval > 255 ? 2 : 1;
  std::vector<std::uint8_t> buf(n * bytes_per);
  if (std::fread(buf.data(), 1, buf.size(), f) != buf.size())
    fail(ErrorCode::CorruptData, "truncated PGM data in " + path);
  r.px.resize(n);
  if (bytes_per == 1) {
    for (std::size_t i = 0; i < n; ++i) r.px[i] = buf[i];
  } else {
    for (std::size_t i = 0; i < n; ++i)
      r.px[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
  }
  for (std::size_t i = 0; i < n; ++i)
    if (r.px[i] > r.maxval) fail(ErrorCode::CorruptData, "PGM sample above maxval in " + path);
  return r;
}

inline void save_pgm(const std::uint16_t* px, int w, int h, int maxval, const std::string& path) {
  FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) fail(ErrorCode::IoError, "cannot open for writing: " + path);
  std::fprintf(fc.f, "P5\n%d %d\n%d\n", w, h, maxval);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> buf;
  if (maxval > 255) {
    buf.resize(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      buf[2 * i] = static_cast<std::uint8_t>(px[i] >> 8);
      buf[2 * i + 1] = static_cast<std::uint8_t>(px[i] & 0xff);
    }
  } else {
    buf.resize(n);
    for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<std::uint8_t>(px[i]);
  }
  if (std::fwrite(buf.data(), 1, buf.size(), fc.f) != buf.size())
    fail(ErrorCode::IoError, "short write: " + path);
  if (std::fflush(fc.f) != 0) fail(ErrorCode::IoError, "write failed: " + path);
}

// ---- PNG ----

inline RawRaster load_png(std::FILE* f, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }

  RawRaster r;
  std::vector<std::uint8_t> buf;
  std::vector<png_bytep> rows;
  int fail_code = 0;  // 1 = corrupt, 2 = unsupported

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorCode::CorruptData, "corrupt PNG: " + path);
  }

  png_init_io(png, f);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (color != PNG_COLOR_TYPE_GRAY)
    fail_code = 2;
  else if (depth != 8 && depth != 16)
    fail_code = 2;
  else if (w < 1 || h < 1)
    fail_code = 1;
  if (fail_code) {
    png_destroy_read_struct(&png, &info, nullptr);
    if (fail_code == 2)
      fail(ErrorCode::UnsupportedFormat,
           "PNG must be single-channel grayscale, 8- or 16-bit: " + path);
    fail(ErrorCode::CorruptData, "corrupt PNG: " + path);
  }

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buf.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = buf.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  r.width = static_cast<int>(w);
  r.height = static_cast<int>(h);
  r.bit_depth = depth;
  r.maxval = (1L << depth) - 1;
  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.px.resize(n);
  if (depth == 8) {
    for (std::size_t y = 0; y < h; ++y)
      for (int x = 0; x < r.width; ++x) r.px[y * r.width + x] = buf[y * rowbytes + x];
  } else {
    for (std::size_t y = 0; y < h; ++y)
      for (int x = 0; x < r.width; ++x)
        r.px[y * r.width + x] = static_cast<std::uint16_t>(
            (buf[y * rowbytes + 2 * x] << 8) | buf[y * rowbytes + 2 * x + 1]);
  }
  return r;
}

inline void save_png_gray(const std::uint16_t* px, int w, int h, int depth,
                          const std::string& path) {
  FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) fail(ErrorCode::IoError, "cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }

  const std::size_t rowbytes = static_cast<std::size_t>(w) * (depth == 16 ? 2 : 1);
  std::vector<std::uint8_t> buf(rowbytes * h);
  std::vector<png_bytep> rows(h);
  if (depth == 16) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        std::uint16_t v = px[static_cast<std::size_t>(y) * w + x];
        buf[y * rowbytes + 2 * x] = static_cast<std::uint8_t>(v >> 8);
        buf[y * rowbytes + 2 * x + 1] = static_cast<std::uint8_t>(v & 0xff);
      }
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        buf[y * rowbytes + x] = static_cast<std::uint8_t>(px[static_cast<std::size_t>(y) * w + x]);
  }
  for (int y = 0; y < h; ++y) rows[y] = buf.data() + static_cast<std::size_t>(y) * rowbytes;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "PNG write failed: " + path);
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, w, h, depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void save_png_rgb(const std::uint8_t* rgb, int w, int h, const std::string& path) {
  FileCloser fc{std::fopen(path.c_str(), "wb")};
  if (!fc.f) fail(ErrorCode::IoError, "cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail(ErrorCode::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(ErrorCode::IoError, "libpng init failed");
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(rgb + static_cast<std::size_t>(y) * w * 3);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(ErrorCode::IoError, "PNG write failed: " + path);
  }
  png_init_io(png, fc.f);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline RawRaster load_raster(const std::string& path) {
  FileCloser fc{std::fopen(path.c_str(), "rb")};
  if (!fc.f) {
    if (errno == ENOENT) fail(ErrorCode::FileNotFound, path);
    fail(ErrorCode::IoError, "cannot open: " + path);
  }
  unsigned char magic[2] = {0, 0};
  std::size_t got = std::fread(magic, 1, 2, fc.f);
  std::rewind(fc.f);
  if (got == 2 && magic[0] == 0x89 && magic[1] == 'P') return load_png(fc.f, path);
  if (got == 2 && magic[0] == 'P' && magic[1] == '5') return load_pgm(fc.f, path);
  fail(ErrorCode::UnsupportedFormat, "unrecognized raster format: " + path);
}

}  // namespace detail

/// Load an 8/16-bit grayscale PNG or P5 PGM. Multi-channel inputs are
/// rejected, never converted; samples are preserved without rescaling.
inline GrayImage load_image(const std::string& path) {
  detail::RawRaster r = detail::load_raster(path);
  GrayImage img(r.width, r.height, r.bit_depth);
  img.pixels = std::move(r.px);
  return img;
}

/// Load a binary mask raster. Sample values must be exactly {0, maxval};
/// maxval maps to 1.
inline BinaryMask load_mask(const std::string& path) {
  detail::RawRaster r = detail::load_raster(path);
  BinaryMask mask(r.width, r.height);
  for (std::size_t i = 0; i < r.px.size(); ++i) {
    if (r.px[i] == 0)
      mask.bits[i] = 0;
    else if (r.px[i] == r.maxval)
      mask.bits[i] = 1;
    else
      fail(ErrorCode::NonBinaryMask, "sample " + std::to_string(r.px[i]) + " is neither 0 nor " +
                                         std::to_string(r.maxval) + " in " + path);
  }
  return mask;
}

/// Lossless save; format chosen by extension (.png or .pgm).
inline void save_image(const GrayImage& img, const std::string& path) {
  if (detail::ends_with(path, ".pgm"))
    detail::save_pgm(img.pixels.data(), img.width, img.height, img.max_value(), path);
  else if (detail::ends_with(path, ".png"))
    detail::save_png_gray(img.pixels.data(), img.width, img.height, img.bit_depth, path);
  else
    fail(ErrorCode::UnsupportedFormat, "unsupported output extension: " + path);
}

/// Masks are written as 8-bit {0, 255} rasters.
inline void save_mask(const BinaryMask& mask, const std::string& path) {
  std::vector<std::uint16_t> px(mask.bits.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = mask.bits[i] ? 255 : 0;
  if (detail::ends_with(path, ".pgm"))
    detail::save_pgm(px.data(), mask.width, mask.height, 255, path);
  else if (detail::ends_with(path, ".png"))
    detail::save_png_gray(px.data(), mask.width, mask.height, 8, path);
  else
    fail(ErrorCode::UnsupportedFormat, "unsupported output extension: " + path);
}

/// RGB overlays are written as 8-bit PNG (or P6 PPM by extension).
inline void save_rgb(const RgbImage& img, const std::string& path) {
  if (detail::ends_with(path, ".png")) {
    detail::save_png_rgb(img.rgb.data(), img.width, img.height, path);
  } else if (detail::ends_with(path, ".ppm")) {
    detail::FileCloser fc{std::fopen(path.c_str(), "wb")};
    if (!fc.f) fail(ErrorCode::IoError, "cannot open for writing: " + path);
    std::fprintf(fc.f, "P6\n%d %d\n255\n", img.width, img.height);
    if (std::fwrite(img.rgb.data(), 1, img.rgb.size(), fc.f) != img.rgb.size())
      fail(ErrorCode::IoError, "short write: " + path);
  } else {
    fail(ErrorCode::UnsupportedFormat, "unsupported output extension: " + path);
  }
}

}  // namespace cxr
