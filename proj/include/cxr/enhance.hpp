#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "cxr/error.hpp"
#include "cxr/image.hpp"

namespace cxr {

/// Contrast-limited adaptive histogram equalization parameters.
/// clip_limit is a multiplier on the uniform bin height (tile_area / bins).
struct ClaheParams {
  double clip_limit = 2.0;
  int tiles_x = 8;
  int tiles_y = 8;
};

namespace detail {

// 16-bit histograms are folded into 4096 uniform bins to bound memory.
inline int clahe_bins(int bit_depth) { return bit_depth == 8 ? 256 : 4096; }
inline int clahe_bin_shift(int bit_depth) { return bit_depth == 8 ? 0 : 4; }

struct TileAxis {
  std::vector<int> lo, hi;      // [lo, hi) pixel ranges per tile
  std::vector<double> center;   // tile center coordinates
};

// Exact partition: tile i spans [i*n/count, (i+1)*n/count).
inline TileAxis tile_axis(int n, int count) {
  TileAxis a;
  a.lo.resize(count);
  a.hi.resize(count);
  a.center.resize(count);
  for (int i = 0; i < count; ++i) {
    a.lo[i] = static_cast<int>(static_cast<std::int64_t>(i) * n / count);
    a.hi[i] = static_cast<int>(static_cast<std::int64_t>(i + 1) * n / count);
    a.center[i] = a.lo[i] + (a.hi[i] - a.lo[i] - 1) / 2.0;
  }
  return a;
}

// Clipped, redistributed equalization mapping for one tile: a real-valued
// lookup over histogram bins. Clip threshold = floor(clip_limit * area /
// bins), at least 1 count; excess is redistributed uniformly in one pass and
// the residual discarded.
inline std::vector<double> clahe_tile_mapping(const GrayImage& img, int x0, int x1, int y0,
                                              int y1, double clip_limit) {
  const int bins = clahe_bins(img.bit_depth);
  const int shift = clahe_bin_shift(img.bit_depth);
  const std::int64_t levels = std::int64_t{1} << img.bit_depth;

  std::vector<std::int64_t> hist(bins, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) ++hist[img.at(x, y) >> shift];

  const std::int64_t area = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
  const std::int64_t clip =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(clip_limit * area / bins));
  std::int64_t excess = 0;
  for (auto& h : hist) {
    if (h > clip) {
      excess += h - clip;
      h = clip;
    }
  }
  const std::int64_t bonus = excess / bins;
  if (bonus > 0)
    for (auto& h : hist) h += bonus;
  const std::int64_t total = area - (excess - bonus * bins);

  std::vector<double> mapping(bins);
  std::int64_t cum = 0;
  const double scale = static_cast<double>(levels - 1) / static_cast<double>(total);
  for (int b = 0; b < bins; ++b) {
    cum += hist[b];
    mapping[b] = cum * scale;
  }
  return mapping;
}

// Bracketing tile indices and interpolation weight for one coordinate,
// clamped to the nearest tile center at the borders.
inline void center_bracket(const std::vector<double>& centers, double x, int& i0, int& i1,
                           double& w) {
  const int n = static_cast<int>(centers.size());
  if (n == 1 || x <= centers.front()) {
    i0 = i1 = 0;
    w = 0.0;
    return;
  }
  if (x >= centers.back()) {
    i0 = i1 = n - 1;
    w = 0.0;
    return;
  }
  int i = 0;
  while (x >= centers[i + 1]) ++i;
  i0 = i;
  i1 = i + 1;
  w = (x - centers[i0]) / (centers[i1] - centers[i0]);
}

}  // namespace detail

/// Per-tile clipped histogram equalization with bilinear interpolation of the
/// tile mappings between tile centers. Deterministic; preserves dimensions
/// and bit depth.
inline GrayImage clahe(const GrayImage& img, const ClaheParams& params = {}) {
  if (params.clip_limit <= 0.0 || params.tiles_x < 1 || params.tiles_y < 1)
    fail(ErrorCode::InvalidParams, "clahe: clip_limit must be > 0 and tile counts >= 1");
  if (params.tiles_x > img.width || params.tiles_y > img.height)
    fail(ErrorCode::InvalidParams, "clahe: tile grid exceeds image dimensions");

  const int shift = detail::clahe_bin_shift(img.bit_depth);
  const detail::TileAxis ax = detail::tile_axis(img.width, params.tiles_x);
  const detail::TileAxis ay = detail::tile_axis(img.height, params.tiles_y);

  std::vector<std::vector<double>> mappings(
      static_cast<std::size_t>(params.tiles_x) * params.tiles_y);
  for (int tj = 0; tj < params.tiles_y; ++tj)
    for (int ti = 0; ti < params.tiles_x; ++ti)
      mappings[static_cast<std::size_t>(tj) * params.tiles_x + ti] = detail::clahe_tile_mapping(
          img, ax.lo[ti], ax.hi[ti], ay.lo[tj], ay.hi[tj], params.clip_limit);

  GrayImage out(img.width, img.height, img.bit_depth);
  for (int y = 0; y < img.height; ++y) {
    int j0, j1;
    double wy;
    detail::center_bracket(ay.center, y, j0, j1, wy);
    for (int x = 0; x < img.width; ++x) {
      int i0, i1;
      double wx;
      detail::center_bracket(ax.center, x, i0, i1, wx);
      const int b = img.at(x, y) >> shift;
      const double m00 = mappings[static_cast<std::size_t>(j0) * params.tiles_x + i0][b];
      const double m10 = mappings[static_cast<std::size_t>(j0) * params.tiles_x + i1][b];
      const double m01 = mappings[static_cast<std::size_t>(j1) * params.tiles_x + i0][b];
      const double m11 = mappings[static_cast<std::size_t>(j1) * params.tiles_x + i1][b];
      const double v = (1.0 - wy) * ((1.0 - wx) * m00 + wx * m10) +
                       wy * ((1.0 - wx) * m01 + wx * m11);
      out.at(x, y) = static_cast<std::uint16_t>(std::llround(v));
    }
  }
  return out;
}

namespace detail {

// Neumaier-compensated sum; keeps reductions accurate enough for the
// tight loss/normalization tolerances.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace detail

/// Zero-mean unit-variance normalization: (x - mean) / (stddev + epsilon),
/// population standard deviation. A constant image maps to all zeros.
inline RealImage znormalize(const GrayImage& img, double epsilon = 1e-10) {
  const std::size_t n = img.pixels.size();
  detail::CompensatedSum s;
  for (auto v : img.pixels) s.add(static_cast<double>(v));
  const double mean = s.value() / static_cast<double>(n);

  detail::CompensatedSum sq;
  for (auto v : img.pixels) {
    const double d = static_cast<double>(v) - mean;
    sq.add(d * d);
  }
  const double sigma = std::sqrt(sq.value() / static_cast<double>(n));

  RealImage out(img.width, img.height);
  const double denom = sigma + epsilon;
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = (static_cast<double>(img.pixels[i]) - mean) / denom;
  return out;
}

}  // namespace cxr
