#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cxr/error.hpp"
#include "cxr/image.hpp"

namespace cxr {

/// One 8-connected foreground component.
struct Blob {
  int label = 0;
  std::int64_t area = 0;
  Point2 centroid;
  std::vector<Point2i> pixels;
};

/// Major-axis orientation of a blob. angle_deg is measured from the image
/// vertical (+y), clockwise positive on screen, in (-90, 90].
struct PrincipalAxis {
  double angle_deg = 0.0;
  double eigen_ratio = 1.0;
};

namespace detail {

constexpr double kPi = 3.14159265358979323846;
inline double deg_to_rad(double d) { return d * kPi / 180.0; }
inline double rad_to_deg(double r) { return r * 180.0 / kPi; }

}  // namespace detail

/// Maximal 8-connected foreground components, sorted by area descending;
/// ties broken by the smaller (y, x) of the topmost-leftmost pixel.
/// Labels are reassigned 1..n in sort order.
inline std::vector<Blob> connected_components(const BinaryMask& mask) {
  const int w = mask.width, h = mask.height;
  std::vector<std::int32_t> seen(static_cast<std::size_t>(w) * h, 0);
  std::vector<Blob> blobs;
  std::vector<Point2i> stack;

  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t sidx = static_cast<std::size_t>(sy) * w + sx;
      if (!mask.bits[sidx] || seen[sidx]) continue;
      // scan order makes the seed the topmost-leftmost pixel of its component
      Blob blob;
      std::int64_t sum_x = 0, sum_y = 0;
      stack.clear();
      stack.push_back({sx, sy});
      seen[sidx] = 1;
      while (!stack.empty()) {
        const Point2i p = stack.back();
        stack.pop_back();
        blob.pixels.push_back(p);
        sum_x += p.x;
        sum_y += p.y;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const int nx = p.x + dx, ny = p.y + dy;
            if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
            const std::size_t nidx = static_cast<std::size_t>(ny) * w + nx;
            if (!mask.bits[nidx] || seen[nidx]) continue;
            seen[nidx] = 1;
            stack.push_back({nx, ny});
          }
        }
      }
      blob.area = static_cast<std::int64_t>(blob.pixels.size());
      blob.centroid = {static_cast<double>(sum_x) / blob.area,
                       static_cast<double>(sum_y) / blob.area};
      blobs.push_back(std::move(blob));
    }
  }

  // pixels[0] is the scan-order seed for each blob
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.area != b.area) return a.area > b.area;
    const Point2i& pa = a.pixels[0];
    const Point2i& pb = b.pixels[0];
    if (pa.y != pb.y) return pa.y < pb.y;
    return pa.x < pb.x;
  });
  for (std::size_t i = 0; i < blobs.size(); ++i) blobs[i].label = static_cast<int>(i) + 1;
  return blobs;
}

/// Keep only the k largest components; fewer than k components leaves the
/// mask unchanged.
inline BinaryMask keep_largest(const BinaryMask& mask, int k) {
  if (k < 1) fail(ErrorCode::InvalidParams, "keep_largest: k must be >= 1");
  std::vector<Blob> blobs = connected_components(mask);
  if (static_cast<int>(blobs.size()) <= k) return mask;
  BinaryMask out(mask.width, mask.height);
  for (int i = 0; i < k; ++i)
    for (const Point2i& p : blobs[i].pixels) out.at(p.x, p.y) = 1;
  return out;
}

/// Orientation of the major eigenvector of the pixel-coordinate covariance.
/// An isotropic blob (equal eigenvalues) reports angle 0 and ratio 1.
inline PrincipalAxis principal_axis(const Blob& blob) {
  if (blob.area < 2) fail(ErrorCode::DegenerateBlob, "principal_axis: blob area < 2");

  std::int64_t sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (const Point2i& p : blob.pixels) {
    sx += p.x;
    sy += p.y;
    sxx += static_cast<std::int64_t>(p.x) * p.x;
    syy += static_cast<std::int64_t>(p.y) * p.y;
    sxy += static_cast<std::int64_t>(p.x) * p.y;
  }
  const double n = static_cast<double>(blob.area);
  const double mx = sx / n, my = sy / n;
  const double cxx = sxx / n - mx * mx;
  const double cyy = syy / n - my * my;
  const double cxy = sxy / n - mx * my;

  const double tr = cxx + cyy;
  const double diff = cxx - cyy;
  const double disc = std::sqrt(diff * diff + 4.0 * cxy * cxy);
  const double l1 = 0.5 * (tr + disc);
  const double l2 = 0.5 * (tr - disc);

  PrincipalAxis out;
  if (disc <= 1e-12 * std::max(1.0, l1)) {
    out.angle_deg = 0.0;
    out.eigen_ratio = 1.0;
    return out;
  }
  out.eigen_ratio = l2 > 0.0 ? l1 / l2 : std::numeric_limits<double>::infinity();

  // eigenvector for l1; of the two row forms keep the larger-norm one
  double vx, vy;
  if (std::abs(l1 - cxx) >= std::abs(l1 - cyy)) {
    vx = cxy;
    vy = l1 - cxx;
  } else {
    vx = l1 - cyy;
    vy = cxy;
  }
  if (vx == 0.0 && vy == 0.0) {  // diagonal covariance: axis along a coordinate
    if (cxx > cyy) {
      vx = 1.0;
      vy = 0.0;
    } else {
      vx = 0.0;
      vy = 1.0;
    }
  }
  if (vy < 0.0) {
    vx = -vx;
    vy = -vy;
  }
  if (vy == 0.0) {
    out.angle_deg = 90.0;
    return out;
  }
  out.angle_deg = detail::rad_to_deg(std::atan2(-vx, vy));
  if (out.angle_deg <= -90.0) out.angle_deg += 180.0;
  return out;
}

/// Area-weighted mean of the two largest components' principal angles.
inline double estimate_ap_rotation(const BinaryMask& mask) {
  std::vector<Blob> blobs = connected_components(mask);
  if (blobs.empty()) fail(ErrorCode::EmptyMask, "estimate_ap_rotation: empty mask");
  const std::size_t take = std::min<std::size_t>(2, blobs.size());
  double weighted = 0.0, total = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const PrincipalAxis axis = principal_axis(blobs[i]);
    weighted += axis.angle_deg * static_cast<double>(blobs[i].area);
    total += static_cast<double>(blobs[i].area);
  }
  return weighted / total;
}

/// Foreground centroid.
inline Point2 mask_centroid(const BinaryMask& mask) {
  std::int64_t sx = 0, sy = 0, n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        sx += x;
        sy += y;
        ++n;
      }
  if (n == 0) fail(ErrorCode::EmptyMask, "mask_centroid: empty mask");
  return {static_cast<double>(sx) / n, static_cast<double>(sy) / n};
}

namespace detail {

// Inverse-mapping rotation loop shared by both raster kinds. Positive angle
// turns content clockwise on screen (x right, y down). Out-of-canvas
// samples read as 0; the canvas itself never grows.
template <typename Out, typename Sampler>
Out rotate_impl(int w, int h, double angle_deg, Point2 center, Out out, Sampler sample) {
  const double theta = deg_to_rad(angle_deg);
  const double c = std::cos(theta), s = std::sin(theta);
  for (int y = 0; y < h; ++y) {
    const double dy = y - center.y;
    for (int x = 0; x < w; ++x) {
      const double dx = x - center.x;
      const double sxf = center.x + c * dx + s * dy;
      const double syf = center.y - s * dx + c * dy;
      sample(x, y, sxf, syf);
    }
  }
  return out;
}

}  // namespace detail

/// Rotate intensities with bilinear interpolation. |angle| <= 45 (pipeline
/// sanity bound); angle 0 is a bit-exact copy.
inline GrayImage rotate(const GrayImage& img, double angle_deg, Point2 center) {
  if (std::abs(angle_deg) > 45.0)
    fail(ErrorCode::AngleOutOfRange, "rotate: |angle| must be <= 45 degrees");
  if (angle_deg == 0.0) return img;
  GrayImage out(img.width, img.height, img.bit_depth);
  const int maxv = img.max_value();
  detail::rotate_impl(img.width, img.height, angle_deg, center, 0,
                      [&](int x, int y, double sx, double sy) {
                        const int x0 = static_cast<int>(std::floor(sx));
                        const int y0 = static_cast<int>(std::floor(sy));
                        const double fx = sx - x0, fy = sy - y0;
                        double acc = 0.0;
                        for (int j = 0; j <= 1; ++j)
                          for (int i = 0; i <= 1; ++i) {
                            const double wgt = (i ? fx : 1.0 - fx) * (j ? fy : 1.0 - fy);
                            if (wgt == 0.0) continue;
                            const int xi = x0 + i, yj = y0 + j;
                            if (img.in_bounds(xi, yj)) acc += wgt * img.at(xi, yj);
                          }
                        const long long v = std::llround(acc);
                        out.at(x, y) = static_cast<std::uint16_t>(
                            std::clamp<long long>(v, 0, maxv));
                      });
  return out;
}

/// Rotate a mask with nearest-neighbor sampling; binarity is preserved.
inline BinaryMask rotate(const BinaryMask& mask, double angle_deg, Point2 center) {
  if (std::abs(angle_deg) > 45.0)
    fail(ErrorCode::AngleOutOfRange, "rotate: |angle| must be <= 45 degrees");
  if (angle_deg == 0.0) return mask;
  BinaryMask out(mask.width, mask.height);
  detail::rotate_impl(mask.width, mask.height, angle_deg, center, 0,
                      [&](int x, int y, double sx, double sy) {
                        const int xi = static_cast<int>(std::llround(sx));
                        const int yj = static_cast<int>(std::llround(sy));
                        out.at(x, y) = mask.in_bounds(xi, yj) ? mask.at(xi, yj) : 0;
                      });
  return out;
}

}  // namespace cxr
