#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cxr/error.hpp"
#include "cxr/image.hpp"
#include "cxr/maskops.hpp"
#include "cxr/orientation.hpp"

namespace cxr {

struct LungEllipse {
  double cx = 0, cy = 0;  // center, pixels
  double rx = 0, ry = 0;  // semi-axes, pixels
  std::uint16_t intensity = 25;
};

/// Deterministic phantom recipe: dark elliptical lungs on a brighter
/// background, an optional mediastinal band (AP) or a bright spine band
/// (LAT), the whole lung scene rotated by rotation_deg, plus seeded uniform
/// noise. The mask is the exact pre-noise rasterization of the lung union.
struct PhantomSpec {
  ViewKind view = ViewKind::AP;
  int canvas_w = 512;
  int canvas_h = 512;
  int bit_depth = 8;
  double rotation_deg = 0.0;
  Side spine_side = Side::Right;  // LAT only
  std::vector<LungEllipse> lungs;
  std::uint64_t noise_seed = 0;
  std::uint16_t background_level = 60;
  std::uint16_t spine_level = 250;
  std::uint16_t mediastinum_level = 170;
  bool mediastinum_band = true;     // AP only
  double spine_band_frac = 0.15;    // LAT band width, fraction of canvas width
  int noise_amplitude = -1;         // counts; negative selects 5% of range
};

/// Ground truth recorded alongside a generated phantom.
struct PhantomTruth {
  BinaryMask mask;
  double rotation_deg = 0.0;
  Side spine_side = Side::Right;
  std::vector<BBox> lung_bboxes;
  BBox union_bbox;
};

/// Standard two-lung AP or single-blob LAT recipe for the given canvas.
inline PhantomSpec default_phantom_spec(ViewKind view, int canvas_w = 512, int canvas_h = 512,
                                        double rotation_deg = 0.0, Side spine_side = Side::Right,
                                        std::uint64_t noise_seed = 0) {
  PhantomSpec spec;
  spec.view = view;
  spec.canvas_w = canvas_w;
  spec.canvas_h = canvas_h;
  spec.rotation_deg = rotation_deg;
  spec.spine_side = spine_side;
  spec.noise_seed = noise_seed;
  const double w = canvas_w, h = canvas_h;
  if (view == ViewKind::AP) {
    spec.lungs = {{0.35 * w, 0.50 * h, 0.10 * w, 0.28 * h, 25},
                  {0.65 * w, 0.50 * h, 0.10 * w, 0.28 * h, 25}};
  } else {
    spec.lungs = {{0.45 * w, 0.50 * h, 0.18 * w, 0.30 * h, 25}};
  }
  return spec;
}

namespace detail {

// Rotate a point about the canvas center by -deg (inverse scene rotation).
inline Point2 unrotate_about_center(double x, double y, double deg, double cx, double cy) {
  const double t = deg_to_rad(deg);
  const double c = std::cos(t), s = std::sin(t);
  const double dx = x - cx, dy = y - cy;
  // inverse of the clockwise content rotation used by maskops::rotate
  return {cx + c * dx + s * dy, cy - s * dx + c * dy};
}

inline bool ellipse_contains(const LungEllipse& e, double x, double y) {
  const double nx = (x - e.cx) / e.rx;
  const double ny = (y - e.cy) / e.ry;
  return nx * nx + ny * ny <= 1.0;
}

inline void validate_phantom_spec(const PhantomSpec& spec) {
  if (spec.canvas_w < 16 || spec.canvas_h < 16)
    fail(ErrorCode::InvalidSpec, "phantom canvas too small");
  if (spec.bit_depth != 8 && spec.bit_depth != 16)
    fail(ErrorCode::InvalidSpec, "phantom bit depth must be 8 or 16");
  if (std::abs(spec.rotation_deg) > 45.0)
    fail(ErrorCode::InvalidSpec, "phantom rotation must be within +-45 degrees");
  if (spec.lungs.empty()) fail(ErrorCode::InvalidSpec, "phantom needs at least one lung");
  const int maxv = (1 << spec.bit_depth) - 1;
  double lung_mean = 0;
  for (const LungEllipse& e : spec.lungs) {
    if (e.rx < 2 || e.ry < 2) fail(ErrorCode::InvalidSpec, "lung semi-axes must be >= 2 px");
    // rotated-ellipse extents about the scene center must stay on canvas
    const double t = deg_to_rad(spec.rotation_deg);
    const double c = std::cos(t), s = std::sin(t);
    const double hx = std::sqrt(e.rx * e.rx * c * c + e.ry * e.ry * s * s);
    const double hy = std::sqrt(e.rx * e.rx * s * s + e.ry * e.ry * c * c);
    const double ccx = (spec.canvas_w - 1) / 2.0, ccy = (spec.canvas_h - 1) / 2.0;
    const double dx = e.cx - ccx, dy = e.cy - ccy;
    const double rcx = ccx + c * dx - s * dy;
    const double rcy = ccy + s * dx + c * dy;
    if (rcx - hx < 0 || rcx + hx > spec.canvas_w - 1 || rcy - hy < 0 ||
        rcy + hy > spec.canvas_h - 1)
      fail(ErrorCode::InvalidSpec, "lung ellipse leaves the canvas after rotation");
    lung_mean += e.intensity;
  }
  lung_mean /= static_cast<double>(spec.lungs.size());
  if (spec.spine_level <= lung_mean)
    fail(ErrorCode::InvalidSpec, "spine level must exceed lung interior mean");
  if (spec.spine_level > maxv || spec.background_level > maxv || spec.mediastinum_level > maxv)
    fail(ErrorCode::InvalidSpec, "intensity level exceeds bit depth range");
}

}  // namespace detail

/// Render one phantom. Output is a pure function of the spec.
inline std::pair<GrayImage, PhantomTruth> make_phantom(const PhantomSpec& spec) {
  detail::validate_phantom_spec(spec);
  const int w = spec.canvas_w, h = spec.canvas_h;
  const double ccx = (w - 1) / 2.0, ccy = (h - 1) / 2.0;
  const int maxv = (1 << spec.bit_depth) - 1;

  PhantomTruth truth;
  truth.rotation_deg = spec.rotation_deg;
  truth.spine_side = spec.spine_side;
  truth.mask = BinaryMask(w, h);

  GrayImage img(w, h, spec.bit_depth);
  std::vector<BinaryMask> per_lung(spec.lungs.size(), BinaryMask(w, h));

  // analytic rasterization: test each pixel center against the unrotated
  // ellipse via the inverse scene rotation (no resampling)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Point2 q = detail::unrotate_about_center(x, y, spec.rotation_deg, ccx, ccy);
      img.at(x, y) = spec.background_level;
      if (spec.view == ViewKind::AP && spec.mediastinum_band && spec.lungs.size() >= 2) {
        const double inner_lo = spec.lungs[0].cx + spec.lungs[0].rx;
        const double inner_hi = spec.lungs[1].cx - spec.lungs[1].rx;
        const double y_lo = std::min(spec.lungs[0].cy - spec.lungs[0].ry,
                                     spec.lungs[1].cy - spec.lungs[1].ry);
        const double y_hi = std::max(spec.lungs[0].cy + spec.lungs[0].ry,
                                     spec.lungs[1].cy + spec.lungs[1].ry);
        if (q.x > inner_lo + 2 && q.x < inner_hi - 2 && q.y >= y_lo && q.y <= y_hi)
          img.at(x, y) = spec.mediastinum_level;
      }
      for (std::size_t i = 0; i < spec.lungs.size(); ++i) {
        if (detail::ellipse_contains(spec.lungs[i], q.x, q.y)) {
          per_lung[i].at(x, y) = 1;
          truth.mask.at(x, y) = 1;
          img.at(x, y) = spec.lungs[i].intensity;
        }
      }
    }
  }

  for (const BinaryMask& m : per_lung) truth.lung_bboxes.push_back(bbox_of(m));
  truth.union_bbox = bbox_of(truth.mask);

  // LAT spine band: a vertical bright slab flanking the (post-rotation) lung
  // bbox on the requested side, running the full canvas height
  if (spec.view == ViewKind::LAT) {
    const int band_w = std::max(2, static_cast<int>(std::lround(spec.spine_band_frac * w)));
    const int gap = 2;
    int x0, x1;
    if (spec.spine_side == Side::Right) {
      x0 = truth.union_bbox.x_max + gap;
      x1 = x0 + band_w - 1;
    } else {
      x1 = truth.union_bbox.x_min - gap;
      x0 = x1 - band_w + 1;
    }
    if (x0 < 0 || x1 > w - 1) fail(ErrorCode::InvalidSpec, "spine band leaves the canvas");
    for (int y = 0; y < h; ++y)
      for (int x = x0; x <= x1; ++x) img.at(x, y) = spec.spine_level;
  }

  // seeded uniform noise, modular draw so the stream is identical everywhere
  const int amp = spec.noise_amplitude >= 0
                      ? spec.noise_amplitude
                      : static_cast<int>(std::lround(0.05 * maxv));
  if (amp > 0) {
    std::mt19937_64 rng(spec.noise_seed);
    for (auto& px : img.pixels) {
      const int delta = static_cast<int>(rng() % (2 * static_cast<std::uint64_t>(amp) + 1)) - amp;
      const int v = static_cast<int>(px) + delta;
      px = static_cast<std::uint16_t>(std::clamp(v, 0, maxv));
    }
  }
  return {std::move(img), std::move(truth)};
}

struct PhantomCase {
  std::string id;
  PhantomSpec spec;
  GrayImage image;
  PhantomTruth truth;
};

/// n AP + n LAT phantoms with rotations uniform in [-15, +15] degrees and
/// random spine sides, fully determined by base_seed. Cases alternate
/// AP, LAT per case id.
inline std::vector<PhantomCase> make_corpus(int n, std::uint64_t base_seed) {
  if (n < 1) fail(ErrorCode::InvalidParams, "make_corpus: n must be >= 1");
  std::vector<PhantomCase> out;
  out.reserve(static_cast<std::size_t>(n) * 2);
  std::mt19937_64 rng(base_seed);
  const auto uniform01 = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  for (int i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "case_%03d", i);
    const double rot_ap = -15.0 + 30.0 * uniform01();
    const double rot_lat = -15.0 + 30.0 * uniform01();
    const Side side = (rng() & 1) ? Side::Left : Side::Right;
    const std::uint64_t seed_ap = rng();
    const std::uint64_t seed_lat = rng();

    PhantomCase ap;
    ap.id = id;
    ap.spec = default_phantom_spec(ViewKind::AP, 512, 512, rot_ap, Side::Right, seed_ap);
    auto [ap_img, ap_truth] = make_phantom(ap.spec);
    ap.image = std::move(ap_img);
    ap.truth = std::move(ap_truth);
    out.push_back(std::move(ap));

    PhantomCase lat;
    lat.id = id;
    lat.spec = default_phantom_spec(ViewKind::LAT, 512, 512, rot_lat, side, seed_lat);
    auto [lat_img, lat_truth] = make_phantom(lat.spec);
    lat.image = std::move(lat_img);
    lat.truth = std::move(lat_truth);
    out.push_back(std::move(lat));
  }
  return out;
}

}  // namespace cxr
