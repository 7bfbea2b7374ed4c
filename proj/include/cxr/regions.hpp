#pragma once

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cxr/error.hpp"
#include "cxr/image.hpp"
#include "cxr/maskops.hpp"

namespace cxr {

/// Lung detector output for one view (ingested from JSON or synthesized
/// from a mask).
struct DetectionRecord {
  ViewKind view = ViewKind::AP;
  BBox bbox;
  double confidence = 1.0;
};

/// The 12 standardized template regions: per-lung thirds, mediastinal
/// regions, and lateral thirds.
enum class RegionName {
  APUR, APMR, APLR,      // AP right lung thirds (image left)
  APUL, APML, APLL,      // AP left lung thirds (image right)
  APUM, APMM,            // AP upper/middle mediastinal
  LATULS, LATMLS, LATLLS,  // LAT lung thirds
  LATMM,                 // LAT middle mediastinal
};

inline const char* to_string(RegionName r) {
  switch (r) {
    case RegionName::APUR:   return "APUR";
    case RegionName::APMR:   return "APMR";
    case RegionName::APLR:   return "APLR";
    case RegionName::APUL:   return "APUL";
    case RegionName::APML:   return "APML";
    case RegionName::APLL:   return "APLL";
    case RegionName::APUM:   return "APUM";
    case RegionName::APMM:   return "APMM";
    case RegionName::LATULS: return "LATULS";
    case RegionName::LATMLS: return "LATMLS";
    case RegionName::LATLLS: return "LATLLS";
    case RegionName::LATMM:  return "LATMM";
  }
  return "?";
}

inline std::optional<RegionName> region_from_string(const std::string& s) {
  static const std::pair<const char*, RegionName> table[] = {
      {"APUR", RegionName::APUR},     {"APMR", RegionName::APMR},
      {"APLR", RegionName::APLR},     {"APUL", RegionName::APUL},
      {"APML", RegionName::APML},     {"APLL", RegionName::APLL},
      {"APUM", RegionName::APUM},     {"APMM", RegionName::APMM},
      {"LATULS", RegionName::LATULS}, {"LATMLS", RegionName::LATMLS},
      {"LATLLS", RegionName::LATLLS}, {"LATMM", RegionName::LATMM},
  };
  for (const auto& [name, value] : table)
    if (s == name) return value;
  return std::nullopt;
}

/// Processed-frame to source-frame mapping metadata. Region boxes live in
/// the processed (cropped, then rotated or flipped) frame; this records how
/// to get back.
struct Transform {
  std::array<int, 2> crop_offset{0, 0};
  double rotation_deg = 0.0;      // content rotation applied in the cropped frame
  Point2 rotation_center{0, 0};   // in cropped-frame coordinates
  bool flipped = false;
  double align_scale = 1.0;       // cross-view vertical scale (set by align_views)
  int frame_w = 0;                // processed-frame dimensions
  int frame_h = 0;
};

/// Named region rectangles for one view, in processed-frame coordinates.
struct RegionSet {
  ViewKind view = ViewKind::AP;
  std::map<RegionName, BBox> regions;
  Transform transform;
};

namespace detail {

inline BBox expand_clamped(const BBox& box, double margin_frac, int canvas_w, int canvas_h) {
  const int ex = static_cast<int>(std::lround(margin_frac * box.width()));
  const int ey = static_cast<int>(std::lround(margin_frac * box.height()));
  return BBox{std::max(0, box.x_min - ex), std::max(0, box.y_min - ey),
              std::min(canvas_w - 1, box.x_max + ex), std::min(canvas_h - 1, box.y_max + ey)};
}

}  // namespace detail

/// Crop rectangle for a detection: bbox expanded by margin_frac per side,
/// clamped to the canvas. Rejects low-confidence detections (default
/// threshold 0.7) and boxes that fall outside the image.
inline BBox detection_crop_rect(const DetectionRecord& det, double margin_frac, int canvas_w,
                                int canvas_h, double confidence_threshold = 0.7) {
  if (det.confidence < confidence_threshold)
    fail(ErrorCode::LowConfidence, "detection confidence below threshold");
  if (!det.bbox.inside(canvas_w, canvas_h))
    fail(ErrorCode::BoxOutsideImage, "detection bbox outside image");
  if (margin_frac < 0) fail(ErrorCode::InvalidParams, "margin_frac must be >= 0");
  return detail::expand_clamped(det.bbox, margin_frac, canvas_w, canvas_h);
}

inline std::pair<GrayImage, std::array<int, 2>> crop_to_detection(
    const GrayImage& img, const DetectionRecord& det, double margin_frac,
    double confidence_threshold = 0.7) {
  const BBox rect =
      detection_crop_rect(det, margin_frac, img.width, img.height, confidence_threshold);
  return {crop(img, rect), {rect.x_min, rect.y_min}};
}

/// Stand-in detection when no detector output exists: the mask bbox expanded
/// by the margin, confidence 1.
inline DetectionRecord bbox_from_mask_fallback(const BinaryMask& mask, double margin_frac,
                                               ViewKind view) {
  const BBox tight = bbox_of(mask);  // EmptyMask on all-zero input
  return DetectionRecord{view, detail::expand_clamped(tight, margin_frac, mask.width, mask.height),
                         1.0};
}

struct VerticalizeResult {
  GrayImage image;
  BinaryMask mask;
  double estimated_deg = 0.0;  // lung tilt found in the input
  double applied_deg = 0.0;    // content rotation applied (0 when below threshold)
  Point2 center;               // rotation center (mask centroid)
};

/// Rotate an AP pair so the lungs' principal axes align with the image
/// vertical. Rotation is skipped when the estimated tilt is at or below
/// min_angle_deg to avoid needless resampling.
inline VerticalizeResult verticalize_ap(const GrayImage& img, const BinaryMask& mask,
                                        double min_angle_deg = 0.5) {
  if (img.width != mask.width || img.height != mask.height)
    fail(ErrorCode::DimensionMismatch, "verticalize_ap: image/mask dims differ");
  VerticalizeResult r;
  r.estimated_deg = estimate_ap_rotation(mask);  // EmptyMask on all-zero input
  r.center = mask_centroid(mask);
  if (std::abs(r.estimated_deg) > min_angle_deg) {
    r.applied_deg = -r.estimated_deg;
    r.image = rotate(img, r.applied_deg, r.center);
    r.mask = rotate(mask, r.applied_deg, r.center);
  } else {
    r.applied_deg = 0.0;
    r.image = img;
    r.mask = mask;
  }
  return r;
}

/// Partition a box into three stacked thirds (upper, middle, lower) with
/// boundaries at y_min + round(h/3) and y_min + round(2h/3). The thirds tile
/// the box exactly.
inline std::array<BBox, 3> split_thirds(const BBox& box) {
  const int h = box.height();
  if (h < 3) fail(ErrorCode::TooSmall, "split_thirds: height < 3");
  const int b1 = static_cast<int>(std::lround(h / 3.0));
  const int b2 = static_cast<int>(std::lround(2.0 * h / 3.0));
  return {BBox{box.x_min, box.y_min, box.x_max, box.y_min + b1 - 1},
          BBox{box.x_min, box.y_min + b1, box.x_max, box.y_min + b2 - 1},
          BBox{box.x_min, box.y_min + b2, box.x_max, box.y_max}};
}

namespace detail {

// Same rounding rule applied horizontally (left, middle, right).
inline std::array<BBox, 3> split_thirds_h(const BBox& box) {
  const int w = box.width();
  if (w < 3) fail(ErrorCode::TooSmall, "split_thirds_h: width < 3");
  const int b1 = static_cast<int>(std::lround(w / 3.0));
  const int b2 = static_cast<int>(std::lround(2.0 * w / 3.0));
  return {BBox{box.x_min, box.y_min, box.x_min + b1 - 1, box.y_max},
          BBox{box.x_min + b1, box.y_min, box.x_min + b2 - 1, box.y_max},
          BBox{box.x_min + b2, box.y_min, box.x_max, box.y_max}};
}

inline BBox blob_bbox(const Blob& blob) {
  int x0 = blob.pixels[0].x, x1 = x0, y0 = blob.pixels[0].y, y1 = y0;
  for (const Point2i& p : blob.pixels) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return BBox{x0, y0, x1, y1};
}

}  // namespace detail

/// Extract the 8 AP regions from a verticalized two-lung mask. The image-left
/// blob is the patient's right lung (radiographic convention). Each lung bbox
/// splits into thirds; the mediastinal column spans the gap between the inner
/// lung edges over the lungs' union vertical extent, and its upper and middle
/// thirds become APUM and APMM.
inline RegionSet ap_regions(const BinaryMask& mask) {
  std::vector<Blob> blobs = connected_components(mask);
  if (blobs.size() < 2) fail(ErrorCode::NotTwoLungs, "ap_regions: need two lung components");
  blobs.resize(2);  // keep_largest(mask, 2) keeps exactly these

  BBox a = detail::blob_bbox(blobs[0]);
  BBox b = detail::blob_bbox(blobs[1]);
  const BBox& img_left = a.x_min <= b.x_min ? a : b;   // patient right lung
  const BBox& img_right = a.x_min <= b.x_min ? b : a;  // patient left lung
  if (img_left.x_max >= img_right.x_min)
    fail(ErrorCode::OverlappingLungs, "ap_regions: inner lung edges overlap");
  if (img_left.x_max + 1 > img_right.x_min - 1)
    fail(ErrorCode::OverlappingLungs, "ap_regions: no mediastinal gap between lungs");

  const auto right_thirds = split_thirds(img_left);
  const auto left_thirds = split_thirds(img_right);

  const BBox column{img_left.x_max + 1, std::min(img_left.y_min, img_right.y_min),
                    img_right.x_min - 1, std::max(img_left.y_max, img_right.y_max)};
  const auto med_thirds = split_thirds(column);

  RegionSet rs;
  rs.view = ViewKind::AP;
  rs.transform.frame_w = mask.width;
  rs.transform.frame_h = mask.height;
  rs.regions[RegionName::APUR] = right_thirds[0];
  rs.regions[RegionName::APMR] = right_thirds[1];
  rs.regions[RegionName::APLR] = right_thirds[2];
  rs.regions[RegionName::APUL] = left_thirds[0];
  rs.regions[RegionName::APML] = left_thirds[1];
  rs.regions[RegionName::APLL] = left_thirds[2];
  rs.regions[RegionName::APUM] = med_thirds[0];
  rs.regions[RegionName::APMM] = med_thirds[1];
  // lower mediastinal third is not part of the template
  return rs;
}

struct TemplateParams {
  // Width of LATMM as a fraction of the union bbox width. The default third
  // follows the same rounding rule as the vertical split.
  double latmm_width_frac = 1.0 / 3.0;
};

/// Extract the 4 LAT regions from an oriented (spine-right) mask: vertical
/// thirds of the union lung bbox, plus the central LATMM box within the
/// middle third.
inline RegionSet lat_regions(const BinaryMask& mask, const TemplateParams& params = {}) {
  const BinaryMask largest = keep_largest(mask, 1);
  const BBox box = bbox_of(largest);  // EmptyMask on all-zero input
  const auto thirds = split_thirds(box);

  BBox latmm;
  if (std::abs(params.latmm_width_frac - 1.0 / 3.0) < 1e-12) {
    latmm = detail::split_thirds_h(box)[1];
  } else {
    const int w = box.width();
    const int wm = std::clamp(static_cast<int>(std::lround(params.latmm_width_frac * w)), 1, w);
    const int x0 = box.x_min + (w - wm) / 2;
    latmm = BBox{x0, 0, x0 + wm - 1, 0};
  }
  latmm.y_min = thirds[1].y_min;
  latmm.y_max = thirds[1].y_max;

  RegionSet rs;
  rs.view = ViewKind::LAT;
  rs.transform.frame_w = mask.width;
  rs.transform.frame_h = mask.height;
  rs.regions[RegionName::LATULS] = thirds[0];
  rs.regions[RegionName::LATMLS] = thirds[1];
  rs.regions[RegionName::LATLLS] = thirds[2];
  rs.regions[RegionName::LATMM] = latmm;
  return rs;
}

namespace detail {

inline BBox region_union(const RegionSet& rs) {
  BBox u = rs.regions.begin()->second;
  for (const auto& [name, box] : rs.regions) u = union_of(u, box);
  return u;
}

}  // namespace detail

/// Cross-view alignment factor: the vertical scale between the two sets'
/// union lung bboxes. Recorded in both transforms; region boxes themselves
/// stay at native resolution.
inline double align_views(RegionSet& a, RegionSet& b) {
  const double ha = detail::region_union(a).height();
  const double hb = detail::region_union(b).height();
  const double scale = ha / hb;
  a.transform.align_scale = scale;
  b.transform.align_scale = scale;
  return scale;
}

/// One crop per region, in region-set order.
inline std::map<RegionName, GrayImage> extract_region_images(const GrayImage& img,
                                                             const RegionSet& rs) {
  std::map<RegionName, GrayImage> out;
  for (const auto& [name, box] : rs.regions) {
    if (!box.inside(img.width, img.height))
      fail(ErrorCode::BoxOutsideImage, std::string("region ") + to_string(name) + " outside image");
    out.emplace(name, crop(img, box));
  }
  return out;
}

/// Map the four corners of a processed-frame box back to source-image
/// coordinates: undo the rotation about its recorded center, undo the flip,
/// then add the crop offset.
inline std::array<Point2, 4> map_region_corners_to_source(const BBox& box, const Transform& t) {
  std::array<Point2, 4> corners = {
      Point2{static_cast<double>(box.x_min), static_cast<double>(box.y_min)},
      Point2{static_cast<double>(box.x_max), static_cast<double>(box.y_min)},
      Point2{static_cast<double>(box.x_max), static_cast<double>(box.y_max)},
      Point2{static_cast<double>(box.x_min), static_cast<double>(box.y_max)}};
  const double theta = detail::deg_to_rad(-t.rotation_deg);
  const double c = std::cos(theta), s = std::sin(theta);
  for (Point2& p : corners) {
    if (t.rotation_deg != 0.0) {
      const double dx = p.x - t.rotation_center.x;
      const double dy = p.y - t.rotation_center.y;
      p.x = t.rotation_center.x + c * dx - s * dy;
      p.y = t.rotation_center.y + s * dx + c * dy;
    }
    if (t.flipped) p.x = (t.frame_w - 1) - p.x;
    p.x += t.crop_offset[0];
    p.y += t.crop_offset[1];
  }
  return corners;
}

namespace detail {

// 5x7 glyphs for the letters used by region acronyms.
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

inline const Glyph* find_glyph(char ch) {
  static const Glyph font[] = {
      {'A', {0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11}},
      {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f}},
      {'M', {0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11}},
      {'P', {0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10}},
      {'R', {0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11}},
      {'S', {0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e}},
      {'T', {0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
      {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e}},
  };
  for (const Glyph& g : font)
    if (g.ch == ch) return &g;
  return nullptr;
}

struct Rgb {
  std::uint8_t r, g, b;
};

inline void draw_text(RgbImage& img, int x0, int y0, const std::string& text, Rgb color) {
  int x = x0;
  for (char ch : text) {
    const Glyph* g = find_glyph(ch);
    if (g) {
      for (int ry = 0; ry < 7; ++ry)
        for (int rx = 0; rx < 5; ++rx) {
          if (!(g->rows[ry] & (0x10 >> rx))) continue;
          const int px = x + rx, py = y0 + ry;
          if (px < 0 || px >= img.width || py < 0 || py >= img.height) continue;
          std::uint8_t* p = img.px(px, py);
          p[0] = color.r;
          p[1] = color.g;
          p[2] = color.b;
        }
    }
    x += 6;
  }
}

inline void draw_rect(RgbImage& img, const BBox& box, Rgb color) {
  const auto put = [&](int x, int y) {
    if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
    std::uint8_t* p = img.px(x, y);
    p[0] = color.r;
    p[1] = color.g;
    p[2] = color.b;
  };
  for (int x = box.x_min; x <= box.x_max; ++x) {
    put(x, box.y_min);
    put(x, box.y_max);
  }
  for (int y = box.y_min; y <= box.y_max; ++y) {
    put(box.x_min, y);
    put(box.x_max, y);
  }
}

}  // namespace detail

/// Burn colored region rectangles and acronym labels into an RGB copy of the
/// image. Rendering is deterministic.
inline RgbImage render_overlay(const GrayImage& img, const RegionSet& rs) {
  RgbImage out(img.width, img.height);
  const int shift = img.bit_depth == 16 ? 8 : 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t v = static_cast<std::uint8_t>(img.at(x, y) >> shift);
      std::uint8_t* p = out.px(x, y);
      p[0] = p[1] = p[2] = v;
    }

  static const detail::Rgb palette[] = {
      {230, 60, 60},  {60, 180, 60},  {70, 110, 240}, {230, 180, 40},
      {180, 70, 220}, {50, 210, 210}, {240, 120, 40}, {150, 230, 60},
      {240, 80, 160}, {90, 200, 140}, {130, 130, 250}, {210, 160, 90},
  };
  for (const auto& [name, box] : rs.regions) {
    const detail::Rgb color = palette[static_cast<int>(name) % 12];
    detail::draw_rect(out, box, color);
    detail::draw_text(out, box.x_min + 2, box.y_min + 2, to_string(name), color);
  }
  return out;
}

}  // namespace cxr
