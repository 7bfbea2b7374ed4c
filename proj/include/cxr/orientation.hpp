#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <tuple>

#include "cxr/error.hpp"
#include "cxr/image.hpp"

namespace cxr {

enum class Side { Left, Right };

inline const char* to_string(Side s) { return s == Side::Left ? "Left" : "Right"; }

/// Detected vertebral-column side with heuristic confidence in [0, 1].
struct SpineSide {
  Side side = Side::Right;
  double score = 0.0;
};

enum class OrientationSource { Heuristic, Override };

struct OrientationOutcome {
  bool flipped = false;
  SpineSide detected;
  OrientationSource source = OrientationSource::Heuristic;
};

struct SpineParams {
  double strip_frac = 0.15;  // strip width as a fraction of the lung bbox width
};

inline GrayImage hflip(const GrayImage& img) {
  GrayImage out(img.width, img.height, img.bit_depth);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = img.at(img.width - 1 - x, y);
  return out;
}

inline BinaryMask hflip(const BinaryMask& mask) {
  BinaryMask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) out.at(x, y) = mask.at(mask.width - 1 - x, y);
  return out;
}

/// Locate the spine side on a LAT image: compare mean intensity of the two
/// vertical strips flanking the lung bbox (strip width strip_frac x bbox
/// width, clamped to the canvas, rows limited to the bbox vertical extent).
/// The brighter strip wins; exact ties resolve to Right with score 0.
/// Integer accumulation keeps the result mirror-symmetric bit for bit.
inline SpineSide detect_spine_side(const GrayImage& img, const BinaryMask& mask,
                                   const SpineParams& params = {}) {
  if (img.width != mask.width || img.height != mask.height)
    fail(ErrorCode::DimensionMismatch, "detect_spine_side: image/mask dims differ");
  const BBox box = bbox_of(mask);  // EmptyMask on all-zero input

  const int strip_w = std::max(1, static_cast<int>(std::lround(params.strip_frac * box.width())));
  const auto strip_mean = [&](int lo, int hi) {  // inclusive column range, clamped
    lo = std::max(lo, 0);
    hi = std::min(hi, img.width - 1);
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
    for (int y = box.y_min; y <= box.y_max; ++y)
      for (int x = lo; x <= hi; ++x) {
        sum += img.at(x, y);
        ++count;
      }
    return count ? static_cast<double>(sum) / static_cast<double>(count) : 0.0;
  };

  const double left_mean = strip_mean(box.x_min - strip_w, box.x_min);
  const double right_mean = strip_mean(box.x_max, box.x_max + strip_w);

  SpineSide out;
  const double total = left_mean + right_mean;
  if (right_mean >= left_mean) {
    out.side = Side::Right;
    out.score = total > 0.0 ? (right_mean - left_mean) / total : 0.0;
  } else {
    out.side = Side::Left;
    out.score = (left_mean - right_mean) / total;
  }
  return out;
}

/// Canonicalize a LAT pair so the spine sits on the image right. An override
/// asserts the spine side directly and bypasses the heuristic.
inline std::tuple<GrayImage, BinaryMask, OrientationOutcome> correct_orientation(
    const GrayImage& img, const BinaryMask& mask, std::optional<Side> override_side = {},
    const SpineParams& params = {}) {
  OrientationOutcome outcome;
  if (override_side.has_value()) {
    outcome.detected = SpineSide{*override_side, 1.0};
    outcome.source = OrientationSource::Override;
  } else {
    outcome.detected = detect_spine_side(img, mask, params);
    outcome.source = OrientationSource::Heuristic;
  }
  outcome.flipped = outcome.detected.side == Side::Left;
  if (outcome.flipped) return {hflip(img), hflip(mask), outcome};
  return {img, mask, outcome};
}

}  // namespace cxr
