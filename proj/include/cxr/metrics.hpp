#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "cxr/enhance.hpp"  // CompensatedSum
#include "cxr/error.hpp"
#include "cxr/image.hpp"

namespace cxr {

/// Per-pixel foreground probabilities in [0, 1].
struct ProbMap {
  int width = 0;
  int height = 0;
  std::vector<double> probs;

  ProbMap() = default;
  ProbMap(int w, int h, double fill = 0.0) : width(w), height(h) {
    if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "probmap dimensions must be >= 1");
    probs.assign(static_cast<std::size_t>(w) * h, fill);
  }

  double& at(int x, int y) { return probs[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return probs[static_cast<std::size_t>(y) * width + x]; }
};

inline ProbMap to_probmap(const BinaryMask& mask) {
  ProbMap p(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.bits.size(); ++i) p.probs[i] = mask.bits[i] ? 1.0 : 0.0;
  return p;
}

/// Overlap and surface-distance bundle for one prediction/reference pair.
struct SegMetrics {
  double dice = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double asd = 0.0;  // pixels
};

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct MetricsSummary {
  std::vector<SegMetrics> cases;
  MetricStat dice, precision, recall, asd;
};

/// Nearest-neighbor resample with center-aligned index arithmetic
/// (all-integer, so identity dimensions are bit-identical).
inline BinaryMask resize_mask(const BinaryMask& mask, int w, int h) {
  if (w < 1 || h < 1) fail(ErrorCode::InvalidParams, "resize_mask: target dims must be >= 1");
  BinaryMask out(w, h);
  for (int y = 0; y < h; ++y) {
    const int sy = static_cast<int>((static_cast<std::int64_t>(2 * y + 1) * mask.height) / (2 * h));
    for (int x = 0; x < w; ++x) {
      const int sx = static_cast<int>((static_cast<std::int64_t>(2 * x + 1) * mask.width) / (2 * w));
      out.at(x, y) = mask.at(sx, sy);
    }
  }
  return out;
}

namespace detail {

struct OverlapCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
};

inline OverlapCounts overlap_counts(const BinaryMask& pred, const BinaryMask& ref) {
  if (pred.width != ref.width || pred.height != ref.height)
    fail(ErrorCode::DimensionMismatch, "mask dimensions differ");
  OverlapCounts c;
  for (std::size_t i = 0; i < pred.bits.size(); ++i) {
    if (pred.bits[i] && ref.bits[i])
      ++c.tp;
    else if (pred.bits[i])
      ++c.fp;
    else if (ref.bits[i])
      ++c.fn;
  }
  return c;
}

}  // namespace detail

/// Dice overlap 2|P∩R| / (|P|+|R|). Both-empty input returns 1.0 by
/// convention (perfect agreement on nothing).
inline double dice(const BinaryMask& pred, const BinaryMask& ref) {
  const auto c = detail::overlap_counts(pred, ref);
  const std::int64_t denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

/// (precision, recall); an empty denominator with tp = 0 counts as vacuously
/// perfect (1.0).
inline std::pair<double, double> precision_recall(const BinaryMask& pred, const BinaryMask& ref) {
  const auto c = detail::overlap_counts(pred, ref);
  const double precision =
      (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  const double recall =
      (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  return {precision, recall};
}

namespace detail {

// Boundary pixels: set pixels with at least one background 4-neighbor; the
// canvas edge counts as background.
inline std::vector<Point2i> boundary_pixels(const BinaryMask& m) {
  std::vector<Point2i> out;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const bool edge = x == 0 || x == m.width - 1 || y == 0 || y == m.height - 1;
      if (edge || !m.at(x - 1, y) || !m.at(x + 1, y) || !m.at(x, y - 1) || !m.at(x, y + 1))
        out.push_back({x, y});
    }
  return out;
}

constexpr double kEdtInf = 1e20;

// 1D lower envelope of parabolas (squared-distance transform).
inline void edt_1d(const double* f, int n, double* d, int* v, double* z) {
  const auto intersect = [&](int q, int p) {
    const double qd = q, pd = p;
    return ((f[q] + qd * qd) - (f[p] + pd * pd)) / (2.0 * qd - 2.0 * pd);
  };
  int k = 0;
  v[0] = 0;
  z[0] = -kEdtInf;
  z[1] = kEdtInf;
  for (int q = 1; q < n; ++q) {
    double s = intersect(q, v[k]);
    while (s <= z[k]) {
      --k;
      s = intersect(q, v[k]);
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kEdtInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Exact squared Euclidean distance to the nearest seed, over the full grid.
inline std::vector<double> edt_sq(int w, int h, const std::vector<Point2i>& seeds) {
  std::vector<double> grid(static_cast<std::size_t>(w) * h, kEdtInf);
  for (const Point2i& p : seeds) grid[static_cast<std::size_t>(p.y) * w + p.x] = 0.0;

  const int m = std::max(w, h);
  std::vector<double> f(m), d(m), z(m + 1);
  std::vector<int> v(m);

  for (int x = 0; x < w; ++x) {  // columns
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    edt_1d(f.data(), h, d.data(), v.data(), z.data());
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  for (int y = 0; y < h; ++y) {  // rows
    double* row = grid.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) f[x] = row[x];
    edt_1d(f.data(), w, d.data(), v.data(), z.data());
    for (int x = 0; x < w; ++x) row[x] = d[x];
  }
  return grid;
}

}  // namespace detail

/// Symmetric average surface distance in pixels: mean Euclidean distance
/// from each boundary pixel of one mask to the nearest boundary pixel of the
/// other, averaged over both boundary sets.
inline double asd(const BinaryMask& pred, const BinaryMask& ref) {
  if (pred.width != ref.width || pred.height != ref.height)
    fail(ErrorCode::DimensionMismatch, "asd: mask dimensions differ");
  const auto bp = detail::boundary_pixels(pred);
  const auto br = detail::boundary_pixels(ref);
  if (bp.empty() || br.empty()) fail(ErrorCode::EmptyMask, "asd: a mask has no foreground");

  const auto dist_ref = detail::edt_sq(pred.width, pred.height, br);
  const auto dist_pred = detail::edt_sq(pred.width, pred.height, bp);

  detail::CompensatedSum total;
  for (const Point2i& p : bp)
    total.add(std::sqrt(dist_ref[static_cast<std::size_t>(p.y) * pred.width + p.x]));
  for (const Point2i& r : br)
    total.add(std::sqrt(dist_pred[static_cast<std::size_t>(r.y) * pred.width + r.x]));
  return total.value() / static_cast<double>(bp.size() + br.size());
}

/// Binary cross-entropy, mean over pixels, with predictions clamped to
/// [1e-7, 1 - 1e-7] so saturated outputs stay finite.
inline double bce_loss(const ProbMap& pred, const BinaryMask& ref) {
  if (pred.width != ref.width || pred.height != ref.height)
    fail(ErrorCode::DimensionMismatch, "bce_loss: dimensions differ");
  constexpr double kClamp = 1e-7;
  detail::CompensatedSum sum;
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    const double p_hat = std::clamp(pred.probs[i], kClamp, 1.0 - kClamp);
    const double p = ref.bits[i] ? 1.0 : 0.0;
    sum.add(p * std::log(p_hat) + (1.0 - p) * std::log(1.0 - p_hat));
  }
  return -sum.value() / static_cast<double>(pred.probs.size());
}

/// Soft Dice loss -2 Σ y·ŷ / (Σ y + Σ ŷ), in [-1, 0]. No thresholding of ŷ.
inline double dice_loss(const ProbMap& pred, const BinaryMask& ref) {
  if (pred.width != ref.width || pred.height != ref.height)
    fail(ErrorCode::DimensionMismatch, "dice_loss: dimensions differ");
  detail::CompensatedSum inter, psum;
  std::int64_t ysum = 0;
  for (std::size_t i = 0; i < pred.probs.size(); ++i) {
    psum.add(pred.probs[i]);
    if (ref.bits[i]) {
      inter.add(pred.probs[i]);
      ++ysum;
    }
  }
  const double denom = static_cast<double>(ysum) + psum.value();
  if (denom == 0.0) fail(ErrorCode::BothEmpty, "dice_loss: prediction and reference both empty");
  return -2.0 * inter.value() / denom;
}

inline double combined_loss(const ProbMap& pred, const BinaryMask& ref) {
  return dice_loss(pred, ref) + bce_loss(pred, ref);
}

/// All four metrics for one pair, optionally after resampling both masks to
/// a common grid (the evaluation default is 256x256).
inline SegMetrics evaluate_case(const BinaryMask& pred, const BinaryMask& ref,
                                std::optional<std::pair<int, int>> resize_to = {{256, 256}}) {
  BinaryMask p = pred, r = ref;
  if (resize_to.has_value()) {
    p = resize_mask(pred, resize_to->first, resize_to->second);
    r = resize_mask(ref, resize_to->first, resize_to->second);
  }
  SegMetrics m;
  m.dice = dice(p, r);
  const auto pr = precision_recall(p, r);
  m.precision = pr.first;
  m.recall = pr.second;
  m.asd = asd(p, r);
  return m;
}

/// Per-metric mean and population standard deviation.
inline MetricsSummary summarize(const std::vector<SegMetrics>& cases) {
  if (cases.empty()) fail(ErrorCode::EmptyList, "summarize: no cases");
  MetricsSummary s;
  s.cases = cases;
  const auto stat = [&](auto select) {
    detail::CompensatedSum sum;
    for (const SegMetrics& m : cases) sum.add(select(m));
    const double mean = sum.value() / static_cast<double>(cases.size());
    detail::CompensatedSum sq;
    for (const SegMetrics& m : cases) {
      const double d = select(m) - mean;
      sq.add(d * d);
    }
    return MetricStat{mean, std::sqrt(sq.value() / static_cast<double>(cases.size()))};
  };
  s.dice = stat([](const SegMetrics& m) { return m.dice; });
  s.precision = stat([](const SegMetrics& m) { return m.precision; });
  s.recall = stat([](const SegMetrics& m) { return m.recall; });
  s.asd = stat([](const SegMetrics& m) { return m.asd; });
  return s;
}

}  // namespace cxr
