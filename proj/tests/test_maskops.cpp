#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "cxr/maskops.hpp"
#include "cxr/metrics.hpp"
#include "cxr/synthgen.hpp"
#include "oracles.hpp"

using namespace cxr;

namespace {

BinaryMask rect_mask(int w, int h, const BBox& box) {
  BinaryMask m(w, h);
  for (int y = box.y_min; y <= box.y_max; ++y)
    for (int x = box.x_min; x <= box.x_max; ++x) m.at(x, y) = 1;
  return m;
}

std::set<std::pair<int, int>> pixel_set(const Blob& b) {
  std::set<std::pair<int, int>> s;
  for (const Point2i& p : b.pixels) s.insert({p.x, p.y});
  return s;
}

// rectangle rasterized at a given tilt (content rotated clockwise on screen)
BinaryMask tilted_rect(int w, int h, double cx, double cy, double half_w, double half_h,
                       double angle_deg) {
  BinaryMask m(w, h);
  const double t = angle_deg * 3.14159265358979323846 / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // inverse rotation into the rectangle's own frame
      const double dx = x - cx, dy = y - cy;
      const double ux = c * dx + s * dy;
      const double uy = -s * dx + c * dy;
      if (std::abs(ux) <= half_w && std::abs(uy) <= half_h) m.at(x, y) = 1;
    }
  return m;
}

}  // namespace

TEST_CASE("two disjoint squares are two components of area 9") {
  BinaryMask m(16, 8);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) {
      m.at(x, y) = 1;
      m.at(x + 10, y + 4) = 1;
    }
  const auto blobs = connected_components(m);
  REQUIRE(blobs.size() == 2);
  CHECK(blobs[0].area == 9);
  CHECK(blobs[1].area == 9);
  CHECK(blobs[0].label == 1);
  CHECK(blobs[1].label == 2);
  // equal areas: the component whose topmost-leftmost pixel sorts first wins
  CHECK(blobs[0].pixels[0] == Point2i{0, 0});
}

TEST_CASE("single pixel is one component with centroid at itself") {
  BinaryMask m(5, 5);
  m.at(2, 3) = 1;
  const auto blobs = connected_components(m);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].area == 1);
  CHECK(blobs[0].centroid.x == 2.0);
  CHECK(blobs[0].centroid.y == 3.0);
}

TEST_CASE("diagonal neighbors join under 8-connectivity") {
  BinaryMask m(4, 4);
  m.at(0, 0) = 1;
  m.at(1, 1) = 1;
  const auto blobs = connected_components(m);
  REQUIRE(blobs.size() == 1);
  CHECK(blobs[0].area == 2);
}

TEST_CASE("components match the flood-fill oracle on random small masks") {
  std::mt19937_64 rng(97);
  for (int iter = 0; iter < 500; ++iter) {
    const int w = 1 + int(rng() % 8), h = 1 + int(rng() % 8);
    const BinaryMask m = oracle::random_mask(rng, w, h, 0.45);
    const auto got = connected_components(m);
    auto want = oracle::flood_fill_components(m);

    REQUIRE(got.size() == want.size());
    std::int64_t total = 0;
    for (const Blob& b : got) {
      total += b.area;
      const auto s = pixel_set(b);
      const bool found = std::any_of(want.begin(), want.end(),
                                     [&](const auto& comp) { return comp == s; });
      REQUIRE(found);
    }
    CHECK(total == m.count());
  }
}

TEST_CASE("component areas are sorted descending with deterministic ties") {
  std::mt19937_64 rng(13);
  for (int iter = 0; iter < 100; ++iter) {
    const BinaryMask m = oracle::random_mask(rng, 8, 8, 0.4);
    const auto blobs = connected_components(m);
    for (std::size_t i = 1; i < blobs.size(); ++i) {
      REQUIRE(blobs[i - 1].area >= blobs[i].area);
      if (blobs[i - 1].area == blobs[i].area) {
        const auto& pa = blobs[i - 1].pixels[0];
        const auto& pb = blobs[i].pixels[0];
        REQUIRE((pa.y < pb.y || (pa.y == pb.y && pa.x < pb.x)));
      }
    }
  }
}

TEST_CASE("keep_largest removes specks and keeps ties deterministic") {
  BinaryMask m(20, 10);
  for (int y = 0; y < 6; ++y)
    for (int x = 0; x < 4; ++x) {
      m.at(x, y) = 1;       // lung 1
      m.at(x + 8, y) = 1;   // lung 2
    }
  m.at(18, 9) = 1;  // speck
  const BinaryMask cleaned = keep_largest(m, 2);
  CHECK(cleaned.count() == 48);
  CHECK(cleaned.at(18, 9) == 0);

  // k >= component count is the identity
  CHECK(keep_largest(m, 3) == m);
  CHECK(keep_largest(m, 10) == m);

  // equal-area tie at rank k follows the component sort order
  BinaryMask tie(10, 4);
  tie.at(2, 2) = 1;  // same area; larger (y, x)
  tie.at(5, 1) = 1;  // same area; smaller (y, x) -> kept
  const BinaryMask kept = keep_largest(tie, 1);
  CHECK(kept.count() == 1);
  CHECK(kept.at(5, 1) == 1);
}

TEST_CASE("principal axis of an axis-aligned tall rectangle is vertical") {
  const BinaryMask m = rect_mask(40, 50, BBox{10, 5, 19, 34});  // 10 x 30
  const auto blobs = connected_components(m);
  const PrincipalAxis axis = principal_axis(blobs[0]);
  CHECK_THAT(axis.angle_deg, Catch::Matchers::WithinAbs(0.0, 1e-6));
  CHECK(axis.eigen_ratio > 1.0);
}

TEST_CASE("principal axis recovers a rasterized tilt of +10 degrees") {
  const BinaryMask m = tilted_rect(128, 128, 63.5, 63.5, 5.0, 15.0, 10.0);
  const auto blobs = connected_components(m);
  const PrincipalAxis axis = principal_axis(blobs[0]);
  CHECK(axis.angle_deg >= 9.0);
  CHECK(axis.angle_deg <= 11.0);
}

TEST_CASE("principal axis of a disc reports the isotropy convention") {
  BinaryMask m(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x) {
      const double dx = x - 31.5, dy = y - 31.5;
      if (dx * dx + dy * dy <= 20.0 * 20.0) m.at(x, y) = 1;
    }
  const auto blobs = connected_components(m);
  const PrincipalAxis axis = principal_axis(blobs[0]);
  CHECK(axis.angle_deg == 0.0);
  CHECK_THAT(axis.eigen_ratio, Catch::Matchers::WithinAbs(1.0, 1e-2));
}

TEST_CASE("principal axis errors on single-pixel blobs") {
  BinaryMask m(4, 4);
  m.at(1, 1) = 1;
  const auto blobs = connected_components(m);
  CHECK(oracle::error_code_of([&] { principal_axis(blobs[0]); }) == ErrorCode::DegenerateBlob);
}

TEST_CASE("principal axis is translation invariant and mirror equivariant") {
  const BinaryMask base = tilted_rect(128, 128, 50.0, 50.0, 6.0, 20.0, 8.0);
  const auto blob = connected_components(base)[0];
  const PrincipalAxis axis = principal_axis(blob);

  Blob shifted = blob;
  for (auto& p : shifted.pixels) {
    p.x += 13;
    p.y += 7;
  }
  const PrincipalAxis axis2 = principal_axis(shifted);
  CHECK_THAT(axis2.angle_deg, Catch::Matchers::WithinAbs(axis.angle_deg, 1e-9));
  CHECK_THAT(axis2.eigen_ratio, Catch::Matchers::WithinAbs(axis.eigen_ratio, 1e-9));

  Blob mirrored = blob;
  for (auto& p : mirrored.pixels) p.x = 127 - p.x;
  const PrincipalAxis axis3 = principal_axis(mirrored);
  CHECK_THAT(axis3.angle_deg, Catch::Matchers::WithinAbs(-axis.angle_deg, 1e-6));
}

TEST_CASE("estimate_ap_rotation averages the two lungs by area") {
  // two rectangles rasterized at +5 degrees
  BinaryMask m(256, 256);
  const BinaryMask a = tilted_rect(256, 256, 80, 128, 12, 50, 5.0);
  const BinaryMask b = tilted_rect(256, 256, 176, 128, 12, 50, 5.0);
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = a.bits[i] | b.bits[i];
  CHECK_THAT(estimate_ap_rotation(m), Catch::Matchers::WithinAbs(5.0, 1.0));

  // mirror-symmetric pair at +7 and -7 with equal areas cancels out
  BinaryMask sym(256, 256);
  const BinaryMask c = tilted_rect(256, 256, 80, 128, 12, 50, 7.0);
  const BinaryMask d = tilted_rect(256, 256, 176, 128, 12, 50, -7.0);
  for (std::size_t i = 0; i < sym.bits.size(); ++i) sym.bits[i] = c.bits[i] | d.bits[i];
  CHECK_THAT(estimate_ap_rotation(sym), Catch::Matchers::WithinAbs(0.0, 1.0));

  // single vertical rectangle
  const BinaryMask v = rect_mask(64, 64, BBox{20, 10, 29, 50});
  CHECK_THAT(estimate_ap_rotation(v), Catch::Matchers::WithinAbs(0.0, 1e-9));

  BinaryMask empty(8, 8);
  CHECK(oracle::error_code_of([&] { estimate_ap_rotation(empty); }) == ErrorCode::EmptyMask);
}

TEST_CASE("rotate by zero is bit-identical") {
  std::mt19937_64 rng(3);
  const GrayImage img = oracle::random_image(rng, 33, 21);
  CHECK(rotate(img, 0.0, {16.0, 10.0}) == img);
  const BinaryMask m = oracle::random_mask(rng, 33, 21, 0.5);
  CHECK(rotate(m, 0.0, {16.0, 10.0}) == m);
}

TEST_CASE("rotate rejects angles beyond the sanity bound") {
  GrayImage img(8, 8, 8);
  CHECK(oracle::error_code_of([&] { rotate(img, 46.0, {4.0, 4.0}); }) ==
        ErrorCode::AngleOutOfRange);
}

TEST_CASE("mask rotation round-trips with high overlap") {
  const BinaryMask m = rect_mask(128, 128, BBox{48, 30, 79, 97});  // 32 x 68 blob
  const Point2 center{63.5, 63.5};
  for (double theta : {5.0, 10.0, 15.0}) {
    const BinaryMask rotated = rotate(m, theta, center);
    const BinaryMask back = rotate(rotated, -theta, center);
    REQUIRE(dice(back, m) >= 0.98);
  }
}

TEST_CASE("a disc is rotation invariant up to resampling") {
  BinaryMask m(128, 128);
  for (int y = 0; y < 128; ++y)
    for (int x = 0; x < 128; ++x) {
      const double dx = x - 63.5, dy = y - 63.5;
      if (dx * dx + dy * dy <= 30.0 * 30.0) m.at(x, y) = 1;
    }
  for (double theta : {10.0, 30.0, 45.0}) {
    const BinaryMask rotated = rotate(m, theta, {63.5, 63.5});
    REQUIRE(dice(rotated, m) >= 0.98);
  }
}

TEST_CASE("rotation preserves binarity and canvas size") {
  std::mt19937_64 rng(29);
  for (int iter = 0; iter < 20; ++iter) {
    const BinaryMask m = oracle::random_mask(rng, 20 + int(rng() % 30), 20 + int(rng() % 30), 0.3);
    const double theta = -45.0 + double(rng() % 900) / 10.0;
    const BinaryMask r = rotate(m, theta, {m.width / 2.0, m.height / 2.0});
    REQUIRE(r.width == m.width);
    REQUIRE(r.height == m.height);
    for (auto b : r.bits) REQUIRE((b == 0 || b == 1));
  }
}
