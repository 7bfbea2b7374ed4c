#include <catch2/catch_amalgamated.hpp>

#include "cxr/maskops.hpp"
#include "cxr/synthgen.hpp"
#include "oracles.hpp"

using namespace cxr;

TEST_CASE("phantoms are pure functions of their spec") {
  const PhantomSpec spec = default_phantom_spec(ViewKind::AP, 256, 256, 7.5, Side::Right, 42);
  auto [img1, truth1] = make_phantom(spec);
  auto [img2, truth2] = make_phantom(spec);
  CHECK(img1 == img2);
  CHECK(truth1.mask == truth2.mask);
  CHECK(truth1.union_bbox == truth2.union_bbox);
}

TEST_CASE("symmetric unrotated AP phantom estimates zero rotation") {
  const PhantomSpec spec = default_phantom_spec(ViewKind::AP, 512, 512, 0.0, Side::Right, 1);
  auto [img, truth] = make_phantom(spec);
  CHECK_THAT(estimate_ap_rotation(truth.mask), Catch::Matchers::WithinAbs(0.0, 0.5));
}

TEST_CASE("rotated AP phantom is recovered by PCA within a degree") {
  const PhantomSpec spec = default_phantom_spec(ViewKind::AP, 512, 512, 10.0, Side::Right, 2);
  auto [img, truth] = make_phantom(spec);
  CHECK_THAT(estimate_ap_rotation(truth.mask), Catch::Matchers::WithinAbs(10.0, 1.0));
}

TEST_CASE("truth metadata is consistent with the rendered mask") {
  for (double rot : {0.0, -9.0, 13.0}) {
    const PhantomSpec spec = default_phantom_spec(ViewKind::AP, 384, 384, rot, Side::Right, 3);
    auto [img, truth] = make_phantom(spec);
    CHECK(bbox_of(truth.mask) == truth.union_bbox);
    REQUIRE(truth.lung_bboxes.size() == 2);
    CHECK(truth.rotation_deg == rot);

    // per-lung boxes tile inside the union
    for (const BBox& b : truth.lung_bboxes) {
      CHECK(b.x_min >= truth.union_bbox.x_min);
      CHECK(b.x_max <= truth.union_bbox.x_max);
    }
    // two separated lungs
    const auto blobs = connected_components(truth.mask);
    REQUIRE(blobs.size() == 2);
  }
}

TEST_CASE("LAT phantom places the bright band outside the lung bbox") {
  for (Side side : {Side::Left, Side::Right}) {
    const PhantomSpec spec = default_phantom_spec(ViewKind::LAT, 512, 512, 6.0, side, 4);
    auto [img, truth] = make_phantom(spec);
    CHECK(truth.spine_side == side);
    const BBox box = truth.union_bbox;
    // band side mean must exceed the opposite side
    std::uint64_t left_sum = 0, right_sum = 0;
    std::uint64_t left_n = 0, right_n = 0;
    for (int y = box.y_min; y <= box.y_max; ++y) {
      for (int x = 0; x < box.x_min; ++x) {
        left_sum += img.at(x, y);
        ++left_n;
      }
      for (int x = box.x_max + 1; x < img.width; ++x) {
        right_sum += img.at(x, y);
        ++right_n;
      }
    }
    const double left_mean = double(left_sum) / double(left_n);
    const double right_mean = double(right_sum) / double(right_n);
    if (side == Side::Right)
      CHECK(right_mean > left_mean);
    else
      CHECK(left_mean > right_mean);
  }
}

TEST_CASE("noise respects the amplitude bound") {
  PhantomSpec spec = default_phantom_spec(ViewKind::AP, 128, 128, 0.0, Side::Right, 9);
  spec.noise_amplitude = 0;
  auto [clean, truth_clean] = make_phantom(spec);
  spec.noise_amplitude = 10;
  auto [noisy, truth_noisy] = make_phantom(spec);
  CHECK(truth_clean.mask == truth_noisy.mask);  // mask is pre-noise
  int max_delta = 0;
  for (std::size_t i = 0; i < clean.pixels.size(); ++i)
    max_delta = std::max(max_delta, std::abs(int(clean.pixels[i]) - int(noisy.pixels[i])));
  CHECK(max_delta <= 10);
  CHECK(max_delta > 0);
}

TEST_CASE("invalid specs are rejected") {
  PhantomSpec far = default_phantom_spec(ViewKind::AP, 128, 128, 0.0, Side::Right, 1);
  far.lungs[0].cx = 10;  // ellipse pokes out of the canvas
  CHECK(oracle::error_code_of([&] { make_phantom(far); }) == ErrorCode::InvalidSpec);

  PhantomSpec dim = default_phantom_spec(ViewKind::AP, 128, 128, 0.0, Side::Right, 1);
  dim.spine_level = 20;  // must exceed lung interior mean
  CHECK(oracle::error_code_of([&] { make_phantom(dim); }) == ErrorCode::InvalidSpec);

  PhantomSpec twisted = default_phantom_spec(ViewKind::AP, 128, 128, 50.0, Side::Right, 1);
  CHECK(oracle::error_code_of([&] { make_phantom(twisted); }) == ErrorCode::InvalidSpec);
}

TEST_CASE("corpus generation is seed-deterministic") {
  const auto corpus1 = make_corpus(3, 1234);
  const auto corpus2 = make_corpus(3, 1234);
  REQUIRE(corpus1.size() == 6);  // n AP + n LAT
  for (std::size_t i = 0; i < corpus1.size(); ++i) {
    CHECK(corpus1[i].id == corpus2[i].id);
    CHECK(corpus1[i].image == corpus2[i].image);
    CHECK(corpus1[i].truth.mask == corpus2[i].truth.mask);
  }

  const auto corpus3 = make_corpus(3, 999);
  bool any_different = false;
  for (std::size_t i = 0; i < corpus1.size(); ++i)
    any_different |= corpus1[i].truth.rotation_deg != corpus3[i].truth.rotation_deg;
  CHECK(any_different);

  for (std::size_t i = 0; i < corpus1.size(); i += 2) {
    CHECK(corpus1[i].spec.view == ViewKind::AP);
    CHECK(corpus1[i + 1].spec.view == ViewKind::LAT);
    CHECK(std::abs(corpus1[i].truth.rotation_deg) <= 15.0);
    CHECK(std::abs(corpus1[i + 1].truth.rotation_deg) <= 15.0);
  }
}
