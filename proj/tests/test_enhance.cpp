#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "cxr/enhance.hpp"
#include "oracles.hpp"

using namespace cxr;

TEST_CASE("clahe rejects tile grids larger than the image") {
  GrayImage img(4, 4, 8);
  CHECK(oracle::error_code_of([&] { clahe(img, {2.0, 8, 8}); }) == ErrorCode::InvalidParams);
  CHECK(oracle::error_code_of([&] { clahe(img, {0.0, 2, 2}); }) == ErrorCode::InvalidParams);
}

TEST_CASE("clahe maps a constant image to a constant image") {
  GrayImage img(32, 32, 8);
  for (auto& p : img.pixels) p = 128;
  const GrayImage out = clahe(img, {2.0, 4, 4});
  for (auto p : out.pixels) CHECK(p == out.pixels[0]);
}

TEST_CASE("clahe matches the direct per-pixel oracle within one gray level") {
  std::mt19937_64 rng(11);
  GrayImage img(64, 64, 8);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      img.at(x, y) = static_cast<std::uint16_t>((x * 4 + (rng() % 16)) & 0xff);

  const GrayImage got = clahe(img, {2.0, 2, 2});
  const GrayImage want = oracle::direct_clahe(img, {2.0, 2, 2});
  for (std::size_t i = 0; i < got.pixels.size(); ++i) {
    const int diff = int(got.pixels[i]) - int(want.pixels[i]);
    REQUIRE(std::abs(diff) <= 1);
  }
}

TEST_CASE("clahe output stays inside the intensity range and is deterministic") {
  std::mt19937_64 rng(31);
  for (int depth : {8, 16}) {
    const GrayImage img = oracle::random_image(rng, 40, 24, depth);
    const GrayImage a = clahe(img, {3.0, 4, 3});
    const GrayImage b = clahe(img, {3.0, 4, 3});
    CHECK(a == b);
    for (auto p : a.pixels) REQUIRE(p <= img.max_value());
  }
}

TEST_CASE("clahe preserves dimensions and bit depth on 16-bit input") {
  std::mt19937_64 rng(5);
  const GrayImage img = oracle::random_image(rng, 30, 22, 16);
  const GrayImage out = clahe(img, {2.0, 3, 3});
  CHECK(out.width == 30);
  CHECK(out.height == 22);
  CHECK(out.bit_depth == 16);
}

TEST_CASE("16-bit clahe matches the oracle through the binned histogram") {
  std::mt19937_64 rng(37);
  const GrayImage img = oracle::random_image(rng, 48, 48, 16);
  const GrayImage got = clahe(img, {2.5, 2, 2});
  const GrayImage want = oracle::direct_clahe(img, {2.5, 2, 2});
  for (std::size_t i = 0; i < got.pixels.size(); ++i)
    REQUIRE(std::abs(int(got.pixels[i]) - int(want.pixels[i])) <= 1);
}

TEST_CASE("znormalize of a constant image is all zeros") {
  GrayImage img(5, 5, 8);
  for (auto& p : img.pixels) p = 77;
  const RealImage out = znormalize(img);
  for (double v : out.values) CHECK(v == 0.0);
}

TEST_CASE("znormalize matches hand arithmetic on a 2x2 image") {
  GrayImage img(2, 2, 8);
  img.pixels = {0, 1, 2, 3};
  const RealImage out = znormalize(img, 1e-10);
  // mean 1.5, population sigma sqrt(1.25)
  CHECK_THAT(out.values[0], Catch::Matchers::WithinAbs(-1.3416407865, 1e-6));
  CHECK_THAT(out.values[1], Catch::Matchers::WithinAbs(-0.4472135955, 1e-6));
  CHECK_THAT(out.values[2], Catch::Matchers::WithinAbs(0.4472135955, 1e-6));
  CHECK_THAT(out.values[3], Catch::Matchers::WithinAbs(1.3416407865, 1e-6));
}

TEST_CASE("znormalize yields zero mean and unit variance") {
  std::mt19937_64 rng(17);
  for (int iter = 0; iter < 25; ++iter) {
    const GrayImage img = oracle::random_image(rng, 16 + int(rng() % 32), 16 + int(rng() % 32));
    bool constant = true;
    for (auto p : img.pixels) constant &= p == img.pixels[0];
    if (constant) continue;
    const RealImage out = znormalize(img);
    double mean = 0;
    for (double v : out.values) mean += v;
    mean /= double(out.values.size());
    double var = 0;
    for (double v : out.values) var += (v - mean) * (v - mean);
    var /= double(out.values.size());
    REQUIRE(std::abs(mean) < 1e-6);
    REQUIRE(std::abs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("znormalize is shift and positive-scale equivariant") {
  GrayImage base(8, 8, 16);
  std::mt19937_64 rng(23);
  for (auto& p : base.pixels) p = static_cast<std::uint16_t>(10 + rng() % 40);

  GrayImage scaled(8, 8, 16);
  for (std::size_t i = 0; i < base.pixels.size(); ++i)
    scaled.pixels[i] = static_cast<std::uint16_t>(3 * base.pixels[i] + 12);

  const RealImage a = znormalize(base);
  const RealImage b = znormalize(scaled);
  for (std::size_t i = 0; i < a.values.size(); ++i)
    REQUIRE_THAT(a.values[i], Catch::Matchers::WithinAbs(b.values[i], 1e-6));
}
