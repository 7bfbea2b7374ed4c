#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "cxr/image.hpp"
#include "cxr/image_io.hpp"
#include "oracles.hpp"

using namespace cxr;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("cxr_image_" + tag);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("GrayImage construction validates dimensions and depth") {
  CHECK(oracle::error_code_of([] { GrayImage(0, 4); }) == ErrorCode::InvalidParams);
  CHECK(oracle::error_code_of([] { GrayImage(4, 4, 12); }) == ErrorCode::InvalidParams);
  GrayImage img(3, 2, 16);
  CHECK(img.pixels.size() == 6);
  CHECK(img.max_value() == 65535);
}

TEST_CASE("bbox_of finds the tightest box") {
  BinaryMask m(8, 8);
  m.at(3, 5) = 1;
  CHECK(bbox_of(m) == BBox{3, 5, 3, 5});

  BinaryMask full(4, 6);
  for (auto& b : full.bits) b = 1;
  CHECK(bbox_of(full) == BBox{0, 0, 3, 5});

  BinaryMask two(8, 8);
  two.at(1, 1) = 1;
  two.at(4, 2) = 1;
  CHECK(bbox_of(two) == BBox{1, 1, 4, 2});

  BinaryMask empty(4, 4);
  CHECK(oracle::error_code_of([&] { bbox_of(empty); }) == ErrorCode::EmptyMask);
}

TEST_CASE("bbox_of touches all four edges with set bits") {
  std::mt19937_64 rng(41);
  for (int iter = 0; iter < 200; ++iter) {
    BinaryMask m = oracle::random_mask(rng, 1 + int(rng() % 12), 1 + int(rng() % 12), 0.3);
    if (m.empty()) continue;
    const BBox b = bbox_of(m);
    bool left = false, right = false, top = false, bottom = false;
    for (int y = 0; y < m.height; ++y)
      for (int x = 0; x < m.width; ++x) {
        if (!m.at(x, y)) continue;
        REQUIRE(b.contains(x, y));
        left |= x == b.x_min;
        right |= x == b.x_max;
        top |= y == b.y_min;
        bottom |= y == b.y_max;
      }
    CHECK((left && right && top && bottom));
  }
}

TEST_CASE("PGM round-trip is bit-exact for 8- and 16-bit") {
  const fs::path dir = temp_dir("pgm");
  GrayImage img(2, 2, 8);
  img.pixels = {0, 255, 128, 64};
  const std::string p8 = (dir / "a.pgm").string();
  save_image(img, p8);
  CHECK(load_image(p8) == img);

  GrayImage img16(3, 2, 16);
  img16.pixels = {0, 65535, 1, 256, 4096, 777};
  const std::string p16 = (dir / "b.pgm").string();
  save_image(img16, p16);
  CHECK(load_image(p16) == img16);
  fs::remove_all(dir);
}

TEST_CASE("PNG round-trip is bit-exact for 8- and 16-bit") {
  const fs::path dir = temp_dir("png");
  std::mt19937_64 rng(7);
  for (int depth : {8, 16}) {
    GrayImage img = oracle::random_image(rng, 13, 9, depth);
    img.pixels[0] = 0;
    img.pixels[1] = static_cast<std::uint16_t>(img.max_value());
    const std::string path = (dir / ("rt" + std::to_string(depth) + ".png")).string();
    save_image(img, path);
    CHECK(load_image(path) == img);
  }
  fs::remove_all(dir);
}

TEST_CASE("multi-channel rasters are rejected, not converted") {
  const fs::path dir = temp_dir("rgb");
  RgbImage rgb(4, 4);
  for (auto& v : rgb.rgb) v = 99;
  const std::string path = (dir / "color.png").string();
  save_rgb(rgb, path);
  CHECK(oracle::error_code_of([&] { load_image(path); }) == ErrorCode::UnsupportedFormat);
  fs::remove_all(dir);
}

TEST_CASE("missing and corrupt files map to distinct errors") {
  CHECK(oracle::error_code_of([] { load_image("/no/such/file.png"); }) ==
        ErrorCode::FileNotFound);

  const fs::path dir = temp_dir("corrupt");
  const std::string path = (dir / "bad.png").string();
  std::ofstream(path) << "\x89PNG not actually a png";
  CHECK(oracle::error_code_of([&] { load_image(path); }) == ErrorCode::CorruptData);

  const std::string garbled = (dir / "bad.bin").string();
  std::ofstream(garbled) << "XYZW";
  CHECK(oracle::error_code_of([&] { load_image(garbled); }) == ErrorCode::UnsupportedFormat);
  fs::remove_all(dir);
}

TEST_CASE("PGM headers may carry comments and odd maxvals") {
  const fs::path dir = temp_dir("pgmhdr");
  const std::string path = (dir / "c.pgm").string();
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# a comment line\n3 1\n# another\n1000\n";
    const unsigned char data[] = {0, 0, 0x03, 0xe8, 0x01, 0x2c};  // 0, 1000, 300 big-endian
    out.write(reinterpret_cast<const char*>(data), sizeof(data));
  }
  const GrayImage img = load_image(path);
  CHECK(img.width == 3);
  CHECK(img.bit_depth == 16);
  CHECK(img.pixels == std::vector<std::uint16_t>{0, 1000, 300});

  // 300 is neither 0 nor the declared maxval
  CHECK(oracle::error_code_of([&] { load_mask(path); }) == ErrorCode::NonBinaryMask);

  // maxval from the header, not the bit depth, decides mask binarity
  const std::string mask_path = (dir / "m.pgm").string();
  {
    std::ofstream out(mask_path, std::ios::binary);
    out << "P5\n2 1\n1000\n";
    const unsigned char data[] = {0, 0, 0x03, 0xe8};
    out.write(reinterpret_cast<const char*>(data), sizeof(data));
  }
  const BinaryMask m = load_mask(mask_path);
  CHECK(m.bits == std::vector<std::uint8_t>{0, 1});
  fs::remove_all(dir);
}

TEST_CASE("mask load maps {0, maxval} and rejects anything else") {
  const fs::path dir = temp_dir("mask");

  GrayImage raster(2, 2, 8);
  raster.pixels = {0, 255, 255, 0};
  const std::string path = (dir / "m.pgm").string();
  save_image(raster, path);
  const BinaryMask m = load_mask(path);
  CHECK(m.bits == std::vector<std::uint8_t>{0, 1, 1, 0});

  GrayImage bad(2, 1, 8);
  bad.pixels = {0, 1};
  const std::string bad_path = (dir / "bad.pgm").string();
  save_image(bad, bad_path);
  CHECK(oracle::error_code_of([&] { load_mask(bad_path); }) == ErrorCode::NonBinaryMask);

  GrayImage zeros(3, 3, 8);
  const std::string zero_path = (dir / "zero.png").string();
  save_image(zeros, zero_path);
  CHECK(load_mask(zero_path).count() == 0);
  fs::remove_all(dir);
}

TEST_CASE("mask round-trip is bit-exact in both formats") {
  const fs::path dir = temp_dir("maskrt");
  std::mt19937_64 rng(21);
  const BinaryMask m = oracle::random_mask(rng, 17, 11, 0.4);
  for (const char* name : {"m.png", "m.pgm"}) {
    const std::string path = (dir / name).string();
    save_mask(m, path);
    CHECK(load_mask(path) == m);
  }
  fs::remove_all(dir);
}

TEST_CASE("save to an unwritable path reports IoError") {
  GrayImage img(2, 2, 8);
  CHECK(oracle::error_code_of([&] { save_image(img, "/no/such/dir/out.png"); }) ==
        ErrorCode::IoError);
  BinaryMask m(2, 2);
  CHECK(oracle::error_code_of([&] { save_mask(m, "/no/such/dir/out.pgm"); }) ==
        ErrorCode::IoError);
}

TEST_CASE("crop copies the exact subwindow") {
  GrayImage img(4, 3, 8);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint16_t>(10 * y + x);
  const GrayImage sub = crop(img, BBox{1, 1, 2, 2});
  CHECK(sub.width == 2);
  CHECK(sub.height == 2);
  CHECK(sub.at(0, 0) == 11);
  CHECK(sub.at(1, 1) == 22);
  CHECK(oracle::error_code_of([&] { crop(img, BBox{0, 0, 4, 2}); }) ==
        ErrorCode::BoxOutsideImage);
}
