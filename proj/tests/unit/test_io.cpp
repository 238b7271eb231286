#include "doctest.h"
#include "fixtures.hpp"

#include "elastica/error.hpp"
#include "elastica/io.hpp"

#include <cstdio>
#include <filesystem>
#include <random>

using namespace elastica;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("elastica_test_" + name)).string();
}

}  // namespace

TEST_CASE("PNM P5 maxval 255 decodes to a normalised grid") {
  std::string bytes = "P5\n# comment line\n3 2\n255\n";
  for (int v : {0, 51, 102, 153, 204, 255}) bytes += static_cast<char>(v);
  const Image img = decode_image(bytes);
  CHECK(img.width == 3);
  CHECK(img.height == 2);
  CHECK(img.channels == 1);
  for (int n = 0; n < 6; ++n) CHECK(img.data[n] == doctest::Approx(n * 51 / 255.0).epsilon(1e-15));
}

TEST_CASE("PNM 16-bit and color") {
  std::string p6 = "P6 1 1 65535\n";
  for (int v : {0, 0, 0x80, 0x00, 0xff, 0xff}) p6 += static_cast<char>(v);
  const Image img = decode_image(p6);
  CHECK(img.channels == 3);
  CHECK(img.data[0] == 0.0);
  CHECK(img.data[1] == doctest::Approx(32768.0 / 65535.0));
  CHECK(img.data[2] == 1.0);
}

TEST_CASE("malformed images raise I/O errors") {
  for (const std::string bad : {std::string("P5\n3 2\n255\n\x01"), std::string("P5 x 2 255 "), std::string("GIF89a"),
                                std::string("\x89PNG\r\n\x1a\nbroken")}) {
    try {
      decode_image(bad);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Io);
    }
  }
  CHECK_THROWS_AS(read_image("/nonexistent/file.png"), Error);
}

TEST_CASE("PNG encode and decode round trip at 8-bit precision") {
  Image gray = Image::gray(7, 5);
  Image color = Image::color(4, 3);
  for (std::size_t n = 0; n < gray.data.size(); ++n) gray.data[n] = (n * 37 % 256) / 255.0;
  for (std::size_t n = 0; n < color.data.size(); ++n) color.data[n] = (n * 11 % 256) / 255.0;
  for (const Image* img : {&gray, &color}) {
    const Image back = decode_image(encode_png(*img));
    REQUIRE(back.width == img->width);
    REQUIRE(back.channels == img->channels);
    for (std::size_t n = 0; n < img->data.size(); ++n) CHECK(back.data[n] == img->data[n]);
  }
  const Image pnm = decode_image(encode_pnm(color));
  for (std::size_t n = 0; n < color.data.size(); ++n) CHECK(pnm.data[n] == color.data[n]);
}

TEST_CASE("volume write then read is bit exact") {
  Volume v;
  v.width = 16;
  v.height = 16;
  v.n_theta = 8;
  v.spacing = 0.5;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  v.data.resize(v.size());
  for (auto& x : v.data) x = u(rng);
  v.data[3] = std::numeric_limits<double>::infinity();
  v.data[4] = -0.0;
  v.data[5] = std::numeric_limits<double>::denorm_min();
  v.meta = {{"quantity", "test"}};
  const std::string path = temp_path("vol.raw");
  write_volume(path, v);
  const Volume w = read_volume(path);
  CHECK(w.width == 16);
  CHECK(w.height == 16);
  CHECK(w.n_theta == 8);
  CHECK(w.spacing == 0.5);
  CHECK(w.meta["quantity"] == "test");
  REQUIRE(w.data.size() == v.data.size());
  CHECK(std::memcmp(w.data.data(), v.data.data(), v.data.size() * sizeof(double)) == 0);
  CHECK(std::filesystem::file_size(path) == v.size() * 8);

  // A truncated data file no longer matches its header.
  std::filesystem::resize_file(path, 100);
  try {
    read_volume(path);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DimensionMismatch);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");

  v.data.pop_back();
  CHECK_THROWS_AS(write_volume(path, v), Error);
}

TEST_CASE("JSON numbers use 17 significant digits") {
  Json j = {{"a", 0.1}, {"b", 1.0 / 3.0}, {"n", 3}, {"inf", std::numeric_limits<double>::infinity()}, {"s", "x\"y"}};
  const std::string text = dump_json(j, -1);
  CHECK(text == R"({"a":0.10000000000000001,"b":0.33333333333333331,"n":3,"inf":null,"s":"x\"y"})");
  const Json back = Json::parse(text);
  CHECK(back["a"].get<double>() == 0.1);
  CHECK(back["b"].get<double>() == 1.0 / 3.0);
  // Pretty form parses to the same document and is stable.
  CHECK(Json::parse(dump_json(j)) == Json::parse(text));
  CHECK(dump_json(j) == dump_json(j));
}

TEST_CASE("path JSON and CSV") {
  LiftedPath p;
  p.points = {make_lifted_point(1, 2, 0.5), make_lifted_point(3, 4, 7.0)};
  const Json j = path_json(p, 2.5, {{"k", 1}});
  REQUIRE(j["points"].size() == 2);
  CHECK(j["energy"] == 2.5);
  const LiftedPoint q = point_from_json(j["points"][1]);
  CHECK(q.theta == doctest::Approx(7.0 - 2 * fixture::pi));
  CHECK(path_csv(p).rfind("x,y,theta\n1,2,0.5\n", 0) == 0);
  CHECK_THROWS_AS(point_from_json(Json::array({1, 2})), Error);
}

TEST_CASE("error JSON carries the kind") {
  const Json j = error_json(Error(ErrorKind::OutOfDomain, "seed 3 outside"));
  CHECK(j["error"]["kind"] == to_string(ErrorKind::OutOfDomain));
  CHECK(j["error"]["message"] == "seed 3 outside");
  CHECK(error_json(std::runtime_error("x"))["error"]["kind"] == "internal");
}

TEST_CASE("overlay clips geometry outside the image") {
  const Image base = Image::gray(20, 10, 0.5);
  OverlaySpec spec;
  LiftedPath p;
  p.points = {make_lifted_point(-50, -50, 0), make_lifted_point(10, 5, 0), make_lifted_point(1e9, 3, 0)};
  spec.paths.push_back({p, {255, 0, 0}});
  LiftedPath far;
  far.points = {make_lifted_point(-100, 200, 0), make_lifted_point(-90, 300, 0)};
  spec.paths.push_back({far, {0, 0, 255}});
  spec.seeds.push_back({19.5, 9.5, 0.3, {0, 255, 0}});
  spec.seeds.push_back({5, 5, std::nullopt, {0, 255, 0}});
  const Image out = render_overlay(base, spec);
  CHECK(out.channels == 3);
  CHECK(out.width == 20);
  // The red segment passes through (10, 5).
  CHECK(out.at(10, 5, 0) > out.at(10, 5, 2));
  // Untouched corner keeps the base gray level.
  CHECK(out.at(0, 9, 0) == 0.5);
  for (double v : out.data) CHECK((v >= 0.0 && v <= 1.0));
}

TEST_CASE("overlay arrows are twelve pixels long") {
  const Image base = Image::gray(40, 40, 0.0);
  OverlaySpec spec;
  spec.seeds.push_back({10, 20, 0.0, {255, 255, 255}});
  const Image out = render_overlay(base, spec);
  int rightmost = 0;
  for (int x = 0; x < 40; ++x)
    if (out.at(x, 20, 0) > 0.2) rightmost = x;
  CHECK(rightmost == 22);
}
