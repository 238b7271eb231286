#pragma once

#include "elastica/image.hpp"
#include "elastica/tracer.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace elastica {

using Json = nlohmann::ordered_json;

/// Decodes PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) or binary PNM
/// (P5/P6, maxval up to 65535) into [0, 1]. Alpha is dropped.
Image decode_image(std::string_view bytes);
Image read_image(const std::string& path);

/// 8-bit PNG of a gray or color image; samples are clamped to [0, 1].
std::string encode_png(const Image& img);
void write_png(const std::string& path, const Image& img);

/// Binary PNM (P5 gray / P6 color), maxval 255.
std::string encode_pnm(const Image& img);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view bytes);

/// Scalar volume with shape (n_theta, height, width), x fastest.
struct Volume {
  int width = 0;
  int height = 0;
  int n_theta = 1;
  double spacing = 1.0;
  std::vector<double> data;
  Json meta = Json::object();

  std::size_t size() const { return static_cast<std::size_t>(width) * height * n_theta; }
};

/// Writes `path` as raw little-endian float64 and `path + ".json"` as header.
void write_volume(const std::string& path, const Volume& v);
/// Reads a volume written by write_volume; the header must match the data size.
Volume read_volume(const std::string& path);

/// JSON text with every floating-point number printed with 17 significant
/// digits. Non-finite numbers become null. indent < 0 gives a compact form.
std::string dump_json(const Json& j, int indent = 2);

Json point_json(const LiftedPoint& p);
LiftedPoint point_from_json(const Json& j);
/// {points: [[x, y, theta]...], energy, meta}.
Json path_json(const LiftedPath& path, double energy, const Json& meta = Json::object());
/// One "x,y,theta" row per point with a header line.
std::string path_csv(const LiftedPath& path);

/// Machine-readable error: {error: {kind, message}}.
Json error_json(const std::exception& e);

using Rgb = std::array<std::uint8_t, 3>;

struct OverlayPath {
  LiftedPath path;
  Rgb color{255, 0, 0};
};

struct OverlaySeed {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> theta;
  Rgb color{0, 255, 0};
};

struct OverlaySpec {
  std::vector<OverlayPath> paths;
  std::vector<OverlaySeed> seeds;
  double arrow_length = 12.0;  ///< pixels
};

/// Color image of `base` with the paths drawn as anti-aliased polylines and
/// each seed as a dot plus a tangent arrow. Geometry outside the image is clipped.
Image render_overlay(const Image& base, const OverlaySpec& spec);

/// Distinct colors for path i of n.
Rgb palette_color(std::size_t i);

}  // namespace elastica
