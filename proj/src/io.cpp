#include "elastica/io.hpp"

#include "elastica/error.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace elastica {

namespace {

// ---- PNG ----------------------------------------------------------------

struct PngReader {
  std::string_view bytes;
  std::size_t pos = 0;
};

void png_read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<PngReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, r->bytes.data() + r->pos, n);
  r->pos += n;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  if (text) *text = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

Image decode_png(std::string_view bytes) {
  std::string message = "invalid PNG data";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
  if (!png) fail(ErrorKind::Io, "cannot allocate PNG reader");
  png_infop info = png_create_info_struct(png);
  PngReader reader{bytes, 0};
  Image img;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(ErrorKind::Io, "PNG decode failed: " + message);
  }
  png_set_read_fn(png, &reader, png_read_bytes);
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  png_set_expand(png);  // palette to RGB, low-bit gray to 8 bit, tRNS to alpha
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const int width = static_cast<int>(png_get_image_width(png, info));
  const int height = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int channels = png_get_channels(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * height);
  rows.resize(height);
  for (int y = 0; y < height; ++y) rows[y] = buffer.data() + stride * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (channels != 1 && channels != 3) fail(ErrorKind::Io, "unsupported PNG channel layout");
  img = channels == 1 ? Image::gray(width, height) : Image::color(width, height);
  const double scale = depth == 16 ? 65535.0 : 255.0;
  for (std::size_t n = 0; n < img.data.size(); ++n) {
    const std::size_t y = n / (static_cast<std::size_t>(width) * channels);
    const std::size_t c = n % (static_cast<std::size_t>(width) * channels);
    const png_byte* row = rows[y];
    const unsigned v = depth == 16 ? (row[2 * c] << 8 | row[2 * c + 1]) : row[c];
    img.data[n] = v / scale;
  }
  return img;
}

// ---- PNM ----------------------------------------------------------------

struct PnmHeader {
  int width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PnmHeader parse_pnm_header(std::string_view bytes) {
  PnmHeader h;
  std::size_t pos = 2;
  auto next_int = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      fail(ErrorKind::Io, "malformed PNM header");
    }
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > 1 << 24) fail(ErrorKind::Io, "PNM header value too large");
    }
    return static_cast<int>(v);
  };
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    fail(ErrorKind::Io, "malformed PNM header");
  }
  h.data_offset = pos + 1;
  if (h.width <= 0 || h.height <= 0) fail(ErrorKind::Io, "PNM image has no pixels");
  if (h.maxval <= 0 || h.maxval > 65535) fail(ErrorKind::Io, "PNM maxval must be in [1, 65535]");
  return h;
}

Image decode_pnm(std::string_view bytes) {
  const bool color = bytes[1] == '6';
  const PnmHeader h = parse_pnm_header(bytes);
  Image img = color ? Image::color(h.width, h.height) : Image::gray(h.width, h.height);
  const std::size_t sample_bytes = h.maxval > 255 ? 2 : 1;
  if (bytes.size() - h.data_offset < img.data.size() * sample_bytes) fail(ErrorKind::Io, "truncated PNM data");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t n = 0; n < img.data.size(); ++n) {
    const unsigned v = sample_bytes == 2 ? (p[2 * n] << 8 | p[2 * n + 1]) : p[n];
    img.data[n] = std::min(1.0, static_cast<double>(v) / h.maxval);
  }
  return img;
}

std::uint8_t quantize(double v) {
  if (!std::isfinite(v)) v = 0.0;
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// ---- JSON ---------------------------------------------------------------

void dump_value(const Json& j, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(key).dump();
        out += pretty ? ": " : ":";
        dump_value(value, indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line to keep point lists compact.
      const bool flat = std::none_of(j.begin(), j.end(), [](const Json& e) { return e.is_structured(); });
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += pretty && flat ? ", " : ",";
        first = false;
        if (!flat) newline(depth + 1);
        dump_value(value, indent, depth + 1, out);
      }
      if (!flat) newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
        return;
      }
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      return;
    }
    default:
      out += j.dump();
  }
}

// ---- Drawing ------------------------------------------------------------

class Canvas {
 public:
  explicit Canvas(Image& img) : img_(img) {}

  // Bilinear splat of an RGB color with the given opacity.
  void splat(double x, double y, const Rgb& c, double opacity) {
    if (!std::isfinite(x) || !std::isfinite(y)) return;
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0, fy = y - y0;
    blend(x0, y0, c, opacity * (1 - fx) * (1 - fy));
    blend(x0 + 1, y0, c, opacity * fx * (1 - fy));
    blend(x0, y0 + 1, c, opacity * (1 - fx) * fy);
    blend(x0 + 1, y0 + 1, c, opacity * fx * fy);
  }

  void line(double ax, double ay, double bx, double by, const Rgb& c) {
    if (!std::isfinite(ax) || !std::isfinite(ay) || !std::isfinite(bx) || !std::isfinite(by)) return;
    // Clip to a margin around the image so distant points cost nothing.
    if (!clip(ax, ay, bx, by)) return;
    const double len = std::hypot(bx - ax, by - ay);
    const int n = std::max(1, static_cast<int>(std::ceil(len * 4)));
    for (int i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) / n;
      splat(ax + t * (bx - ax), ay + t * (by - ay), c, 0.5);
    }
  }

  void dot(double x, double y, double r, const Rgb& c) {
    for (int j = static_cast<int>(std::floor(y - r)); j <= static_cast<int>(std::ceil(y + r)); ++j)
      for (int i = static_cast<int>(std::floor(x - r)); i <= static_cast<int>(std::ceil(x + r)); ++i) {
        const double cover = std::clamp(r + 0.5 - std::hypot(i - x, j - y), 0.0, 1.0);
        blend(i, j, c, cover);
      }
  }

 private:
  void blend(int x, int y, const Rgb& c, double a) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height || a <= 0) return;
    a = std::min(a, 1.0);
    for (int k = 0; k < 3; ++k) {
      double& v = img_.at(x, y, k);
      v = (1 - a) * v + a * (c[k] / 255.0);
    }
  }

  // Liang-Barsky clipping against [-1, w] x [-1, h].
  bool clip(double& ax, double& ay, double& bx, double& by) const {
    const double xmin = -1, ymin = -1, xmax = img_.width, ymax = img_.height;
    double t0 = 0, t1 = 1;
    const double dx = bx - ax, dy = by - ay;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {ax - xmin, xmax - ax, ay - ymin, ymax - ay};
    for (int i = 0; i < 4; ++i) {
      if (p[i] == 0) {
        if (q[i] < 0) return false;
        continue;
      }
      const double t = q[i] / p[i];
      if (p[i] < 0) {
        t0 = std::max(t0, t);
      } else {
        t1 = std::min(t1, t);
      }
      if (t0 > t1) return false;
    }
    const double sx = ax, sy = ay;
    ax = sx + t0 * dx;
    ay = sy + t0 * dy;
    bx = sx + t1 * dx;
    by = sy + t1 * dy;
    return true;
  }

  Image& img_;
};

}  // namespace

Image decode_image(std::string_view bytes) {
  static constexpr unsigned char kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(bytes);
  fail(ErrorKind::Io, "unrecognised image format (expected PNG or binary PNM)");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail(ErrorKind::Io, "cannot read " + path);
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot create " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
}

Image read_image(const std::string& path) {
  try {
    return decode_image(read_file(path));
  } catch (const Error& e) {
    fail(ErrorKind::Io, path + ": " + e.what());
  }
}

std::string encode_png(const Image& img) {
  img.validate();
  std::vector<std::uint8_t> pixels(img.data.size());
  std::transform(img.data.begin(), img.data.end(), pixels.begin(), quantize);
  png_image pi;
  std::memset(&pi, 0, sizeof pi);
  pi.version = PNG_IMAGE_VERSION;
  pi.width = static_cast<png_uint_32>(img.width);
  pi.height = static_cast<png_uint_32>(img.height);
  pi.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&pi, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorKind::Io, std::string("PNG encode failed: ") + pi.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&pi, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    fail(ErrorKind::Io, std::string("PNG encode failed: ") + pi.message);
  }
  out.resize(size);
  return out;
}

void write_png(const std::string& path, const Image& img) { write_file(path, encode_png(img)); }

std::string encode_pnm(const Image& img) {
  img.validate();
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  for (double v : img.data) out += static_cast<char>(quantize(v));
  return out;
}

void write_volume(const std::string& path, const Volume& v) {
  if (v.width <= 0 || v.height <= 0 || v.n_theta <= 0) fail(ErrorKind::InvalidArgument, "volume has no samples");
  if (v.data.size() != v.size()) fail(ErrorKind::DimensionMismatch, "volume data does not match its shape");
  std::string raw(v.data.size() * 8, '\0');
  for (std::size_t n = 0; n < v.data.size(); ++n) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v.data[n]);
    for (int b = 0; b < 8; ++b) raw[n * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  Json header;
  header["dtype"] = "float64";
  header["byte_order"] = "little";
  header["shape"] = {v.n_theta, v.height, v.width};
  header["axes"] = {"theta", "y", "x"};
  header["spacing"] = v.spacing;
  header["theta_step"] = 2.0 * std::acos(-1.0) / v.n_theta;
  header["meta"] = v.meta;
  write_file(path, raw);
  write_file(path + ".json", dump_json(header) + "\n");
}

Volume read_volume(const std::string& path) {
  Json header;
  try {
    header = Json::parse(read_file(path + ".json"));
  } catch (const Json::exception& e) {
    fail(ErrorKind::Io, path + ".json: " + e.what());
  }
  Volume v;
  try {
    if (header.at("dtype") != "float64" || header.at("byte_order") != "little") {
      fail(ErrorKind::Io, path + ": only little-endian float64 volumes are supported");
    }
    const auto& shape = header.at("shape");
    if (!shape.is_array() || shape.size() != 3) fail(ErrorKind::Io, path + ": shape must have three entries");
    v.n_theta = shape[0].get<int>();
    v.height = shape[1].get<int>();
    v.width = shape[2].get<int>();
    v.spacing = header.value("spacing", 1.0);
    v.meta = header.value("meta", Json::object());
  } catch (const Json::exception& e) {
    fail(ErrorKind::Io, path + ".json: " + e.what());
  }
  if (v.width <= 0 || v.height <= 0 || v.n_theta <= 0) fail(ErrorKind::Io, path + ": invalid shape");
  const std::string raw = read_file(path);
  if (raw.size() != v.size() * 8) {
    fail(ErrorKind::DimensionMismatch, path + ": data size " + std::to_string(raw.size()) + " bytes does not match shape");
  }
  v.data.resize(v.size());
  for (std::size_t n = 0; n < v.data.size(); ++n) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[n * 8 + b])) << (8 * b);
    v.data[n] = std::bit_cast<double>(bits);
  }
  return v;
}

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_value(j, indent, 0, out);
  return out;
}

Json point_json(const LiftedPoint& p) { return Json::array({p.x, p.y, p.theta}); }

LiftedPoint point_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 3) fail(ErrorKind::InvalidArgument, "a lifted point is [x, y, theta]");
  return make_lifted_point(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Json path_json(const LiftedPath& path, double energy, const Json& meta) {
  Json pts = Json::array();
  for (const auto& p : path.points) pts.push_back(point_json(p));
  Json j;
  j["points"] = std::move(pts);
  j["energy"] = energy;
  j["meta"] = meta;
  return j;
}

std::string path_csv(const LiftedPath& path) {
  std::string out = "x,y,theta\n";
  char buf[96];
  for (const auto& p : path.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.x, p.y, p.theta);
    out += buf;
  }
  return out;
}

Json error_json(const std::exception& e) {
  Json err;
  const auto* ee = dynamic_cast<const Error*>(&e);
  err["kind"] = ee ? to_string(ee->kind()) : "internal";
  err["message"] = e.what();
  return Json{{"error", err}};
}

Rgb palette_color(std::size_t i) {
  static constexpr Rgb kColors[] = {{230, 25, 75},  {60, 180, 75},  {0, 130, 200},  {245, 130, 48},
                                    {145, 30, 180}, {70, 240, 240}, {240, 50, 230}, {210, 245, 60}};
  return kColors[i % (sizeof kColors / sizeof kColors[0])];
}

Image render_overlay(const Image& base, const OverlaySpec& spec) {
  base.validate();
  Image out = Image::color(base.width, base.height);
  for (std::size_t n = 0; n < base.pixels(); ++n)
    for (int k = 0; k < 3; ++k) out.data[n * 3 + k] = std::clamp(base.data[n * base.channels + (base.channels == 3 ? k : 0)], 0.0, 1.0);
  Canvas canvas(out);
  for (const auto& p : spec.paths) {
    const auto& pts = p.path.points;
    if (pts.size() == 1) canvas.dot(pts[0].x, pts[0].y, 1.0, p.color);
    for (std::size_t i = 1; i < pts.size(); ++i) canvas.line(pts[i - 1].x, pts[i - 1].y, pts[i].x, pts[i].y, p.color);
  }
  for (const auto& s : spec.seeds) {
    canvas.dot(s.x, s.y, 2.0, s.color);
    if (!s.theta) continue;
    const double c = std::cos(*s.theta), sn = std::sin(*s.theta);
    const double tx = s.x + spec.arrow_length * c, ty = s.y + spec.arrow_length * sn;
    canvas.line(s.x, s.y, tx, ty, s.color);
    const double head = spec.arrow_length / 3;
    for (double side : {-1.0, 1.0}) {
      const double a = *s.theta + std::acos(-1.0) + side * 0.5;
      canvas.line(tx, ty, tx + head * std::cos(a), ty + head * std::sin(a), s.color);
    }
  }
  return out;
}

}  // namespace elastica
