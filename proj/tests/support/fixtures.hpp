#pragma once

// Synthetic images with known geometry, shared by unit and acceptance tests.

#include "elastica/applications.hpp"
#include "elastica/features.hpp"
#include "elastica/metrics.hpp"

#include <Eigen/Core>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace fixture {

using elastica::Image;
using std::numbers::pi;

/// Angular range of the ellipse parameter drawn with reduced contrast.
struct WeakArc {
  double t0 = 0.0, t1 = 0.0;
  double contrast = 1.0;  ///< multiplies the edge step inside [t0, t1]
};

/// Bright filled ellipse (axis-aligned) on a dark background, anti-aliased
/// over about one pixel, plus optional Gaussian noise.
inline Image ellipse_image(int w, int h, Eigen::Vector2d c, double a, double b, double noise = 0.0, unsigned seed = 1,
                           WeakArc weak = {}) {
  Image img = Image::gray(w, h);
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double dx = x - c.x(), dy = y - c.y();
      const double f = dx * dx / (a * a) + dy * dy / (b * b) - 1.0;
      const double grad = 2.0 * std::hypot(dx / (a * a), dy / (b * b));
      const double d = grad > 0 ? f / grad : -a;  // approximate signed distance
      double t = std::atan2(dy / b, dx / a);
      if (t < 0) t += 2 * pi;
      const double k = t >= weak.t0 && t <= weak.t1 ? weak.contrast : 1.0;
      double v = 0.2 + 0.6 * k * std::clamp(0.5 - d, 0.0, 1.0);
      if (noise > 0) v += noise * n(rng);
      img.at(x, y) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

/// Point and counter-clockwise (in image coordinates) tangent angle at parameter t.
inline elastica::OrientedSeed ellipse_seed(Eigen::Vector2d c, double a, double b, double t) {
  return {c.x() + a * std::cos(t), c.y() + b * std::sin(t), std::atan2(b * std::cos(t), -a * std::sin(t))};
}

/// Draws a bright straight ridge of the given half width between a and b.
inline void draw_ridge(Image& img, Eigen::Vector2d a, Eigen::Vector2d b, double half_width, double value = 0.8) {
  const Eigen::Vector2d d = b - a;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const Eigen::Vector2d p(x, y);
      const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
      const double dist = (p - a - t * d).norm() - half_width;
      const double cover = std::clamp(0.5 - dist, 0.0, 1.0);
      img.at(x, y) = (1 - cover) * img.at(x, y) + cover * value;
    }
}

/// Bright disks on a dark background.
inline Image disks_image(int w, int h, const std::vector<Eigen::Vector2d>& centres, double r) {
  Image img = Image::gray(w, h, 0.2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (const auto& c : centres) {
        const double d = std::hypot(x - c.x(), y - c.y()) - r;
        img.at(x, y) = std::max(img.at(x, y), 0.2 + 0.6 * std::clamp(0.5 - d, 0.0, 1.0));
      }
  return img;
}

/// Dark tube of given half width along y = cy + amp sin(2 pi (x - x0) / period)
/// for x in [x0, x1], on a bright background.
struct SCurve {
  double x0 = 12, x1 = 116, cy = 40, amp = 14, period = 104, half_width = 2.5;

  Eigen::Vector2d point(double x) const { return {x, cy + amp * std::sin(2 * pi * (x - x0) / period)}; }
  double slope_angle(double x) const {
    return std::atan(amp * 2 * pi / period * std::cos(2 * pi * (x - x0) / period));
  }
  double distance(const Eigen::Vector2d& p) const {
    double best = 1e300;
    for (int i = 0; i <= 4000; ++i) best = std::min(best, (p - point(x0 + (x1 - x0) * i / 4000.0)).norm());
    return best;
  }
  Image render(int w, int h) const {
    Image img = Image::gray(w, h, 0.9);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double d = distance({double(x), double(y)}) - half_width;
        img.at(x, y) = 0.9 - 0.7 * std::clamp(0.5 - d, 0.0, 1.0);
      }
    return img;
  }
};

/// Data-driven elastica metric from the steerable edge response.
inline elastica::MetricField edge_metric(const Image& img, int n_theta, double lambda, double alpha, double sigma = 1.5,
                                         double eta = 10.0) {
  const auto h = elastica::steerable_edge_response(img, sigma, 5, n_theta);
  const auto s = elastica::speed_function(h, eta, 2.0);
  return elastica::MetricField::data_driven({img.grid(), n_theta}, {lambda, alpha}, s.phi);
}

struct FluxSetup {
  elastica::MetricField metric;
  std::vector<double> orientation;
};

/// Data-driven elastica metric and orientation map from the oriented flux.
inline FluxSetup flux_metric(const Image& img, int n_theta, double lambda, double alpha,
                             const std::vector<double>& radii = {1, 2, 3, 4}, double sigma = 1.0, double eta = 10.0) {
  const auto f = elastica::oriented_flux(img, sigma, radii, n_theta);
  const auto s = elastica::speed_function(f.g, eta, 2.0);
  return {elastica::MetricField::data_driven({img.grid(), n_theta}, {lambda, alpha}, s.phi),
          elastica::optimal_orientation(f.g)};
}

/// Ellipse with axes 80 x 50 px, three tangent seeds, and a bright chord
/// between seeds 0 and 1 while the ellipse edge on that arc is faint. A weak
/// curvature penalty lets the path cut along the chord.
struct ShortcutEllipse {
  int width = 112, height = 84;
  Eigen::Vector2d centre{56, 42};
  double a = 40, b = 25;
  Image image;
  std::vector<elastica::OrientedSeed> seeds;

  ShortcutEllipse() {
    for (int i = 0; i < 3; ++i) seeds.push_back(ellipse_seed(centre, a, b, 2 * pi * i / 3));
    image = ellipse_image(width, height, centre, a, b, 0.0, 1, {0.0, 2 * pi / 3, 0.4});
    draw_ridge(image, {seeds[0].x, seeds[0].y}, {seeds[1].x, seeds[1].y}, 1.0, 0.8);
  }
};

/// Two disks with four tangent seeds each and one seed far from both.
struct TwoCircles {
  int width = 120, height = 64;
  std::vector<Eigen::Vector2d> centres{{32, 32}, {88, 32}};
  double r = 18;
  Image image;
  std::vector<elastica::OrientedSeed> seeds;
  std::size_t spurious = 8;

  TwoCircles() {
    image = disks_image(width, height, centres, r);
    for (const auto& c : centres)
      for (int i = 0; i < 4; ++i) {
        const double t = pi / 4 + pi / 2 * i;
        seeds.push_back({c.x() + r * std::cos(t), c.y() + r * std::sin(t), t + pi / 2});
      }
    seeds.push_back({60, 58, 0.0});
  }
};

}  // namespace fixture
