#include "elastica/error.hpp"
#include "elastica/features.hpp"
#include "images.hpp"

#include <doctest.h>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace elastica;
using std::numbers::pi;
using namespace testimg;

namespace {

Image random_image(int w, int h, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Image img = Image::gray(w, h);
  for (double& v : img.data) v = u(rng);
  return img;
}

Image rotate90(const Image& img) {
  // (x, y) -> (n - 1 - y, x): counter-clockwise quarter turn.
  Image out = Image::gray(img.height, img.width);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(img.height - 1 - y, x) = img.at(x, y);
  return out;
}

}  // namespace

TEST_CASE("Gaussian derivative kernels") {
  const auto g0 = gaussian_derivative_kernel(1.5, 0);
  CHECK(g0.size() == 13);
  double sum = 0;
  for (double v : g0) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
  // Numerical derivative of the closed form.
  for (int n = 1; n <= 5; ++n) {
    for (double t : {-2.3, -0.4, 0.0, 0.7, 3.1}) {
      const double h = 1e-4;
      const double fd = (gaussian_derivative(1.3, n - 1, t + h) - gaussian_derivative(1.3, n - 1, t - h)) / (2 * h);
      CHECK(gaussian_derivative(1.3, n, t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  CHECK(mirror_index(-1, 5) == 0);
  CHECK(mirror_index(5, 5) == 4);
  CHECK(mirror_index(-7, 5) == 3);
  CHECK_THROWS_AS(gaussian_derivative_kernel(0.0, 1), Error);
}

TEST_CASE("steering coefficients expand the rotated derivative") {
  // du dn at theta: (c dx + s dy)(-s dx + c dy) = -cs dx^2 + (c^2 - s^2) dx dy + cs dy^2.
  const double th = 0.7, c = std::cos(th), s = std::sin(th);
  const auto k = steering_coefficients(1, 1, th);
  REQUIRE(k.size() == 3);
  CHECK(k[2] == doctest::Approx(-c * s));
  CHECK(k[1] == doctest::Approx(c * c - s * s));
  CHECK(k[0] == doctest::Approx(c * s));
}

TEST_CASE("constant image gives zero responses") {
  const Image img = Image::gray(24, 20, 0.6);
  const OrientedResponse h = steerable_edge_response(img, 1.5, 5, 16);
  CHECK(h.max() < 1e-12);
  const FluxResult f = oriented_flux(img, 1.0, {1, 2, 3}, 16);
  CHECK(f.g.max() < 1e-12);
  for (double v : f.vesselness) CHECK(v < 1e-12);
  for (const auto& q : f.tensors) CHECK(q.norm() < 1e-12);
  const std::vector<double> theta = optimal_orientation(f.g);
  for (double t : theta) CHECK(t == 0.0);
}

TEST_CASE("recombined response equals convolution with the rotated kernel") {
  const Image img = random_image(30, 26, 3);
  for (int order : {1, 3, 5}) {
    const double sigma = 1.5;
    const SteerableBank bank(img, sigma, order);
    const SteerableWeights w = bank.weights();
    const int r = static_cast<int>(std::ceil(4 * sigma));
    for (double th : {0.0, 0.3, 1.2, 2.0 * pi / 3, 4.0}) {
      const double c = std::cos(th), s = std::sin(th);
      auto kernel = [&](double x, double y) {
        const double a = c * x + s * y, b = -s * x + c * y;
        auto d = [&](int p, int q) { return gaussian_derivative(sigma, p, a) * gaussian_derivative(sigma, q, b); };
        return w.a10 * d(1, 0) + w.a30 * d(3, 0) + w.a32 * d(1, 2) + w.a52 * d(3, 2) + w.a54 * d(1, 4);
      };
      const std::vector<double> steered = bank.signed_response(0, th);
      double worst = 0, scale = 0;
      for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
          double direct = 0;
          for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx)
              direct += kernel(dx, dy) * img.at(mirror_index(x - dx, img.width), mirror_index(y - dy, img.height));
          worst = std::max(worst, std::abs(direct - steered[y * img.width + x]));
          scale = std::max(scale, std::abs(direct));
        }
      CHECK(worst <= 1e-6 * scale);
    }
  }
}

TEST_CASE("first-order response is the smoothed directional derivative") {
  const WaveImage waves = random_waves(11, 0.25);
  const int n = 96;
  const Image img = waves.render(n);
  const double sigma = 2.0;
  const OrientedResponse h = steerable_edge_response(img, sigma, 1, 24);
  const std::vector<double> sm = smooth(img, sigma);
  auto at = [&](int x, int y) { return sm[y * n + x]; };
  double worst = 0;
  const double scale = h.max();
  for (int k = 0; k < 24; ++k) {
    const Eigen::Vector2d u = orientation_vector(k * h.grid.theta_step());
    for (int y = 24; y < n - 24; y += 3)
      for (int x = 24; x < n - 24; x += 3) {
        // Fourth-order central differences.
        const double gx = (-at(x + 2, y) + 8 * at(x + 1, y) - 8 * at(x - 1, y) + at(x - 2, y)) / 12;
        const double gy = (-at(x, y + 2) + 8 * at(x, y + 1) - 8 * at(x, y - 1) + at(x, y - 2)) / 12;
        worst = std::max(worst, std::abs(std::abs(u.x() * gx + u.y() * gy) - h.at(x, y, k)));
      }
  }
  CHECK(worst <= 1e-3 * scale);
}

TEST_CASE("edge response is pi-symmetric and peaks across a step edge") {
  Image img = Image::gray(40, 40);
  for (int y = 0; y < 40; ++y)
    for (int x = 20; x < 40; ++x) img.at(x, y) = 1.0;
  const int nt = 36;
  const OrientedResponse h = steerable_edge_response(img, 1.5, 5, nt);
  for (int k = 0; k < nt / 2; ++k)
    for (int y = 0; y < 40; y += 3)
      for (int x = 0; x < 40; x += 3) CHECK(std::abs(h.at(x, y, k) - h.at(x, y, k + nt / 2)) <= 1e-9);
  for (int y = 5; y < 35; y += 5) {
    int best = 0;
    for (int k = 1; k < nt; ++k)
      if (h.at(20, y, k) > h.at(20, y, best)) best = k;
    const double th = best * h.grid.theta_step();
    CHECK(std::min(std::abs(angle_difference(th, 0)), std::abs(angle_difference(th, pi))) <= h.grid.theta_step() + 1e-12);
  }
}

TEST_CASE("quarter-turn of the image shifts the orientation axis") {
  const Image img = random_waves(5, 0.6).render(48);
  const Image rot = rotate90(img);
  const int nt = 36;
  const int shift = nt / 4;
  auto check = [&](const OrientedResponse& a, const OrientedResponse& b) {
    double num = 0, den = 0;
    for (int k = 0; k < nt; ++k)
      for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) {
          const double d = b.at(47 - y, x, (k + shift) % nt) - a.at(x, y, k);
          num += d * d;
          den += a.at(x, y, k) * a.at(x, y, k);
        }
    CHECK(std::sqrt(num / den) <= 0.05);
  };
  check(steerable_edge_response(img, 1.5, 5, nt), steerable_edge_response(rot, 1.5, 5, nt));
  check(oriented_flux(img, 1.0, {1, 2, 3}, nt).g, oriented_flux(rot, 1.0, {1, 2, 3}, nt).g);
}

TEST_CASE("color edge response averages channel magnitudes") {
  Image color = Image::color(20, 20);
  Image a = random_image(20, 20, 1), b = random_image(20, 20, 2), c = random_image(20, 20, 3);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) {
      color.at(x, y, 0) = a.at(x, y);
      color.at(x, y, 1) = b.at(x, y);
      color.at(x, y, 2) = c.at(x, y);
    }
  const OrientedResponse hc = steerable_edge_response(color, 1.0, 3, 8);
  const OrientedResponse ha = steerable_edge_response(a, 1.0, 3, 8);
  const OrientedResponse hb = steerable_edge_response(b, 1.0, 3, 8);
  const OrientedResponse hcc = steerable_edge_response(c, 1.0, 3, 8);
  for (std::size_t n = 0; n < hc.samples.size(); n += 7)
    CHECK(hc.samples[n] == doctest::Approx((ha.samples[n] + hb.samples[n] + hcc.samples[n]) / 3).epsilon(1e-12));
}

TEST_CASE("disk indicator covers the disk area") {
  for (double r : {1.0, 2.5, 4.0, 8.0}) {
    double area = 0;
    for (double v : disk_indicator(r)) area += v;
    CHECK(area == doctest::Approx(pi * r * r).epsilon(1e-3));
  }
  CHECK_THROWS_AS(disk_indicator(0.0), Error);
}

TEST_CASE("flux through circles matches the tensor quadratic form") {
  const double sigma = 1.0;
  const WaveImage waves = random_waves(7, 0.3);
  const int n = 80;
  const Image img = waves.render(n);
  const std::vector<double> radii{2, 4, 6};
  const FluxResult f = oriented_flux(img, sigma, radii, 8);
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> ang(0, 2 * pi);
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const double r = radii[ri];
    for (const auto [px, py] : {std::pair{40, 40}, std::pair{33, 47}, std::pair{45, 30}}) {
      const Eigen::Matrix2d& q = f.tensor(ri, px, py);
      for (int t = 0; t < 4; ++t) {
        const Eigen::Vector2d v = orientation_vector(ang(rng));
        double flux = 0;
        const int samples = 256;
        for (int s = 0; s < samples; ++s) {
          const Eigen::Vector2d nrm = orientation_vector(2 * pi * s / samples);
          const Eigen::Vector2d g = waves.gradient(px + r * nrm.x(), py + r * nrm.y(), sigma);
          flux += v.dot(g) * v.dot(nrm) * r * 2 * pi / samples;
        }
        const double form = v.dot(q * v);
        CHECK(std::abs(flux - form) <= 1e-2 * std::max(std::abs(form), q.norm()));
      }
    }
  }
}

TEST_CASE("dark tube: optimal scale, orientation and vesselness") {
  const int n = 64;
  const double r0 = 3.0;
  const std::vector<double> radii{1, 2, 3, 4, 5, 6, 7, 8};
  const int nt = 36;
  const double step = 2 * pi / nt;
  for (bool vertical : {false, true}) {
    const Image img = horizontal_bar(n, r0 - 0.5, vertical);  // pixel rows c +- 2.5 -> width 6
    const FluxResult f = oriented_flux(img, 1.0, radii, nt);
    const std::vector<double> theta = optimal_orientation(f.g);
    const double along = vertical ? pi / 2 : 0.0;
    for (int t = 16; t < 48; t += 4) {
      const int x = vertical ? 31 : t;
      const int y = vertical ? t : 31;
      const std::size_t p = static_cast<std::size_t>(y) * n + x;
      CHECK(std::abs(f.optimal_radius[p] - r0) <= 1.0);
      CHECK(f.vesselness[p] > 0.0);
      int best = 0;
      for (int k = 1; k < nt; ++k)
        if (f.g.at(x, y, k) > f.g.at(x, y, best)) best = k;
      const double across = best * step;
      CHECK(std::abs(std::sin(across - along)) >= std::cos(step) - 1e-12);
      CHECK(std::abs(std::sin(theta[p] - along)) <= std::sin(step) + 1e-12);
      CHECK(f.g.at(x, y, 0) == doctest::Approx(f.g.at(x, y, nt / 2)).epsilon(1e-9));
    }
  }
}

TEST_CASE("speed function normalisation and bounds") {
  OrientedResponse zero;
  zero.grid = {{4, 3, 1.0}, 8};
  zero.samples.assign(4 * 3 * 8, 0.0);
  for (double v : speed_function(zero, 5.0).phi) CHECK(v == 1.0);

  OrientedResponse r = zero;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 3);
  for (double& v : r.samples) v = u(rng);
  r.samples[r.grid.base.width * r.grid.base.height * 2 + 5] = 10.0;  // k = 2, pixel 5
  const SpeedField s = speed_function(r, 2.0, 2.0);
  for (double v : s.phi) {
    CHECK(v >= 1.0);
    CHECK(v <= 3.0);
  }
  // Orientation k sees resp at k + n/4: the maximum shows up at k = 0.
  CHECK(s.phi[5] == doctest::Approx(3.0));
  OrientedResponse half = zero;
  half.samples[0] = 1.0;
  half.samples[12 * 2 + 1] = 0.5;  // k = 2, pixel 1
  const SpeedField sh = speed_function(half, 2.0, 2.0);
  CHECK(sh.phi[1] == doctest::Approx(1.5));
  CHECK_THROWS_AS(speed_function(half, 0.0), Error);

  // Orientation counts not divisible by four interpolate the quarter turn.
  OrientedResponse odd;
  odd.grid = {{2, 2, 1.0}, 6};
  odd.samples.assign(2 * 2 * 6, 0.0);
  odd.samples[4 * 1] = 1.0;  // k = 1
  odd.samples[4 * 2] = 1.0;  // k = 2
  CHECK(speed_function(odd, 1.0, 1.0).phi[0] == doctest::Approx(2.0));
}

TEST_CASE("structure tensor of a duplicated gray image is rank one") {
  const Image g = random_waves(3, 0.4).render(32);
  Image c = Image::color(32, 32);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      for (int ch = 0; ch < 3; ++ch) c.at(x, y, ch) = g.at(x, y);
  const StructureTensor sg = color_structure_tensor(g, 1.0);
  const StructureTensor sc = color_structure_tensor(c, 1.0);
  for (std::size_t n = 0; n < sg.tensor.size(); n += 5) {
    CHECK((sc.tensor[n] - 3 * sg.tensor[n]).norm() <= 1e-12 * (1 + sc.tensor[n].norm()));
    CHECK(sc.phi1[n] <= 1e-12 * (1 + sc.phi2[n]));
    CHECK(sc.phi1[n] <= sc.phi2[n]);
    CHECK(std::abs(sc.g1[n].dot(sc.g2[n])) < 1e-12);
  }
  const StructureTensor flat = color_structure_tensor(Image::gray(8, 8, 0.3), 1.0);
  for (const auto& e : flat.tensor) CHECK(e.norm() < 1e-20);
  for (double v : ir_cost(flat.phi2, 2.0, 20.0, 2.0)) CHECK(v == doctest::Approx(0.5));
  for (const auto& t : ar_tensors(flat, 0.0)) CHECK(t.isApprox(Eigen::Matrix2d::Identity()));
  CHECK(ar_tau_for_ratio(flat) == 0.0);
}

TEST_CASE("baseline coefficients") {
  const std::vector<double> feat{0.0, 1.0, 2.0};
  const auto cost = ir_cost(feat, 1.0, 8.0, 2.0);
  CHECK(cost[0] == doctest::Approx(1.0));
  CHECK(cost[1] == doctest::Approx(1.0 / 3.0));
  CHECK(cost[2] == doctest::Approx(1.0 / 9.0));
  const StructureTensor st = color_structure_tensor(random_waves(2, 0.5).render(24), 1.0);
  const double tau = ar_tau_for_ratio(st, 20.0);
  CHECK(tau < 0.0);
  double worst = 1.0;
  for (const auto& t : ar_tensors(st, tau)) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(t);
    CHECK(es.eigenvalues()(0) > 0.0);
    worst = std::max(worst, es.eigenvalues()(1) / es.eigenvalues()(0));
  }
  CHECK(worst == doctest::Approx(20.0).epsilon(1e-9));
  CHECK_THROWS_AS(ar_tensors(st, 0.5), Error);
}

TEST_CASE("feature preconditions") {
  const Image img = Image::gray(8, 8);
  CHECK_THROWS_AS(steerable_edge_response(img, -1.0), Error);
  CHECK_THROWS_AS(steerable_edge_response(img, 1.0, 2), Error);
  CHECK_THROWS_AS(oriented_flux(img, 1.0, {}), Error);
  CHECK_THROWS_AS(oriented_flux(img, 1.0, {-1.0}), Error);
  Image bad = img;
  bad.data[3] = std::nan("");
  CHECK_THROWS_AS(bad.validate(), Error);
}
