#include "elastica/features.hpp"

#include "elastica/error.hpp"
#include "elastica/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace elastica {

namespace {

// Second-order kernels cut at 4 sigma lose about 1e-3 of their zero sum.
constexpr double kWideTruncation = 6.0;

struct Term {
  int p, q;
  double w;
};

std::vector<Term> template_terms(const SteerableWeights& w, int order) {
  std::vector<Term> t{{1, 0, w.a10}};
  if (order >= 3) {
    t.push_back({3, 0, w.a30});
    t.push_back({1, 2, w.a32});
  }
  if (order >= 5) {
    t.push_back({3, 2, w.a52});
    t.push_back({1, 4, w.a54});
  }
  return t;
}

std::vector<double> convolve_2d(const std::vector<double>& in, int width, int height, const std::vector<double>& kernel,
                                int radius) {
  const int side = 2 * radius + 1;
  std::vector<double> out(in.size(), 0.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double s = 0.0;
      for (int dy = -radius; dy <= radius; ++dy) {
        const std::size_t row = static_cast<std::size_t>(mirror_index(y - dy, height)) * width;
        for (int dx = -radius; dx <= radius; ++dx) {
          const double k = kernel[(dy + radius) * side + dx + radius];
          if (k != 0.0) s += k * in[row + mirror_index(x - dx, width)];
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = s;
    }
  }
  return out;
}

std::vector<double> channel_mean(const Image& img) {
  std::vector<double> out(img.pixels(), 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    for (int c = 0; c < img.channels; ++c) out[n] += img.data[n * img.channels + c];
    out[n] /= img.channels;
  }
  return out;
}

}  // namespace

const char* to_string(ResponseKind kind) {
  return kind == ResponseKind::EdgeH ? "edge_h" : "flux_g";
}

double OrientedResponse::max() const {
  double m = 0.0;
  for (double v : samples) m = std::max(m, v);
  return m;
}

SteerableWeights steerable_weights(int order, double sigma) {
  const double s2 = sigma * sigma;
  const double s4 = s2 * s2;
  switch (order) {
    case 1: return {1.0, 0.0, 0.0, 0.0, 0.0};
    case 3: return {0.966, 0.0, 0.256 * s2, 0.0, 0.0};
    case 5: return {1.1215, 0.018 * s2, 0.5576 * s2, 0.0038 * s4, 0.0415 * s4};
    default: fail(ErrorKind::InvalidArgument, "steerable filter order must be 1, 3 or 5");
  }
}

std::vector<double> steering_coefficients(int p, int q, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  // Homogeneous polynomial in (dx, dy): poly[a] multiplies dx^a dy^(deg-a).
  std::vector<double> poly{1.0};
  auto multiply = [&poly](double cx, double cy) {
    std::vector<double> next(poly.size() + 1, 0.0);
    for (std::size_t a = 0; a < poly.size(); ++a) {
      next[a + 1] += cx * poly[a];
      next[a] += cy * poly[a];
    }
    poly = std::move(next);
  };
  for (int i = 0; i < p; ++i) multiply(c, s);
  for (int i = 0; i < q; ++i) multiply(-s, c);
  return poly;
}

SteerableBank::SteerableBank(const Image& img, double sigma, int order)
    : width_(img.width), height_(img.height), channels_(img.channels), order_(order), sigma_(sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  img.validate();
  weights_ = steerable_weights(order, sigma);
  std::vector<std::vector<double>> kernels;
  for (int n = 0; n <= order; ++n) kernels.push_back(gaussian_derivative_kernel(sigma, n));
  basis_.resize(channels_);
  std::vector<std::pair<int, int>> jobs;  // (channel, derivative order)
  for (int c = 0; c < channels_; ++c) {
    for (int n = 1; n <= order; n += 2) {
      basis_[c][n].resize(n + 1);
      jobs.emplace_back(c, n);
    }
  }
  std::vector<std::vector<double>> planes;
  for (int c = 0; c < channels_; ++c) planes.push_back(img.plane(c));
  parallel_for(jobs.size(), [&](std::size_t j) {
    const auto [c, n] = jobs[j];
    for (int a = 0; a <= n; ++a) basis_[c][n][a] = convolve_separable(planes[c], width_, height_, kernels[a], kernels[n - a]);
  });
}

std::vector<double> SteerableBank::signed_response(int channel, double theta) const {
  std::vector<double> out(static_cast<std::size_t>(width_) * height_, 0.0);
  for (const Term& t : template_terms(weights_, order_)) {
    if (t.w == 0.0) continue;
    const std::vector<double> coef = steering_coefficients(t.p, t.q, theta);
    const int n = t.p + t.q;
    for (int a = 0; a <= n; ++a) {
      const double k = t.w * coef[a];
      const std::vector<double>& b = basis_[channel][n][a];
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += k * b[i];
    }
  }
  return out;
}

std::vector<double> SteerableBank::response(double theta) const {
  std::vector<double> out(static_cast<std::size_t>(width_) * height_, 0.0);
  for (int c = 0; c < channels_; ++c) {
    const std::vector<double> r = signed_response(c, theta);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::abs(r[i]) / channels_;
  }
  return out;
}

OrientedResponse steerable_edge_response(const Image& img, double sigma, int order, int n_theta) {
  require(n_theta >= 4, "n_theta must be at least 4");
  const SteerableBank bank(img, sigma, order);
  OrientedResponse out;
  out.grid = {img.grid(), n_theta};
  out.kind = ResponseKind::EdgeH;
  out.samples.resize(img.pixels() * n_theta);
  parallel_for(static_cast<std::size_t>(n_theta), [&](std::size_t k) {
    const std::vector<double> r = bank.response(out.grid.theta_step() * static_cast<double>(k));
    std::copy(r.begin(), r.end(), out.samples.begin() + static_cast<std::ptrdiff_t>(k * img.pixels()));
  });
  return out;
}

std::vector<double> disk_indicator(double r) {
  require(r > 0.0 && std::isfinite(r), "disk radius must be positive");
  const int R = static_cast<int>(std::ceil(r));
  const int side = 2 * R + 1;
  constexpr int kSub = 4096;
  std::vector<double> k(static_cast<std::size_t>(side) * side, 0.0);
  for (int dy = -R; dy <= R; ++dy) {
    for (int dx = -R; dx <= R; ++dx) {
      const double ax = std::abs(dx), ay = std::abs(dy);
      const double far = std::hypot(ax + 0.5, ay + 0.5);
      const double near = std::hypot(std::max(ax - 0.5, 0.0), std::max(ay - 0.5, 0.0));
      double cover;
      if (far <= r) {
        cover = 1.0;
      } else if (near >= r) {
        cover = 0.0;
      } else {
        // Midpoint rule over x of the covered vertical extent.
        double len = 0.0;
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = dx - 0.5 + (sx + 0.5) / kSub;
          if (std::abs(px) >= r) continue;
          const double half = std::sqrt(r * r - px * px);
          len += std::max(0.0, std::min(dy + 0.5, half) - std::max(dy - 0.5, -half));
        }
        cover = len / kSub;
      }
      k[(dy + R) * side + dx + R] = cover;
    }
  }
  return k;
}

FluxResult oriented_flux(const Image& img, double sigma, const std::vector<double>& radii, int n_theta) {
  require(!radii.empty(), "oriented flux needs at least one radius");
  for (double r : radii) require(r > 0.0 && std::isfinite(r), "flux radii must be positive");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  require(n_theta >= 4, "n_theta must be at least 4");
  img.validate();
  const int w = img.width;
  const int h = img.height;
  const std::size_t np = img.pixels();
  // The mean carries no curvature; removing it keeps kernel truncation from leaking it in.
  std::vector<double> base = channel_mean(img);
  double mean = 0.0;
  for (double v : base) mean += v / static_cast<double>(np);
  for (double& v : base) v -= mean;
  const auto g0 = gaussian_derivative_kernel(sigma, 0, kWideTruncation);
  const auto g1 = gaussian_derivative_kernel(sigma, 1, kWideTruncation);
  const auto g2 = gaussian_derivative_kernel(sigma, 2, kWideTruncation);
  const std::array<std::vector<double>, 3> hess{convolve_separable(base, w, h, g2, g0),
                                                convolve_separable(base, w, h, g1, g1),
                                                convolve_separable(base, w, h, g0, g2)};

  FluxResult out;
  out.grid = img.grid();
  out.radii = radii;
  out.tensors.resize(radii.size() * np);
  parallel_for(radii.size() * 3, [&](std::size_t job) {
    const std::size_t ri = job / 3;
    const int comp = static_cast<int>(job % 3);
    const std::vector<double> disk = disk_indicator(radii[ri]);
    const int R = static_cast<int>(std::ceil(radii[ri]));
    const std::vector<double> q = convolve_2d(hess[comp], w, h, disk, R);
    for (std::size_t n = 0; n < np; ++n) {
      Eigen::Matrix2d& t = out.tensors[ri * np + n];
      if (comp == 0) t(0, 0) = q[n];
      if (comp == 1) t(0, 1) = t(1, 0) = q[n];
      if (comp == 2) t(1, 1) = q[n];
    }
  });

  out.vesselness.assign(np, 0.0);
  out.optimal_radius.assign(np, radii.front());
  out.optimal_radius_index.assign(np, 0);
  for (std::size_t n = 0; n < np; ++n) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      const Eigen::Matrix2d& t = out.tensors[ri * np + n];
      const double tr = t.trace();
      const double det = t.determinant();
      const double l1 = 0.5 * tr + std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
      const double score = l1 / radii[ri];
      if (score > best) {
        best = score;
        out.optimal_radius[n] = radii[ri];
        out.optimal_radius_index[n] = static_cast<int>(ri);
      }
    }
    out.vesselness[n] = std::max(best, 0.0);
  }

  out.g.grid = {img.grid(), n_theta};
  out.g.kind = ResponseKind::FluxG;
  out.g.samples.resize(np * n_theta);
  for (int k = 0; k < n_theta; ++k) {
    const Eigen::Vector2d u = orientation_vector(out.g.grid.theta_step() * k);
    for (std::size_t n = 0; n < np; ++n) {
      const Eigen::Matrix2d& t = out.tensors[static_cast<std::size_t>(out.optimal_radius_index[n]) * np + n];
      out.g.samples[k * np + n] = std::max(u.dot(t * u), 0.0);
    }
  }
  return out;
}

SpeedField speed_function(const OrientedResponse& resp, double eta, double p) {
  require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
  require(p > 0.0 && std::isfinite(p), "p must be positive");
  const int nt = resp.grid.n_theta;
  const std::size_t np = static_cast<std::size_t>(resp.grid.base.width) * resp.grid.base.height;
  require(resp.samples.size() == np * nt, "response size does not match its grid");
  SpeedField s;
  s.grid = resp.grid;
  s.eta = eta;
  s.p = p;
  s.phi.assign(resp.samples.size(), 1.0);
  const double top = resp.max();
  if (!(top > 0.0)) return s;
  const double shift = nt / 4.0;  // pi/2 in orientation steps
  const int k0 = static_cast<int>(std::floor(shift));
  const double t = shift - k0;
  for (int k = 0; k < nt; ++k) {
    const std::size_t a = static_cast<std::size_t>((k + k0) % nt) * np;
    const std::size_t b = static_cast<std::size_t>((k + k0 + 1) % nt) * np;
    for (std::size_t n = 0; n < np; ++n) {
      const double r = t == 0.0 ? resp.samples[a + n] : (1 - t) * resp.samples[a + n] + t * resp.samples[b + n];
      s.phi[k * np + n] = 1.0 + eta * std::pow(std::clamp(r / top, 0.0, 1.0), p);
    }
  }
  return s;
}

std::vector<double> optimal_orientation(const OrientedResponse& resp) {
  const int nt = resp.grid.n_theta;
  const std::size_t np = static_cast<std::size_t>(resp.grid.base.width) * resp.grid.base.height;
  require(resp.samples.size() == np * nt, "response size does not match its grid");
  const int half = (nt + 1) / 2;  // layers with theta < pi
  std::vector<double> theta(np, 0.0);
  for (std::size_t n = 0; n < np; ++n) {
    int best = 0;
    for (int k = 1; k < half; ++k) {
      if (resp.samples[k * np + n] < resp.samples[best * np + n]) best = k;
    }
    theta[n] = best * resp.grid.theta_step();
  }
  return theta;
}

StructureTensor color_structure_tensor(const Image& img, double sigma) {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  img.validate();
  const std::size_t np = img.pixels();
  const auto g0 = gaussian_derivative_kernel(sigma, 0, kWideTruncation);
  const auto g1 = gaussian_derivative_kernel(sigma, 1, kWideTruncation);
  StructureTensor st;
  st.grid = img.grid();
  st.tensor.assign(np, Eigen::Matrix2d::Zero());
  for (int c = 0; c < img.channels; ++c) {
    const std::vector<double> plane = img.plane(c);
    const std::vector<double> gx = convolve_separable(plane, img.width, img.height, g1, g0);
    const std::vector<double> gy = convolve_separable(plane, img.width, img.height, g0, g1);
    for (std::size_t n = 0; n < np; ++n) {
      const Eigen::Vector2d g(gx[n], gy[n]);
      st.tensor[n] += g * g.transpose();
    }
  }
  st.phi1.resize(np);
  st.phi2.resize(np);
  st.g1.resize(np);
  st.g2.resize(np);
  for (std::size_t n = 0; n < np; ++n) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(st.tensor[n]);
    st.phi1[n] = std::max(es.eigenvalues()(0), 0.0);
    st.phi2[n] = std::max(es.eigenvalues()(1), 0.0);
    st.g1[n] = es.eigenvectors().col(0);
    st.g2[n] = es.eigenvectors().col(1);
  }
  return st;
}

std::vector<double> ir_cost(const std::vector<double>& feature, double beta1, double beta2, double p) {
  require(beta1 > 0.0 && beta2 > 0.0 && p > 0.0, "beta1, beta2 and p must be positive");
  double top = 0.0;
  for (double f : feature) top = std::max(top, f);
  std::vector<double> cost(feature.size());
  for (std::size_t n = 0; n < feature.size(); ++n) {
    const double f = top > 0.0 ? std::max(feature[n], 0.0) / top : 0.0;
    cost[n] = 1.0 / (beta1 + beta2 * std::pow(f, p));
  }
  return cost;
}

double ar_tau_for_ratio(const StructureTensor& st, double ratio) {
  require(ratio >= 1.0, "eigenvalue ratio must be at least 1");
  double spread = 0.0;
  for (std::size_t n = 0; n < st.phi1.size(); ++n) spread = std::max(spread, st.phi2[n] - st.phi1[n]);
  return spread > 0.0 ? -std::log(ratio) / spread : 0.0;
}

std::vector<Eigen::Matrix2d> ar_tensors(const StructureTensor& st, double tau) {
  require(tau <= 0.0, "tau must be nonpositive");
  std::vector<Eigen::Matrix2d> out(st.phi1.size());
  for (std::size_t n = 0; n < out.size(); ++n) {
    out[n] = std::exp(tau * st.phi2[n]) * st.g1[n] * st.g1[n].transpose() +
             std::exp(tau * st.phi1[n]) * st.g2[n] * st.g2[n].transpose();
  }
  return out;
}

}  // namespace elastica
