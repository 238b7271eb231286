#include "elastica/grid.hpp"

#include "elastica/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace elastica {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid_argument";
    case ErrorKind::OutOfDomain: return "out_of_domain";
    case ErrorKind::DegenerateGradient: return "degenerate_gradient";
    case ErrorKind::NotAccepted: return "not_accepted";
    case ErrorKind::MaxStepsExceeded: return "max_steps_exceeded";
    case ErrorKind::Unreachable: return "unreachable";
    case ErrorKind::NonConvergence: return "non_convergence";
    case ErrorKind::Io: return "io_error";
    case ErrorKind::DimensionMismatch: return "dimension_mismatch";
  }
  return "unknown";
}

void GridSpec2::validate() const {
  require(width >= 2 && height >= 2, "grid must be at least 2x2 pixels");
  require(spacing > 0.0 && std::isfinite(spacing), "grid spacing must be positive");
}

void GridSpec3::validate() const {
  base.validate();
  require(n_theta >= 4, "n_theta must be at least 4");
}

double wrap_angle(double theta) {
  double t = std::fmod(theta, kTwoPi);
  if (t < 0.0) t += kTwoPi;
  // fmod of a value just below 0 can round to exactly 2pi
  if (t >= kTwoPi) t = 0.0;
  return t;
}

double angle_difference(double a, double b) {
  double d = wrap_angle(a - b);
  if (d > std::numbers::pi) d -= kTwoPi;
  return d;
}

Eigen::Vector2d orientation_vector(double theta) { return {std::cos(theta), std::sin(theta)}; }

LiftedPoint make_lifted_point(double x, double y, double theta) { return {x, y, wrap_angle(theta)}; }

LiftedPoint antipode(const LiftedPoint& p) {
  // Reduce the input first so the map is an exact involution on stored points.
  const double t = wrap_angle(p.theta);
  const double flipped = t < std::numbers::pi ? t + std::numbers::pi : t - std::numbers::pi;
  return {p.x, p.y, wrap_angle(flipped)};
}

LiftedPoint index_to_point(const LiftedIndex& idx, const GridSpec3& spec) {
  spec.validate();
  const Lattice lattice = Lattice::lifted(spec);
  require(lattice.contains(idx), "lifted index outside grid");
  return lattice.point(idx);
}

LiftedIndex point_to_nearest_index(const LiftedPoint& p, const GridSpec3& spec) {
  return Lattice::lifted(spec).nearest(p);
}

Lattice Lattice::planar(const GridSpec2& spec) {
  spec.validate();
  Lattice l;
  l.nx_ = spec.width;
  l.ny_ = spec.height;
  l.nt_ = 1;
  l.spacing_ = spec.spacing;
  l.theta_step_ = 0.0;
  l.lifted_ = false;
  return l;
}

Lattice Lattice::lifted(const GridSpec3& spec) {
  spec.validate();
  Lattice l = planar(spec.base);
  l.nt_ = spec.n_theta;
  l.theta_step_ = spec.theta_step();
  l.lifted_ = true;
  return l;
}

LiftedIndex Lattice::nearest(const LiftedPoint& p) const {
  const long i = std::lround(p.x / spacing_);
  const long j = std::lround(p.y / spacing_);
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !contains(static_cast<int>(i), static_cast<int>(j))) {
    fail(ErrorKind::OutOfDomain, "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                     ") lies outside the image domain");
  }
  int k = 0;
  if (lifted_) k = wrap_k(static_cast<int>(std::lround(wrap_angle(p.theta) / theta_step_)));
  return {static_cast<int>(i), static_cast<int>(j), k};
}

double interpolate(const Lattice& lattice, const std::vector<double>& field, const LiftedPoint& p) {
  const double fx = std::clamp(p.x / lattice.spacing(), 0.0, static_cast<double>(lattice.nx() - 1));
  const double fy = std::clamp(p.y / lattice.spacing(), 0.0, static_cast<double>(lattice.ny() - 1));
  const int i0 = std::min(static_cast<int>(fx), lattice.nx() - 2);
  const int j0 = std::min(static_cast<int>(fy), lattice.ny() - 2);
  const double tx = fx - i0;
  const double ty = fy - j0;

  int k0 = 0;
  int k1 = 0;
  double tk = 0.0;
  if (lattice.is_lifted()) {
    const double fk = wrap_angle(p.theta) / lattice.theta_step();
    k0 = lattice.wrap_k(static_cast<int>(std::floor(fk)));
    k1 = lattice.wrap_k(k0 + 1);
    tk = fk - std::floor(fk);
  }

  auto layer = [&](int k) {
    const double v00 = field[lattice.linear({i0, j0, k})];
    const double v10 = field[lattice.linear({i0 + 1, j0, k})];
    const double v01 = field[lattice.linear({i0, j0 + 1, k})];
    const double v11 = field[lattice.linear({i0 + 1, j0 + 1, k})];
    return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
  };
  if (tk == 0.0) return layer(k0);
  return (1 - tk) * layer(k0) + tk * layer(k1);
}

}  // namespace elastica
