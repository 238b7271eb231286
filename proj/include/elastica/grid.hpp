#pragma once

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

namespace elastica {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Planar image grid. Node (i, j) sits at (i * spacing, j * spacing).
struct GridSpec2 {
  int width = 0;
  int height = 0;
  double spacing = 1.0;

  void validate() const;
};

/// Orientation-lifted grid over Omega x S^1. The orientation axis is periodic.
struct GridSpec3 {
  GridSpec2 base;
  int n_theta = 72;

  double theta_step() const { return kTwoPi / n_theta; }
  void validate() const;
};

/// Position-orientation pair. `theta` is kept in [0, 2pi) by the helpers below.
struct LiftedPoint {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  bool operator==(const LiftedPoint&) const = default;
};

/// Tangent vector (u, nu) at a lifted point: spatial velocity and orientation rate.
struct LiftedVector {
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  double nu = 0.0;

  Eigen::Vector3d as_vector() const { return {u.x(), u.y(), nu}; }
  static LiftedVector from(const Eigen::Vector3d& v) { return {{v.x(), v.y()}, v.z()}; }
};

struct LiftedIndex {
  int i = 0;
  int j = 0;
  int k = 0;

  auto operator<=>(const LiftedIndex&) const = default;
};

/// Reduces an angle to [0, 2pi).
double wrap_angle(double theta);

/// Signed difference a - b reduced to (-pi, pi].
double angle_difference(double a, double b);

/// Unit vector (cos theta, sin theta).
Eigen::Vector2d orientation_vector(double theta);

/// Same position, opposite orientation.
LiftedPoint antipode(const LiftedPoint& p);

LiftedPoint make_lifted_point(double x, double y, double theta);

class Lattice;

/// Trilinear interpolation of a node-sampled field: clamped in space,
/// periodic in theta. Planar lattices interpolate bilinearly.
double interpolate(const Lattice& lattice, const std::vector<double>& field, const LiftedPoint& p);

LiftedPoint index_to_point(const LiftedIndex& idx, const GridSpec3& spec);
LiftedIndex point_to_nearest_index(const LiftedPoint& p, const GridSpec3& spec);

/// Flattened discretization used by the solvers. A planar lattice has a single
/// orientation layer and no theta neighbours; a lifted one wraps in k.
class Lattice {
 public:
  static Lattice planar(const GridSpec2& spec);
  static Lattice lifted(const GridSpec3& spec);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nt() const { return nt_; }
  double spacing() const { return spacing_; }
  double theta_step() const { return theta_step_; }
  bool is_lifted() const { return lifted_; }
  std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_ * nt_; }

  GridSpec2 spec2() const { return {nx_, ny_, spacing_}; }
  GridSpec3 spec3() const { return {spec2(), nt_}; }

  std::size_t linear(const LiftedIndex& idx) const {
    return (static_cast<std::size_t>(idx.k) * ny_ + idx.j) * nx_ + idx.i;
  }
  LiftedIndex unravel(std::size_t n) const {
    const int i = static_cast<int>(n % nx_);
    const std::size_t rest = n / nx_;
    return {i, static_cast<int>(rest % ny_), static_cast<int>(rest / ny_)};
  }

  bool contains(int i, int j) const { return i >= 0 && j >= 0 && i < nx_ && j < ny_; }
  bool contains(const LiftedIndex& idx) const { return contains(idx.i, idx.j) && idx.k >= 0 && idx.k < nt_; }

  int wrap_k(int k) const {
    const int r = k % nt_;
    return r < 0 ? r + nt_ : r;
  }

  /// Node at idx + (di, dj, dk), or nothing when it leaves the image.
  std::optional<std::size_t> offset(const LiftedIndex& idx, int di, int dj, int dk) const {
    const int i = idx.i + di;
    const int j = idx.j + dj;
    if (!contains(i, j)) return std::nullopt;
    return linear({i, j, wrap_k(idx.k + dk)});
  }

  double theta_of(int k) const { return lifted_ ? k * theta_step_ : 0.0; }

  LiftedPoint point(const LiftedIndex& idx) const {
    return {idx.i * spacing_, idx.j * spacing_, theta_of(idx.k)};
  }
  LiftedPoint point(std::size_t n) const { return point(unravel(n)); }

  /// Nearest node; throws OutOfDomain when the position is more than half a
  /// cell outside the image.
  LiftedIndex nearest(const LiftedPoint& p) const;

  /// Physical displacement for an integer offset.
  Eigen::Vector3d displacement(int di, int dj, int dk) const {
    return {di * spacing_, dj * spacing_, dk * theta_step_};
  }

 private:
  int nx_ = 0;
  int ny_ = 0;
  int nt_ = 1;
  double spacing_ = 1.0;
  double theta_step_ = 0.0;
  bool lifted_ = false;
};

}  // namespace elastica
