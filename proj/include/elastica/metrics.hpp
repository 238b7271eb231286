#pragma once

#include "elastica/grid.hpp"

#include <Eigen/Core>

#include <limits>
#include <string>
#include <vector>

namespace elastica {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ElasticaParams {
  double lambda = 100.0;
  double alpha = 1.0;

  void validate() const;
};

/// F(v) = sqrt(<v, M v>) - <omega, v> on R^3. Planar metrics leave the third
/// row/column of M decoupled and omega_z = 0.
struct RandersForm {
  Eigen::Matrix3d M = Eigen::Matrix3d::Identity();
  Eigen::Vector3d omega = Eigen::Vector3d::Zero();

  double eval(const Eigen::Vector3d& v) const;
  /// <omega, M^-1 omega>; must stay below 1.
  double drift_norm_squared() const;
  double dual_norm(const Eigen::Vector3d& g) const;
  /// Maximiser of <g, v> / F(v), scaled so that F = 1. Throws DegenerateGradient on g = 0.
  Eigen::Vector3d optimal_direction(const Eigen::Vector3d& g) const;
  void validate() const;
};

double eval_elastica(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u);

/// Limit metric: ||u|| + alpha nu^2 / ||u|| on forward-collinear u, +inf otherwise.
double eval_elastica_limit(double alpha, const LiftedPoint& x, const LiftedVector& u);

RandersForm randers_decomposition(const ElasticaParams& p, double theta);

struct UnitBallCoefficients {
  double a = 1.0;
  double b = 1.0;
  double c = 1.0;
};
UnitBallCoefficients unit_ball_coefficients(double lambda);

bool unit_ball_membership(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u);

/// (lambda/2) u_perp^2 + a (u_par - b/2)^2 + alpha nu^2 - c/4; nonpositive exactly on the unit ball.
double quadratic_characterization(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u);

/// Limit ball residual (u_par - 1/2)^2 + alpha nu^2 - 1/4, +inf off the v_theta line.
double limit_ball_residual(double alpha, const LiftedPoint& x, const LiftedVector& u);

enum class MetricKind {
  IsotropicRiemannian,
  AnisotropicRiemannian,
  IsotropicOrientationLifted,
  FinslerElastica,
  DataDrivenFinslerElastica,
};

const char* to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& name);

/// Grid-sampled metric. Coefficients are looked up at the nearest node for
/// the solver and interpolated for the tracer.
class MetricField {
 public:
  /// F = cost(x) ||u|| on a planar grid.
  static MetricField isotropic(const GridSpec2& grid, std::vector<double> cost);
  static MetricField isotropic(const GridSpec2& grid, double cost);
  /// F = sqrt(u^T T(x) u) on a planar grid.
  static MetricField anisotropic(const GridSpec2& grid, std::vector<Eigen::Matrix2d> tensors);
  /// F = speed(x,theta)^-1 sqrt(||u||^2 + rho nu^2).
  static MetricField orientation_lifted(const GridSpec3& grid, std::vector<double> speed, double rho);
  static MetricField orientation_lifted(const GridSpec3& grid, double speed, double rho);
  static MetricField elastica(const GridSpec3& grid, const ElasticaParams& p);
  /// F = F^lambda / speed(x,theta).
  static MetricField data_driven(const GridSpec3& grid, const ElasticaParams& p, std::vector<double> speed);

  MetricKind kind() const { return kind_; }
  const Lattice& lattice() const { return lattice_; }
  const ElasticaParams& params() const { return params_; }
  double rho() const { return rho_; }
  bool is_symmetric() const { return omega_scale() == 0.0; }

  RandersForm form_at(std::size_t node) const;
  RandersForm form_at(const LiftedPoint& x) const;

  double eval(std::size_t node, const Eigen::Vector3d& v) const { return form_at(node).eval(v); }
  double eval(const LiftedPoint& x, const LiftedVector& u) const { return form_at(x).eval(u.as_vector()); }
  double dual_norm(const LiftedPoint& x, const LiftedVector& g) const { return form_at(x).dual_norm(g.as_vector()); }
  LiftedVector optimal_direction(const LiftedPoint& x, const LiftedVector& g) const {
    return LiftedVector::from(form_at(x).optimal_direction(g.as_vector()));
  }

  /// Stencil shape class of a node. Nodes in one class share their stencil
  /// up to boundary clipping.
  int stencil_class(std::size_t node) const;
  int stencil_class_count() const;
  /// A node belonging to the given class.
  std::size_t class_representative(int cls) const;
  bool per_node_classes() const { return kind_ == MetricKind::AnisotropicRiemannian; }

 private:
  double omega_scale() const;
  double scalar_at(std::size_t node) const;
  double scalar_interp(const LiftedPoint& x) const;
  RandersForm build(const Eigen::Vector2d& dir, double scalar, const Eigen::Matrix2d* tensor) const;
  void init_directions();

  MetricKind kind_ = MetricKind::IsotropicRiemannian;
  Lattice lattice_;
  ElasticaParams params_;
  double rho_ = 1.0;
  double constant_ = 1.0;
  std::vector<double> scalar_;  // cost (IR) or speed (lifted kinds); empty = constant_
  std::vector<Eigen::Matrix2d> tensors_;
  std::vector<Eigen::Vector2d> directions_;  // v_theta per orientation layer
};

/// Evaluates the metric at a point inside the grid; interpolation as in MetricField::form_at.
double eval_baseline(const MetricField& m, const LiftedPoint& x, const LiftedVector& u);

/// max F / min F over unit vectors at one form. Dense sampling plus the
/// principal and +-drift directions as candidates, polished locally.
double anisotropy_ratio(const RandersForm& f, bool physical_only);
/// Supremum of the per-node ratio over the field.
double anisotropy_ratio(const MetricField& m, bool physical_only);

}  // namespace elastica
