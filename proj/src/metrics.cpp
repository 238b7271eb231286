#include "elastica/metrics.hpp"

#include "elastica/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace elastica {

void ElasticaParams::validate() const {
  require(std::isfinite(lambda) && lambda >= 1.0, "lambda must be >= 1");
  require(std::isfinite(alpha) && alpha > 0.0, "alpha must be > 0");
}

// ---------------------------------------------------------------------------
// Randers forms

double RandersForm::eval(const Eigen::Vector3d& v) const {
  const double q = v.dot(M * v);
  return std::sqrt(std::max(q, 0.0)) - omega.dot(v);
}

double RandersForm::drift_norm_squared() const { return omega.dot(M.ldlt().solve(omega)); }

void RandersForm::validate() const {
  require(M.isApprox(M.transpose(), 1e-12), "Randers tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
  require(es.eigenvalues().minCoeff() > 0.0, "Randers tensor must be positive definite");
  require(drift_norm_squared() < 1.0, "Randers drift violates <omega, M^-1 omega> < 1");
}

namespace {

// Dual of sqrt(v^T M v) - <omega, v>: with Q = M - omega omega^T,
// F*(g) = <g, Q^-1 omega> + sqrt(1 + omega^T Q^-1 omega) sqrt(g^T Q^-1 g).
struct DualData {
  Eigen::Matrix3d q_inv;
  Eigen::Vector3d c;
  double r;
};

DualData dual_data(const RandersForm& f) {
  const Eigen::Matrix3d q = f.M - f.omega * f.omega.transpose();
  DualData d;
  d.q_inv = q.inverse();
  d.c = d.q_inv * f.omega;
  d.r = std::sqrt(1.0 + f.omega.dot(d.c));
  return d;
}

}  // namespace

double RandersForm::dual_norm(const Eigen::Vector3d& g) const {
  if (g.squaredNorm() == 0.0) return 0.0;
  const DualData d = dual_data(*this);
  return g.dot(d.c) + d.r * std::sqrt(std::max(g.dot(d.q_inv * g), 0.0));
}

Eigen::Vector3d RandersForm::optimal_direction(const Eigen::Vector3d& g) const {
  if (!(g.squaredNorm() > 0.0) || !g.allFinite()) fail(ErrorKind::DegenerateGradient, "optimal direction of a zero gradient");
  const DualData d = dual_data(*this);
  const Eigen::Vector3d qg = d.q_inv * g;
  const double n = std::sqrt(std::max(g.dot(qg), 0.0));
  if (!(n > 0.0)) fail(ErrorKind::DegenerateGradient, "optimal direction of a zero gradient");
  return d.c + (d.r / n) * qg;
}

// ---------------------------------------------------------------------------
// Elastica family

double eval_elastica(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u) {
  const double l = p.lambda;
  const Eigen::Vector2d v = orientation_vector(x.theta);
  const double par = v.dot(u.u);
  const double q = 2.0 * p.alpha * u.nu * u.nu / l;
  const double r = std::sqrt(u.u.squaredNorm() + q);
  if (par <= 0.0) return l * r - (l - 1.0) * par;
  // l r - (l-1) par = r + (l-1)(r^2 - par^2)/(r + par), with r^2 - par^2 = perp^2 + q.
  // Avoids the cancellation of the direct form on forward vectors.
  const double perp = v.x() * u.u.y() - v.y() * u.u.x();
  return r + (l - 1.0) * (perp * perp + q) / (r + par);
}

double eval_elastica_limit(double alpha, const LiftedPoint& x, const LiftedVector& u) {
  const Eigen::Vector2d v = orientation_vector(x.theta);
  const double n = u.u.norm();
  if (n == 0.0) return u.nu == 0.0 ? 0.0 : kInfinity;
  const double cross = v.x() * u.u.y() - v.y() * u.u.x();
  if (std::abs(cross) > 1e-9 * n || v.dot(u.u) <= 0.0) return kInfinity;
  return n + alpha * u.nu * u.nu / n;
}

RandersForm randers_decomposition(const ElasticaParams& p, double theta) {
  p.validate();
  const double l = p.lambda;
  RandersForm f;
  f.M = Eigen::Vector3d(l * l, l * l, 2.0 * p.alpha * l).asDiagonal();
  const Eigen::Vector2d v = orientation_vector(theta);
  f.omega = Eigen::Vector3d((l - 1.0) * v.x(), (l - 1.0) * v.y(), 0.0);
  return f;
}

UnitBallCoefficients unit_ball_coefficients(double lambda) {
  const double l = lambda;
  return {(2.0 * l - 1.0) / (2.0 * l), 2.0 * (l - 1.0) / (2.0 * l - 1.0), 2.0 * l / (2.0 * l - 1.0)};
}

bool unit_ball_membership(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u) {
  return eval_elastica(p, x, u) <= 1.0;
}

double quadratic_characterization(const ElasticaParams& p, const LiftedPoint& x, const LiftedVector& u) {
  const Eigen::Vector2d v = orientation_vector(x.theta);
  const double par = v.dot(u.u);
  const double perp = v.x() * u.u.y() - v.y() * u.u.x();
  const UnitBallCoefficients k = unit_ball_coefficients(p.lambda);
  const double s = par - 0.5 * k.b;
  return 0.5 * p.lambda * perp * perp + k.a * s * s + p.alpha * u.nu * u.nu - 0.25 * k.c;
}

double limit_ball_residual(double alpha, const LiftedPoint& x, const LiftedVector& u) {
  const Eigen::Vector2d v = orientation_vector(x.theta);
  const double perp = v.x() * u.u.y() - v.y() * u.u.x();
  if (std::abs(perp) > 1e-12) return kInfinity;
  const double s = v.dot(u.u) - 0.5;
  return s * s + alpha * u.nu * u.nu - 0.25;
}

// ---------------------------------------------------------------------------
// Metric fields

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::IsotropicRiemannian: return "ir";
    case MetricKind::AnisotropicRiemannian: return "ar";
    case MetricKind::IsotropicOrientationLifted: return "iolr";
    case MetricKind::FinslerElastica: return "elastica";
    case MetricKind::DataDrivenFinslerElastica: return "data_driven";
  }
  return "unknown";
}

MetricKind metric_kind_from_string(const std::string& name) {
  if (name == "ir") return MetricKind::IsotropicRiemannian;
  if (name == "ar") return MetricKind::AnisotropicRiemannian;
  if (name == "iolr") return MetricKind::IsotropicOrientationLifted;
  if (name == "elastica") return MetricKind::FinslerElastica;
  if (name == "data_driven") return MetricKind::DataDrivenFinslerElastica;
  fail(ErrorKind::InvalidArgument, "unknown metric kind '" + name + "'");
}

namespace {

void check_positive(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorKind::InvalidArgument, std::string(what) + " must be finite and > 0");
  }
}

void check_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    fail(ErrorKind::DimensionMismatch, std::string(what) + " has " + std::to_string(got) + " samples, expected " +
                                           std::to_string(want));
  }
}

}  // namespace

MetricField MetricField::isotropic(const GridSpec2& grid, std::vector<double> cost) {
  MetricField m;
  m.kind_ = MetricKind::IsotropicRiemannian;
  m.lattice_ = Lattice::planar(grid);
  check_size(cost.size(), m.lattice_.size(), "cost field");
  check_positive(cost, "cost");
  m.scalar_ = std::move(cost);
  return m;
}

MetricField MetricField::isotropic(const GridSpec2& grid, double cost) {
  require(cost > 0.0 && std::isfinite(cost), "cost must be finite and > 0");
  MetricField m;
  m.kind_ = MetricKind::IsotropicRiemannian;
  m.lattice_ = Lattice::planar(grid);
  m.constant_ = cost;
  return m;
}

MetricField MetricField::anisotropic(const GridSpec2& grid, std::vector<Eigen::Matrix2d> tensors) {
  MetricField m;
  m.kind_ = MetricKind::AnisotropicRiemannian;
  m.lattice_ = Lattice::planar(grid);
  check_size(tensors.size(), m.lattice_.size(), "tensor field");
  for (const auto& t : tensors) {
    const bool spd = t.allFinite() && std::abs(t(0, 1) - t(1, 0)) <= 1e-12 * (1.0 + t.norm()) && t(0, 0) > 0.0 &&
                     t.determinant() > 0.0;
    require(spd, "tensor field must be symmetric positive definite");
  }
  m.tensors_ = std::move(tensors);
  return m;
}

MetricField MetricField::orientation_lifted(const GridSpec3& grid, std::vector<double> speed, double rho) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be > 0");
  MetricField m;
  m.kind_ = MetricKind::IsotropicOrientationLifted;
  m.lattice_ = Lattice::lifted(grid);
  check_size(speed.size(), m.lattice_.size(), "speed field");
  check_positive(speed, "speed");
  m.scalar_ = std::move(speed);
  m.rho_ = rho;
  return m;
}

MetricField MetricField::orientation_lifted(const GridSpec3& grid, double speed, double rho) {
  require(rho > 0.0 && std::isfinite(rho), "rho must be > 0");
  require(speed > 0.0 && std::isfinite(speed), "speed must be > 0");
  MetricField m;
  m.kind_ = MetricKind::IsotropicOrientationLifted;
  m.lattice_ = Lattice::lifted(grid);
  m.constant_ = speed;
  m.rho_ = rho;
  return m;
}

MetricField MetricField::elastica(const GridSpec3& grid, const ElasticaParams& p) {
  p.validate();
  MetricField m;
  m.kind_ = MetricKind::FinslerElastica;
  m.lattice_ = Lattice::lifted(grid);
  m.params_ = p;
  m.init_directions();
  return m;
}

MetricField MetricField::data_driven(const GridSpec3& grid, const ElasticaParams& p, std::vector<double> speed) {
  p.validate();
  MetricField m;
  m.kind_ = MetricKind::DataDrivenFinslerElastica;
  m.lattice_ = Lattice::lifted(grid);
  check_size(speed.size(), m.lattice_.size(), "speed field");
  check_positive(speed, "speed");
  m.params_ = p;
  m.scalar_ = std::move(speed);
  m.init_directions();
  return m;
}

void MetricField::init_directions() {
  directions_.clear();
  for (int k = 0; k < lattice_.nt(); ++k) directions_.push_back(orientation_vector(lattice_.theta_of(k)));
}

double MetricField::omega_scale() const {
  const bool finsler = kind_ == MetricKind::FinslerElastica || kind_ == MetricKind::DataDrivenFinslerElastica;
  return finsler ? params_.lambda - 1.0 : 0.0;
}

double MetricField::scalar_at(std::size_t node) const { return scalar_.empty() ? constant_ : scalar_[node]; }

double MetricField::scalar_interp(const LiftedPoint& x) const {
  return scalar_.empty() ? constant_ : interpolate(lattice_, scalar_, x);
}

RandersForm MetricField::build(const Eigen::Vector2d& dir, double s, const Eigen::Matrix2d* tensor) const {
  RandersForm f;
  switch (kind_) {
    case MetricKind::IsotropicRiemannian:
      f.M = Eigen::Vector3d(s * s, s * s, 1.0).asDiagonal();
      break;
    case MetricKind::AnisotropicRiemannian:
      f.M.setIdentity();
      f.M.topLeftCorner<2, 2>() = *tensor;
      break;
    case MetricKind::IsotropicOrientationLifted:
      f.M = Eigen::Vector3d(1.0, 1.0, rho_).asDiagonal();
      f.M /= s * s;
      break;
    case MetricKind::FinslerElastica:
    case MetricKind::DataDrivenFinslerElastica: {
      const double l = params_.lambda;
      const double inv = 1.0 / s;
      f.M = Eigen::Vector3d(l * l, l * l, 2.0 * params_.alpha * l).asDiagonal();
      f.M *= inv * inv;
      f.omega = Eigen::Vector3d(dir.x(), dir.y(), 0.0) * ((l - 1.0) * inv);
      break;
    }
  }
  return f;
}

RandersForm MetricField::form_at(std::size_t node) const {
  if (kind_ == MetricKind::AnisotropicRiemannian) return build({1.0, 0.0}, 1.0, &tensors_[node]);
  if (directions_.empty()) return build({1.0, 0.0}, scalar_at(node), nullptr);
  const int k = static_cast<int>(node / (static_cast<std::size_t>(lattice_.nx()) * lattice_.ny()));
  return build(directions_[k], scalar_at(node), nullptr);
}

RandersForm MetricField::form_at(const LiftedPoint& x) const {
  if (kind_ == MetricKind::AnisotropicRiemannian) {
    const double fx = std::clamp(x.x / lattice_.spacing(), 0.0, static_cast<double>(lattice_.nx() - 1));
    const double fy = std::clamp(x.y / lattice_.spacing(), 0.0, static_cast<double>(lattice_.ny() - 1));
    const int i0 = std::min(static_cast<int>(fx), lattice_.nx() - 2);
    const int j0 = std::min(static_cast<int>(fy), lattice_.ny() - 2);
    const double tx = fx - i0;
    const double ty = fy - j0;
    auto at = [&](int i, int j) -> const Eigen::Matrix2d& { return tensors_[lattice_.linear({i, j, 0})]; };
    const Eigen::Matrix2d t = (1 - ty) * ((1 - tx) * at(i0, j0) + tx * at(i0 + 1, j0)) +
                              ty * ((1 - tx) * at(i0, j0 + 1) + tx * at(i0 + 1, j0 + 1));
    return build({1.0, 0.0}, 1.0, &t);
  }
  return build(orientation_vector(lattice_.is_lifted() ? x.theta : 0.0), scalar_interp(x), nullptr);
}

int MetricField::stencil_class(std::size_t node) const {
  switch (kind_) {
    case MetricKind::AnisotropicRiemannian: return static_cast<int>(node);
    case MetricKind::FinslerElastica:
    case MetricKind::DataDrivenFinslerElastica: return lattice_.unravel(node).k;
    default: return 0;
  }
}

int MetricField::stencil_class_count() const {
  switch (kind_) {
    case MetricKind::AnisotropicRiemannian: return static_cast<int>(lattice_.size());
    case MetricKind::FinslerElastica:
    case MetricKind::DataDrivenFinslerElastica: return lattice_.nt();
    default: return 1;
  }
}

std::size_t MetricField::class_representative(int cls) const {
  switch (kind_) {
    case MetricKind::AnisotropicRiemannian: return static_cast<std::size_t>(cls);
    case MetricKind::FinslerElastica:
    case MetricKind::DataDrivenFinslerElastica: return lattice_.linear({0, 0, cls});
    default: return 0;
  }
}

double eval_baseline(const MetricField& m, const LiftedPoint& x, const LiftedVector& u) { return m.eval(x, u); }

// ---------------------------------------------------------------------------
// Anisotropy ratio

namespace {

using Objective = std::function<double(const Eigen::Vector3d&)>;

// Local pattern search on the unit sphere (or circle when planar).
Eigen::Vector3d polish(const Objective& f, Eigen::Vector3d v, bool planar) {
  double best = f(v);
  for (double step = 0.02; step > 1e-10; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      Eigen::Vector3d a = v.unitOrthogonal();
      Eigen::Vector3d b = v.cross(a);
      if (planar) {
        a = Eigen::Vector3d(-v.y(), v.x(), 0.0);
        b.setZero();
      }
      for (const Eigen::Vector3d& d : {a, Eigen::Vector3d(-a), b, Eigen::Vector3d(-b)}) {
        if (d.squaredNorm() == 0.0) continue;
        const Eigen::Vector3d w = (v + step * d).normalized();
        const double fw = f(w);
        if (fw > best) {
          best = fw;
          v = w;
          improved = true;
        }
      }
    }
  }
  return v;
}

}  // namespace

double anisotropy_ratio(const RandersForm& f, bool physical_only) {
  std::vector<Eigen::Vector3d> samples;
  if (physical_only) {
    const int n = 3600;
    for (int i = 0; i < n; ++i) {
      const double t = kTwoPi * i / n;
      samples.emplace_back(std::cos(t), std::sin(t), 0.0);
    }
  } else {
    // Fibonacci sphere
    const int n = 20000;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
      const double z = 1.0 - 2.0 * (i + 0.5) / n;
      const double r = std::sqrt(1.0 - z * z);
      samples.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
    }
  }
  auto candidate = [&](Eigen::Vector3d v) {
    if (physical_only) v.z() = 0.0;
    if (v.norm() > 1e-300) {
      samples.push_back(v.normalized());
      samples.push_back(-v.normalized());
    }
  };
  candidate(f.omega);
  if (physical_only) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(f.M.topLeftCorner<2, 2>());
    for (int c = 0; c < 2; ++c) candidate({es.eigenvectors()(0, c), es.eigenvectors()(1, c), 0.0});
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(f.M);
    for (int c = 0; c < 3; ++c) candidate(es.eigenvectors().col(c));
  }

  const Objective fmax = [&](const Eigen::Vector3d& v) { return f.eval(v); };
  const Objective fmin = [&](const Eigen::Vector3d& v) { return -f.eval(v); };
  std::size_t imax = 0;
  std::size_t imin = 0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (f.eval(samples[i]) > f.eval(samples[imax])) imax = i;
    if (f.eval(samples[i]) < f.eval(samples[imin])) imin = i;
  }
  const double hi = f.eval(polish(fmax, samples[imax], physical_only));
  const double lo = f.eval(polish(fmin, samples[imin], physical_only));
  return hi / lo;
}

double anisotropy_ratio(const MetricField& m, bool physical_only) {
  if (m.kind() == MetricKind::AnisotropicRiemannian) {
    double best = 1.0;
    for (std::size_t n = 0; n < m.lattice().size(); ++n) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m.form_at(n).M.topLeftCorner<2, 2>());
      best = std::max(best, std::sqrt(es.eigenvalues()(1) / es.eigenvalues()(0)));
    }
    return best;
  }
  const bool planar = !m.lattice().is_lifted();
  // Within a class the per-node ratio is invariant under the scalar speed
  // factor, so one representative per class suffices.
  double best = 1.0;
  for (int c = 0; c < m.stencil_class_count(); ++c) {
    best = std::max(best, anisotropy_ratio(m.form_at(m.class_representative(c)), physical_only || planar));
  }
  return best;
}

}  // namespace elastica
