#pragma once

#include "elastica/eikonal.hpp"
#include "elastica/error.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace elastica {

/// Ordered lifted polyline, source first.
struct LiftedPath {
  std::vector<LiftedPoint> points;
  double step = 0.0;  ///< integration step in cells (0 for constructed paths)
};

struct PathEnergy {
  double value = 0.0;
  std::vector<double> segments;
};

struct TraceOptions {
  double step = 0.25;  ///< fraction of a cell per integration step
  std::size_t max_steps = 200000;
  int stall_window = 10;
  double stall_tolerance = 1e-9;  ///< relative to U(target)
  /// A step whose action drop is below this fraction of its metric cost is
  /// replaced by a discrete descent step. 0 disables the check.
  double consistency = 0.5;
  /// Reused for the discrete-descent fallback; built on demand otherwise.
  std::shared_ptr<const StencilSet> stencils;
};

/// Raised when tracing exceeds its step budget; keeps what was traced so far
/// (target first, not reversed).
class TraceError : public Error {
 public:
  TraceError(const std::string& what, LiftedPath partial)
      : Error(ErrorKind::MaxStepsExceeded, what), partial_(std::move(partial)) {}
  const LiftedPath& partial() const { return partial_; }

 private:
  LiftedPath partial_;
};

/// Gradient of the interpolated action map (physical units: per length, per radian).
/// Central differences at the surrounding nodes, one-sided next to the image
/// border or to unreached nodes, then trilinear blending.
Eigen::Vector3d action_gradient(const ActionMap& u, const LiftedPoint& p);

/// Back-tracks x' = -Psi(x, grad U) from `target` with Heun steps until a source
/// cell is reached, then reverses. `source_points` supplies the exact lifted
/// endpoint used for the matching source node; when empty the node itself is used.
LiftedPath trace_geodesic(const ActionMap& u, const MetricField& m, const LiftedPoint& target,
                          const std::vector<LiftedPoint>& source_points = {}, const TraceOptions& options = {});

using MetricEvaluator = std::function<double(const LiftedPoint&, const LiftedVector&)>;

/// Midpoint-rule length: each segment contributes F(midpoint, p_{i+1} - p_i)
/// with the orientation increment taken modulo 2pi.
PathEnergy path_energy(const LiftedPath& path, const MetricEvaluator& f);
PathEnergy path_energy(const LiftedPath& path, const MetricField& m);

/// Discrete length + alpha * integral of curvature^2: sum |du| + alpha dtheta^2 / |du|.
double elastica_energy(const LiftedPath& path, double alpha);

/// Orientation lifting of a planar polyline. Interior tangents are central
/// differences; end angles are extrapolated so that every chord of a circular
/// arc points along its midpoint orientation.
LiftedPath canonical_lifting(const std::vector<Eigen::Vector2d>& polyline);

/// Hausdorff distance between the spatial projections of two paths.
double spatial_hausdorff(const LiftedPath& a, const LiftedPath& b);

}  // namespace elastica
