#pragma once

#include "elastica/grid.hpp"
#include "elastica/metrics.hpp"
#include "elastica/stencils.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace elastica {

enum class NodeTag : std::uint8_t { Far = 0, Trial = 1, Accepted = 2 };

/// Grid-sampled geodesic distance from a source set.
struct ActionMap {
  Lattice lattice;
  std::vector<double> values;
  std::vector<NodeTag> tags;
  std::vector<LiftedIndex> sources;

  double value(const LiftedIndex& idx) const { return values[lattice.linear(idx)]; }
  NodeTag tag(const LiftedIndex& idx) const { return tags[lattice.linear(idx)]; }
  bool accepted(std::size_t n) const { return tags[n] == NodeTag::Accepted; }
};

struct SolveStats {
  std::size_t accepted_count = 0;
  std::size_t hopf_lax_update_count = 0;
  double mean_updates_per_node = 0.0;
  double wall_time = 0.0;  ///< seconds
  std::size_t stencil_bytes = 0;
  std::size_t sweeps = 0;  ///< iterative solver only
  double order_violation = 0.0;  ///< largest drop of an accepted value below its predecessor
};

/// Minimum of F(x, x - y) + interpolated U(y) over one simplex of stencil
/// vertices. `offsets` are physical displacements y_i - x.
struct SimplexMinimum {
  double value = kInfinity;
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();  ///< minimising y - x
};
SimplexMinimum minimize_on_simplex(const RandersForm& f, const Eigen::Vector3d* offsets, const double* values, int n);

/// Full Hopf-Lax operator over every facet of S(x), using the finite-valued
/// part of each facet. Returns +inf when no vertex is finite.
double hopf_lax_update(const LiftedIndex& x, const ActionMap& u, const Stencil& s, const MetricField& m);

/// Same, over a prebuilt stencil set; also reports the minimising point.
/// Facets whose smallest vertex value is at least `upper` are skipped, so the
/// result is only exact when it lies below `upper`.
SimplexMinimum hopf_lax_argmin(const StencilSet& stencils, const MetricField& m, std::size_t x,
                               const std::vector<double>& values, double upper = kInfinity);

enum class StopMode {
  AllAccepted,      ///< every stop node accepted
  AnyPerGroup,      ///< at least one node of each group accepted
  FirstAny,         ///< the first stop reached (ties resolved by group order)
};

struct StopCriteria {
  std::vector<std::vector<LiftedPoint>> groups;
  StopMode mode = StopMode::AllAccepted;

  bool empty() const { return groups.empty(); }
  static StopCriteria all(const std::vector<LiftedPoint>& stops);
};

struct FastMarchOptions {
  StencilPolicy policy;
  StopCriteria stops;
  std::shared_ptr<const StencilSet> stencils;  ///< reused when given
  bool record_order = false;
};

struct SolveResult {
  ActionMap map;
  SolveStats stats;
  std::vector<std::size_t> acceptance_order;  ///< when requested
  /// For StopMode::FirstAny: group index of the winning stop, if any was reached.
  std::optional<std::size_t> first_stop_group;
};

SolveResult fast_march(const MetricField& m, const std::vector<LiftedPoint>& sources, const FastMarchOptions& options = {});

struct AgsiOptions {
  StencilPolicy policy;
  double tolerance = 1e-12;
  std::size_t max_sweeps = 100000;
  std::shared_ptr<const StencilSet> stencils;
  /// Optional starting values (e.g. a supersolution); sources are reset to 0.
  const std::vector<double>* initial = nullptr;
};

/// Adaptive Gauss-Seidel iteration of the Hopf-Lax operator to its fixed point.
/// Throws NonConvergence when `max_sweeps` passes leave active nodes.
SolveResult agsi_solve(const MetricField& m, const std::vector<LiftedPoint>& sources, const AgsiOptions& options = {});

struct TrendRow {
  double lambda = 1.0;
  SolveStats stats;
};

/// Runs fast marching from a single central source for each lambda.
std::vector<TrendRow> update_count_trend(const std::vector<double>& lambdas, const GridSpec3& grid, double alpha,
                                         const StencilPolicy& policy = {});

/// True when the mean update counts are nondecreasing and mean(last)/mean(first
/// above 1) stays below `max_ratio`.
bool trend_is_sublinear(const std::vector<TrendRow>& rows, double max_ratio = 3.0);

}  // namespace elastica
