#pragma once

#include "elastica/eikonal.hpp"
#include "elastica/tracer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace elastica {

/// Physical seed with a tangent orientation. Both lifts (theta and theta + pi)
/// are candidate vertices.
struct OrientedSeed {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  LiftedPoint lift(bool reversed) const { return make_lifted_point(x, y, reversed ? theta + kTwoPi / 2 : theta); }
};

/// Validates seeds against the metric grid: inside the image, distinct nearest nodes.
void validate_seeds(const std::vector<OrientedSeed>& seeds, const MetricField& m);

/// One vertex of a contour: seed index and which lift was used.
struct ContourVertex {
  std::size_t seed = 0;
  bool reversed = false;
  LiftedPoint point;
};

struct ContourSegment {
  std::size_t from = 0;  ///< index into the vertex list
  std::size_t to = 0;
  LiftedPath path;
  double energy = 0.0;   ///< path energy under the metric
  double action = 0.0;   ///< solver value at the end vertex
};

struct ContourResult {
  std::vector<ContourVertex> vertices;  ///< greedy order q1, q2, ...
  std::vector<ContourSegment> segments;
  bool closed = false;
  std::size_t solves = 0;
};

struct ApplicationOptions {
  StencilPolicy policy;
  TraceOptions trace;
  /// Shared across all solves of a run; built on first use when empty.
  std::shared_ptr<const StencilSet> stencils;
};

/// Greedy closed contour through every seed, each visited once in one of its
/// two orientations. Ties go to the lower seed index, then to the unreversed lift.
ContourResult detect_closed_contour(const std::vector<OrientedSeed>& seeds, const MetricField& m,
                                    const ApplicationOptions& options = {});

struct GroupingResult {
  /// One entry per group; `segments` close the loop when `closed` is set.
  std::vector<ContourResult> groups;
  std::vector<std::size_t> unused;  ///< seeds not assigned to any group
};

/// Repeated greedy loops; a group ends when its first vertex is selected again.
/// Each new group starts from the lowest-index remaining seed.
GroupingResult perceptual_grouping(const std::vector<OrientedSeed>& seeds, const MetricField& m, std::size_t n_max,
                                   const ApplicationOptions& options = {});

struct TubularPath {
  std::size_t end = 0;
  bool ok = false;
  std::string error;
  LiftedPath path;
  LiftedPoint source_lift;  ///< source orientation the path leaves from
  LiftedPoint end_lift;     ///< first-reached lift of the end point
  double action = kInfinity;
  double energy = 0.0;
};

struct TubularResult {
  LiftedPoint source;  ///< (s, Theta(s)); the propagation also starts at its antipode
  std::vector<TubularPath> centerlines;
  std::size_t solves = 0;
};

/// Point with an optional manual orientation overriding the orientation map.
struct TubularPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> theta;
};

/// Centerlines from one source to several ends using a single propagation from
/// both source lifts, aborted once every end has one lift accepted.
/// `orientation` is a per-pixel map (row-major) such as optimal_orientation().
TubularResult extract_tubular(const TubularPoint& source, const std::vector<TubularPoint>& ends,
                              const std::vector<double>& orientation, const MetricField& m,
                              const ApplicationOptions& options = {});

}  // namespace elastica
