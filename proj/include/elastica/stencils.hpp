#pragma once

#include "elastica/grid.hpp"
#include "elastica/metrics.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace elastica {

enum class StencilMode {
  Cube,      ///< radius-1 neighbourhood: octahedron when lifted, 8-ring when planar
  Adaptive,  ///< radius grows with the local anisotropy
};

const char* to_string(StencilMode mode);
StencilMode stencil_mode_from_string(const std::string& name);

struct StencilPolicy {
  StencilMode mode = StencilMode::Adaptive;
  int radius_cap = 16;

  void validate() const;
};

struct StencilOffset {
  int di = 0;
  int dj = 0;
  int dk = 0;

  bool operator==(const StencilOffset&) const = default;
};

/// Facets are vertex triples. A repeated index marks a lower-dimensional
/// simplex (segment or point), which arises from planar stencils and clipping.
using Facet = std::array<int, 3>;

/// Unclipped stencil geometry shared by every node of a class.
struct StencilShape {
  std::vector<StencilOffset> offsets;
  std::vector<Facet> facets;
  std::vector<std::vector<int>> incident;  ///< facets touching each vertex
  std::vector<Eigen::Vector3d> displacements;  ///< physical offsets, filled by StencilSet

  int radius() const;
  void finalize();
};

/// Stencil of one node, with vertices clipped to the grid.
struct Stencil {
  LiftedIndex owner;
  std::vector<LiftedIndex> vertices;
  std::vector<Facet> boundary_facets;

  int radius() const;
};

/// Spatial radius of the adaptive stencil for a given physical anisotropy ratio.
int adaptive_radius(double physical_anisotropy, int radius_cap);

/// Counter-clockwise lattice polygon (primitive vectors) used as the spatial
/// cross-section of adaptive stencils. `f` supplies the local metric; the
/// polygon is refined where consecutive vertices are not acute or bracket the
/// cheapest direction, up to Chebyshev radius `radius`.
std::vector<Eigen::Vector2i> spatial_polygon(const RandersForm& f, int radius);

StencilShape build_shape(const RandersForm& f, bool lifted, const StencilPolicy& policy);

/// All stencil shapes of a metric field plus the reverse incidence needed by
/// fast marching. Immutable once built.
class StencilSet {
 public:
  StencilSet(const MetricField& m, const StencilPolicy& policy);

  const Lattice& lattice() const { return lattice_; }
  const StencilPolicy& policy() const { return policy_; }
  const StencilShape& shape(int cls) const { return shapes_[cls]; }
  const StencilShape& shape_of(std::size_t node) const { return shapes_[class_of(node)]; }
  int class_of(std::size_t node) const;
  int class_count() const { return static_cast<int>(shapes_.size()); }
  int max_radius() const;

  /// Node reached from `owner` through vertex slot `slot`, or -1 when clipped.
  long long vertex_node(std::size_t owner, const LiftedIndex& owner_idx, int slot) const {
    const StencilOffset& o = shape_of(owner).offsets[slot];
    const auto n = lattice_.offset(owner_idx, o.di, o.dj, o.dk);
    return n ? static_cast<long long>(*n) : -1;
  }

  Stencil materialize(std::size_t node) const;

  struct Dependent {
    std::size_t owner;
    int slot;  ///< vertex slot of the dependency in the owner's stencil
  };
  /// Owners y whose stencil contains x, with the slot at which x appears.
  void dependents(std::size_t x, std::vector<Dependent>& out) const;

  std::size_t memory_bytes() const;

 private:
  struct ReverseEntry {
    int di;
    int dj;
    int ky;
    int slot;
  };

  Lattice lattice_;
  StencilPolicy policy_;
  MetricKind kind_;
  std::vector<StencilShape> shapes_;
  // Class-indexed fields: candidates per orientation layer of x.
  std::vector<std::vector<ReverseEntry>> reverse_by_k_;
  // Per-node classes: explicit CSR.
  std::vector<std::size_t> reverse_start_;
  std::vector<Dependent> reverse_entries_;
};

Stencil build_stencil(const LiftedIndex& idx, const MetricField& m, const StencilPolicy& policy);

/// Map node -> owners whose stencil contains it.
std::vector<std::vector<std::size_t>> reverse_dependencies(const StencilSet& set);

}  // namespace elastica
