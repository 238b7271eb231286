#include "elastica/stencils.hpp"

#include "elastica/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace elastica {

const char* to_string(StencilMode mode) { return mode == StencilMode::Cube ? "cube" : "adaptive"; }

StencilMode stencil_mode_from_string(const std::string& name) {
  if (name == "cube" || name == "cube6face") return StencilMode::Cube;
  if (name == "adaptive" || name == "anisotropy_adaptive") return StencilMode::Adaptive;
  fail(ErrorKind::InvalidArgument, "unknown stencil mode '" + name + "'");
}

void StencilPolicy::validate() const { require(radius_cap >= 1, "stencil radius_cap must be >= 1"); }

int StencilShape::radius() const {
  int r = 0;
  for (const auto& o : offsets) r = std::max({r, std::abs(o.di), std::abs(o.dj)});
  return r;
}

void StencilShape::finalize() {
  incident.assign(offsets.size(), {});
  for (int f = 0; f < static_cast<int>(facets.size()); ++f) {
    const Facet& t = facets[f];
    for (int a = 0; a < 3; ++a) {
      bool seen = false;
      for (int b = 0; b < a; ++b) seen = seen || t[b] == t[a];
      if (!seen) incident[t[a]].push_back(f);
    }
  }
}

int Stencil::radius() const {
  int r = 0;
  for (const auto& v : vertices) r = std::max({r, std::abs(v.i - owner.i), std::abs(v.j - owner.j)});
  return r;
}

int adaptive_radius(double physical_anisotropy, int radius_cap) {
  const double r = std::sqrt((physical_anisotropy + 1.0) / 4.0);
  return std::max(1, static_cast<int>(std::ceil(std::min<double>(radius_cap, r) - 1e-9)));
}

namespace {

// Spatial part of the Hopf-Lax cost for a vertex at offset e: G(e) = F(-e).
struct SpatialCost {
  Eigen::Matrix2d m;
  Eigen::Vector2d w;

  explicit SpatialCost(const RandersForm& f) : m(f.M.topLeftCorner<2, 2>()), w(f.omega.head<2>()) {}

  double value(const Eigen::Vector2d& e) const { return std::sqrt(e.dot(m * e)) + w.dot(e); }
  Eigen::Vector2d gradient(const Eigen::Vector2d& e) const { return m * e / std::sqrt(e.dot(m * e)) + w; }
};

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

// Directions minimising G per unit length; empty when G is isotropic.
std::vector<Eigen::Vector2d> cheapest_directions(const SpatialCost& g) {
  auto rate = [&](double t) { return g.value({std::cos(t), std::sin(t)}); };
  const int n = 720;
  int best = 0;
  double lo = rate(0.0);
  double hi = lo;
  for (int i = 1; i < n; ++i) {
    const double v = rate(kTwoPi * i / n);
    if (v < lo) {
      lo = v;
      best = i;
    }
    hi = std::max(hi, v);
  }
  if (hi - lo <= 1e-12 * hi) return {};

  // Golden-section refinement around the best sample.
  double a = kTwoPi * (best - 1) / n;
  double b = kTwoPi * (best + 1) / n;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 80; ++it) {
    const double c = b - phi * (b - a);
    const double d = a + phi * (b - a);
    if (rate(c) < rate(d)) b = d; else a = c;
  }
  double t = 0.5 * (a + b);
  // Prefer exact analytic candidates when they are at least as cheap.
  std::vector<Eigen::Vector2d> candidates;
  if (g.w.norm() > 0.0) candidates.push_back(-g.w.normalized());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g.m);
  candidates.push_back(es.eigenvectors().col(0));
  candidates.push_back(-es.eigenvectors().col(0));
  Eigen::Vector2d d(std::cos(t), std::sin(t));
  for (const auto& c : candidates) {
    if (g.value(c) <= g.value(d) + 1e-14 * g.value(d)) {
      d = c;
      break;
    }
  }
  if (g.w.norm() == 0.0) return {d, -d};
  return {d};
}

// Drops out-of-grid vertices; facets losing vertices degrade to sub-faces.
Stencil clip_shape(const StencilShape& shape, const LiftedIndex& idx, const Lattice& lattice) {
  Stencil st;
  st.owner = idx;
  std::vector<int> remap(shape.offsets.size(), -1);
  for (int s = 0; s < static_cast<int>(shape.offsets.size()); ++s) {
    const StencilOffset& o = shape.offsets[s];
    const auto v = lattice.offset(idx, o.di, o.dj, o.dk);
    if (!v) continue;
    remap[s] = static_cast<int>(st.vertices.size());
    st.vertices.push_back(lattice.unravel(*v));
  }
  for (const Facet& f : shape.facets) {
    std::vector<int> kept;
    for (int a : f) {
      if (remap[a] >= 0) kept.push_back(remap[a]);
    }
    if (kept.empty()) continue;
    while (kept.size() < 3) kept.push_back(kept.back());
    st.boundary_facets.push_back({kept[0], kept[1], kept[2]});
  }
  return st;
}

}  // namespace

std::vector<Eigen::Vector2i> spatial_polygon(const RandersForm& f, int radius) {
  std::vector<Eigen::Vector2i> ring = {{1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
  if (radius <= 1) return ring;

  const SpatialCost g(f);
  const std::vector<Eigen::Vector2d> cheap = cheapest_directions(g);

  auto needs_split = [&](const Eigen::Vector2i& ei, const Eigen::Vector2i& fi) {
    const Eigen::Vector2i s = ei + fi;
    if (std::max(std::abs(s.x()), std::abs(s.y())) > radius) return false;
    const Eigen::Vector2d e = ei.cast<double>();
    const Eigen::Vector2d h = fi.cast<double>();
    if (g.gradient(e).dot(h) < 0.0 || g.gradient(h).dot(e) < 0.0) return true;
    for (const auto& d : cheap) {
      if (cross(e, d) >= 0.0 && cross(d, h) >= 0.0) return true;
    }
    return false;
  };

  std::vector<Eigen::Vector2i> out;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Eigen::Vector2i e = ring[i];
    const Eigen::Vector2i h = ring[(i + 1) % ring.size()];
    // Depth-first Stern-Brocot refinement of the cone [e, h).
    std::vector<std::pair<Eigen::Vector2i, Eigen::Vector2i>> stack = {{e, h}};
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      if (needs_split(a, b)) {
        const Eigen::Vector2i m = a + b;
        stack.emplace_back(m, b);
        stack.emplace_back(a, m);
      } else {
        out.push_back(a);
      }
    }
  }
  return out;
}

StencilShape build_shape(const RandersForm& f, bool lifted, const StencilPolicy& policy) {
  policy.validate();
  StencilShape s;
  if (policy.mode == StencilMode::Cube && lifted) {
    s.offsets = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    // Octahedron faces: one per sign octant.
    for (int sx : {0, 1}) {
      for (int sy : {2, 3}) {
        for (int sk : {4, 5}) s.facets.push_back({sx, sy, sk});
      }
    }
    s.finalize();
    return s;
  }

  int radius = 1;
  if (policy.mode == StencilMode::Adaptive) {
    double mu = 1.0;
    if (f.omega.head<2>().norm() == 0.0) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(f.M.topLeftCorner<2, 2>());
      mu = std::sqrt(es.eigenvalues()(1) / es.eigenvalues()(0));
    } else {
      mu = anisotropy_ratio(f, true);
    }
    radius = adaptive_radius(mu, policy.radius_cap);
  }
  const std::vector<Eigen::Vector2i> poly = spatial_polygon(f, radius);
  const int p = static_cast<int>(poly.size());

  if (!lifted) {
    for (const auto& v : poly) s.offsets.push_back({v.x(), v.y(), 0});
    for (int i = 0; i < p; ++i) s.facets.push_back({i, (i + 1) % p, (i + 1) % p});
    s.finalize();
    return s;
  }

  // Prism: polygon replicated on layers dk = 0, +1, -1, closed by cap centres.
  for (int layer : {0, 1, -1}) {
    for (const auto& v : poly) s.offsets.push_back({v.x(), v.y(), layer});
  }
  const int top = 3 * p;
  const int bottom = 3 * p + 1;
  s.offsets.push_back({0, 0, 1});
  s.offsets.push_back({0, 0, -1});
  auto at = [p](int layer_slot, int i) { return layer_slot * p + (i % p); };
  for (int i = 0; i < p; ++i) {
    const int j = i + 1;
    s.facets.push_back({top, at(1, i), at(1, j)});
    s.facets.push_back({bottom, at(2, j), at(2, i)});
    s.facets.push_back({at(0, i), at(0, j), at(1, j)});
    s.facets.push_back({at(0, i), at(1, j), at(1, i)});
    s.facets.push_back({at(0, i), at(2, j), at(0, j)});
    s.facets.push_back({at(0, i), at(2, i), at(2, j)});
  }
  s.finalize();
  return s;
}

StencilSet::StencilSet(const MetricField& m, const StencilPolicy& policy)
    : lattice_(m.lattice()), policy_(policy), kind_(m.kind()) {
  policy.validate();
  const bool lifted = lattice_.is_lifted();
  const int classes = m.stencil_class_count();
  shapes_.reserve(classes);
  for (int c = 0; c < classes; ++c) {
    shapes_.push_back(build_shape(m.form_at(m.class_representative(c)), lifted, policy));
    for (const auto& o : shapes_.back().offsets) shapes_.back().displacements.push_back(lattice_.displacement(o.di, o.dj, o.dk));
  }

  if (m.per_node_classes()) {
    std::vector<std::size_t> counts(lattice_.size() + 1, 0);
    for (std::size_t y = 0; y < lattice_.size(); ++y) {
      const LiftedIndex yi = lattice_.unravel(y);
      for (int s = 0; s < static_cast<int>(shapes_[y].offsets.size()); ++s) {
        const long long x = vertex_node(y, yi, s);
        if (x >= 0) ++counts[x + 1];
      }
    }
    for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
    reverse_start_ = counts;
    reverse_entries_.resize(counts.back());
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (std::size_t y = 0; y < lattice_.size(); ++y) {
      const LiftedIndex yi = lattice_.unravel(y);
      for (int s = 0; s < static_cast<int>(shapes_[y].offsets.size()); ++s) {
        const long long x = vertex_node(y, yi, s);
        if (x >= 0) reverse_entries_[fill[x]++] = {y, s};
      }
    }
    return;
  }

  reverse_by_k_.assign(lattice_.nt(), {});
  const bool by_k = classes > 1;
  for (int kx = 0; kx < lattice_.nt(); ++kx) {
    for (int ky = 0; ky < lattice_.nt(); ++ky) {
      const StencilShape& sh = shapes_[by_k ? ky : 0];
      for (int s = 0; s < static_cast<int>(sh.offsets.size()); ++s) {
        const StencilOffset& o = sh.offsets[s];
        if (lattice_.wrap_k(ky + o.dk) == kx) reverse_by_k_[kx].push_back({o.di, o.dj, ky, s});
      }
    }
  }
}

int StencilSet::class_of(std::size_t node) const {
  if (kind_ == MetricKind::AnisotropicRiemannian) return static_cast<int>(node);
  if (shapes_.size() == 1) return 0;
  return lattice_.unravel(node).k;
}

int StencilSet::max_radius() const {
  int r = 0;
  for (const auto& s : shapes_) r = std::max(r, s.radius());
  return r;
}

Stencil StencilSet::materialize(std::size_t node) const {
  return clip_shape(shape_of(node), lattice_.unravel(node), lattice_);
}

void StencilSet::dependents(std::size_t x, std::vector<Dependent>& out) const {
  out.clear();
  if (!reverse_start_.empty()) {
    out.assign(reverse_entries_.begin() + reverse_start_[x], reverse_entries_.begin() + reverse_start_[x + 1]);
    return;
  }
  const LiftedIndex xi = lattice_.unravel(x);
  for (const ReverseEntry& e : reverse_by_k_[xi.k]) {
    const int i = xi.i - e.di;
    const int j = xi.j - e.dj;
    if (!lattice_.contains(i, j)) continue;
    out.push_back({lattice_.linear({i, j, e.ky}), e.slot});
  }
}

std::size_t StencilSet::memory_bytes() const {
  std::size_t bytes = sizeof(*this);
  for (const auto& s : shapes_) {
    bytes += s.offsets.size() * sizeof(StencilOffset) + s.facets.size() * sizeof(Facet);
    for (const auto& inc : s.incident) bytes += inc.size() * sizeof(int) + sizeof(inc);
  }
  for (const auto& r : reverse_by_k_) bytes += r.size() * sizeof(ReverseEntry);
  bytes += reverse_start_.size() * sizeof(std::size_t) + reverse_entries_.size() * sizeof(Dependent);
  return bytes;
}

Stencil build_stencil(const LiftedIndex& idx, const MetricField& m, const StencilPolicy& policy) {
  require(m.lattice().contains(idx), "stencil owner outside grid");
  const StencilShape shape = build_shape(m.form_at(m.lattice().linear(idx)), m.lattice().is_lifted(), policy);
  return clip_shape(shape, idx, m.lattice());
}

std::vector<std::vector<std::size_t>> reverse_dependencies(const StencilSet& set) {
  std::vector<std::vector<std::size_t>> out(set.lattice().size());
  std::vector<StencilSet::Dependent> deps;
  for (std::size_t x = 0; x < out.size(); ++x) {
    set.dependents(x, deps);
    for (const auto& d : deps) out[x].push_back(d.owner);
  }
  return out;
}

}  // namespace elastica
