#include "elastica/eikonal.hpp"

#include "elastica/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <sstream>

namespace elastica {

// ---------------------------------------------------------------------------
// Per-simplex Hopf-Lax minimisation
//
// With y(w) = y0 + E w, v = x - y = v0 - E w and d_i = U_i - U_0, the
// objective is ||v||_M - <omega, v> + U_0 + d.w. Its stationary point solves
// E^T M v = k ||v||_M with k = E^T omega + d, which gives
// ||v||_M^2 = delta / (1 - k^T A^-1 k) and w = A^-1 (b - k ||v||_M).

namespace {

SimplexMinimum vertex_value(const RandersForm& f, const Eigen::Vector3d& e, double u) {
  return {f.eval(-e) + u, e};
}

// Stationary point strictly inside the segment [e0, e1], if it improves `best`.
void edge_interior(const RandersForm& f, const Eigen::Vector3d& e0, const Eigen::Vector3d& e1, double u0, double u1,
                   SimplexMinimum& best) {
  const Eigen::Vector3d ed = e1 - e0;
  const Eigen::Vector3d med = f.M * ed;
  const double a = ed.dot(med);
  if (!(a > 0.0)) return;
  const double b = -e0.dot(med);
  const double k = ed.dot(f.omega) + (u1 - u0);
  const double kk = k * k / a;
  if (kk >= 1.0) return;
  const double c0 = e0.dot(f.M * e0);
  const double delta = std::max(c0 - b * b / a, 0.0);
  const double norm = std::sqrt(delta / (1.0 - kk));
  const double w = (b - k * norm) / a;
  if (!(w > 0.0 && w < 1.0)) return;
  const Eigen::Vector3d y = e0 + w * ed;
  const double val = f.eval(-y) + u0 + w * (u1 - u0);
  if (val < best.value) best = {val, y};
}

SimplexMinimum edge_min(const RandersForm& f, const Eigen::Vector3d& e0, const Eigen::Vector3d& e1, double u0,
                        double u1) {
  SimplexMinimum best = vertex_value(f, e0, u0);
  const SimplexMinimum other = vertex_value(f, e1, u1);
  if (other.value < best.value) best = other;
  edge_interior(f, e0, e1, u0, u1, best);
  return best;
}

SimplexMinimum triangle_min(const RandersForm& f, const Eigen::Vector3d* e, const double* u) {
  const Eigen::Vector3d v0 = -e[0];
  Eigen::Matrix<double, 3, 2> ed;
  ed.col(0) = e[1] - e[0];
  ed.col(1) = e[2] - e[0];
  const Eigen::Matrix<double, 3, 2> med = f.M * ed;
  const Eigen::Matrix2d a = ed.transpose() * med;
  const double det = a.determinant();
  if (det > 1e-14 * a.squaredNorm()) {
    const Eigen::Matrix2d ainv = a.inverse();
    const Eigen::Vector2d b = med.transpose() * v0;
    const double c0 = v0.dot(f.M * v0);
    const Eigen::Vector2d k = ed.transpose() * f.omega + Eigen::Vector2d(u[1] - u[0], u[2] - u[0]);
    const double kk = k.dot(ainv * k);
    if (kk < 1.0) {
      const double delta = std::max(c0 - b.dot(ainv * b), 0.0);
      const double norm = std::sqrt(delta / (1.0 - kk));
      const Eigen::Vector2d w = ainv * (b - k * norm);
      if (w.x() >= 0.0 && w.y() >= 0.0 && w.x() + w.y() <= 1.0) {
        const Eigen::Vector3d y = e[0] + ed * w;
        const double val = f.eval(-y) + u[0] + w.x() * (u[1] - u[0]) + w.y() * (u[2] - u[0]);
        return {val, y};
      }
    }
  }
  // Convex objective: the minimum lies on the boundary.
  SimplexMinimum best = vertex_value(f, e[0], u[0]);
  for (int i = 1; i < 3; ++i) {
    const SimplexMinimum c = vertex_value(f, e[i], u[i]);
    if (c.value < best.value) best = c;
  }
  edge_interior(f, e[0], e[1], u[0], u[1], best);
  edge_interior(f, e[1], e[2], u[1], u[2], best);
  edge_interior(f, e[0], e[2], u[0], u[2], best);
  return best;
}

}  // namespace

SimplexMinimum minimize_on_simplex(const RandersForm& f, const Eigen::Vector3d* offsets, const double* values, int n) {
  // Keep only finite-valued vertices.
  Eigen::Vector3d e[3];
  double u[3];
  int m = 0;
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(values[i])) {
      e[m] = offsets[i];
      u[m] = values[i];
      ++m;
    }
  }
  switch (m) {
    case 0: return {};
    case 1: return vertex_value(f, e[0], u[0]);
    case 2: return edge_min(f, e[0], e[1], u[0], u[1]);
    default: return triangle_min(f, e, u);
  }
}

namespace {

// Unique vertex slots of a facet (repeated indices mark sub-faces).
int facet_slots(const Facet& t, int* out) {
  int n = 0;
  for (int a : t) {
    bool dup = false;
    for (int b = 0; b < n; ++b) dup = dup || out[b] == a;
    if (!dup) out[n++] = a;
  }
  return n;
}

}  // namespace

double hopf_lax_update(const LiftedIndex& x, const ActionMap& u, const Stencil& s, const MetricField& m) {
  const Lattice& l = m.lattice();
  require(l.contains(x), "Hopf-Lax owner outside grid");
  const RandersForm f = m.form_at(l.linear(x));
  double best = kInfinity;
  for (const Facet& t : s.boundary_facets) {
    int slots[3];
    const int n = facet_slots(t, slots);
    Eigen::Vector3d e[3];
    double vals[3];
    for (int a = 0; a < n; ++a) {
      const LiftedIndex& y = s.vertices[slots[a]];
      int dk = y.k - x.k;
      if (l.is_lifted()) {
        // Shortest periodic representative of the orientation offset.
        if (dk > l.nt() / 2) dk -= l.nt();
        if (dk < -l.nt() / 2) dk += l.nt();
      }
      e[a] = l.displacement(y.i - x.i, y.j - x.j, dk);
      vals[a] = u.value(y);
    }
    best = std::min(best, minimize_on_simplex(f, e, vals, n).value);
  }
  return best;
}

SimplexMinimum hopf_lax_argmin(const StencilSet& stencils, const MetricField& m, std::size_t x,
                               const std::vector<double>& values, double upper) {
  const Lattice& l = stencils.lattice();
  const LiftedIndex xi = l.unravel(x);
  const StencilShape& sh = stencils.shape_of(x);
  const RandersForm f = m.form_at(x);
  thread_local std::vector<double> vertex_values;
  vertex_values.resize(sh.offsets.size());
  for (int s = 0; s < static_cast<int>(sh.offsets.size()); ++s) {
    const long long y = stencils.vertex_node(x, xi, s);
    vertex_values[s] = y >= 0 ? values[y] : kInfinity;
  }
  SimplexMinimum best;
  best.value = upper;
  for (const Facet& t : sh.facets) {
    int slots[3];
    const int n = facet_slots(t, slots);
    Eigen::Vector3d e[3];
    double vals[3];
    double lo = kInfinity;
    for (int a = 0; a < n; ++a) {
      e[a] = sh.displacements[slots[a]];
      vals[a] = vertex_values[slots[a]];
      lo = std::min(lo, vals[a]);
    }
    if (lo >= best.value) continue;  // metric term is positive
    const SimplexMinimum c = minimize_on_simplex(f, e, vals, n);
    if (c.value < best.value) best = c;
  }
  if (!(best.value < upper)) best = SimplexMinimum{};
  return best;
}

StopCriteria StopCriteria::all(const std::vector<LiftedPoint>& stops) {
  StopCriteria c;
  c.mode = StopMode::AllAccepted;
  for (const auto& s : stops) c.groups.push_back({s});
  return c;
}

// ---------------------------------------------------------------------------
// Fast marching

namespace {

std::vector<std::size_t> snap_sources(const Lattice& l, const std::vector<LiftedPoint>& sources) {
  require(!sources.empty(), "source list is empty");
  std::vector<std::size_t> out;
  for (const auto& s : sources) out.push_back(l.linear(l.nearest(s)));
  return out;
}

std::shared_ptr<const StencilSet> stencils_for(const MetricField& m, const StencilPolicy& policy,
                                               const std::shared_ptr<const StencilSet>& given) {
  if (given) {
    require(given->lattice().size() == m.lattice().size(), "stencil set does not match the metric grid");
    return given;
  }
  return std::make_shared<const StencilSet>(m, policy);
}

using HeapEntry = std::pair<double, std::size_t>;
using MinHeap = std::priority_queue<HeapEntry, std::vector<HeapEntry>, std::greater<>>;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

SolveResult fast_march(const MetricField& m, const std::vector<LiftedPoint>& sources, const FastMarchOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice& l = m.lattice();
  const auto stencils = stencils_for(m, options.policy, options.stencils);
  const std::vector<std::size_t> src = snap_sources(l, sources);

  SolveResult r;
  ActionMap& map = r.map;
  map.lattice = l;
  map.values.assign(l.size(), kInfinity);
  map.tags.assign(l.size(), NodeTag::Far);
  for (std::size_t s : src) map.sources.push_back(l.unravel(s));

  // Stop bookkeeping.
  std::vector<std::vector<std::size_t>> stop_nodes;
  for (const auto& g : options.stops.groups) {
    std::vector<std::size_t> nodes;
    for (const auto& p : g) nodes.push_back(l.linear(l.nearest(p)));
    stop_nodes.push_back(std::move(nodes));
  }
  auto stop_satisfied = [&]() {
    if (stop_nodes.empty()) return false;
    for (const auto& g : stop_nodes) {
      bool any = false;
      bool all = true;
      for (std::size_t n : g) {
        const bool acc = map.tags[n] == NodeTag::Accepted;
        any = any || acc;
        all = all && acc;
      }
      if (options.stops.mode == StopMode::AllAccepted && !all) return false;
      if (options.stops.mode == StopMode::AnyPerGroup && !any) return false;
      if (options.stops.mode == StopMode::FirstAny && any) return true;
    }
    return options.stops.mode != StopMode::FirstAny;
  };

  MinHeap heap;
  for (std::size_t s : src) {
    map.values[s] = 0.0;
    map.tags[s] = NodeTag::Trial;
    heap.push({0.0, s});
  }

  std::vector<StencilSet::Dependent> deps;
  double last = 0.0;
  double first_stop_value = kInfinity;
  std::size_t updates = 0;
  std::size_t accepted = 0;

  while (!heap.empty()) {
    const auto [val, x] = heap.top();
    if (std::isfinite(first_stop_value) && val > first_stop_value) break;
    heap.pop();
    if (map.tags[x] == NodeTag::Accepted || val != map.values[x]) continue;
    map.tags[x] = NodeTag::Accepted;
    ++accepted;
    if (options.record_order) r.acceptance_order.push_back(x);
    r.stats.order_violation = std::max(r.stats.order_violation, last - val);
    last = std::max(last, val);

    if (!stop_nodes.empty() && stop_satisfied()) {
      if (options.stops.mode != StopMode::FirstAny) break;
      // Keep draining equal values so ties resolve by group order.
      if (!std::isfinite(first_stop_value)) first_stop_value = val;
    }

    stencils->dependents(x, deps);
    for (const auto& d : deps) {
      const std::size_t y = d.owner;
      if (map.tags[y] == NodeTag::Accepted) continue;
      // Only facets touching x_min can have changed since y was last updated.
      const LiftedIndex yi = l.unravel(y);
      const StencilShape& sh = stencils->shape_of(y);
      const RandersForm f = m.form_at(y);
      double best = map.values[y];
      for (int fi : sh.incident[d.slot]) {
        int slots[3];
        const int n = facet_slots(sh.facets[fi], slots);
        Eigen::Vector3d e[3];
        double vals[3];
        double lo = kInfinity;
        for (int a = 0; a < n; ++a) {
          const long long v = stencils->vertex_node(y, yi, slots[a]);
          e[a] = sh.displacements[slots[a]];
          vals[a] = v >= 0 ? map.values[v] : kInfinity;
          lo = std::min(lo, vals[a]);
        }
        if (lo >= best) continue;
        best = std::min(best, minimize_on_simplex(f, e, vals, n).value);
      }
      ++updates;
      if (best < map.values[y]) {
        map.values[y] = best;
        map.tags[y] = NodeTag::Trial;
        heap.push({best, y});
      }
    }
  }

  if (options.stops.mode == StopMode::FirstAny && !stop_nodes.empty()) {
    double best = kInfinity;
    for (std::size_t g = 0; g < stop_nodes.size(); ++g) {
      for (std::size_t n : stop_nodes[g]) {
        if (map.tags[n] == NodeTag::Accepted && map.values[n] < best) {
          best = map.values[n];
          r.first_stop_group = g;
        }
      }
    }
  }

  r.stats.accepted_count = accepted;
  r.stats.hopf_lax_update_count = updates;
  r.stats.mean_updates_per_node = accepted ? static_cast<double>(updates) / accepted : 0.0;
  r.stats.stencil_bytes = stencils->memory_bytes();
  r.stats.wall_time = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Seidel iteration

SolveResult agsi_solve(const MetricField& m, const std::vector<LiftedPoint>& sources, const AgsiOptions& options) {
  require(options.tolerance >= 0.0, "AGSI tolerance must be >= 0");
  const auto t0 = std::chrono::steady_clock::now();
  const Lattice& l = m.lattice();
  const auto stencils = stencils_for(m, options.policy, options.stencils);
  const std::vector<std::size_t> src = snap_sources(l, sources);

  SolveResult r;
  ActionMap& map = r.map;
  map.lattice = l;
  if (options.initial) {
    if (options.initial->size() != l.size()) fail(ErrorKind::DimensionMismatch, "initial map size mismatch");
    map.values = *options.initial;
  } else {
    map.values.assign(l.size(), kInfinity);
  }
  std::vector<char> is_source(l.size(), 0);
  for (std::size_t s : src) {
    map.values[s] = 0.0;
    is_source[s] = 1;
    map.sources.push_back(l.unravel(s));
  }

  std::vector<char> queued(l.size(), 0);
  std::vector<std::size_t> active;
  std::vector<StencilSet::Dependent> deps;
  auto activate_owners = [&](std::size_t x, std::vector<std::size_t>& into) {
    stencils->dependents(x, deps);
    for (const auto& d : deps) {
      if (!queued[d.owner] && !is_source[d.owner]) {
        queued[d.owner] = 1;
        into.push_back(d.owner);
      }
    }
  };
  if (options.initial) {
    for (std::size_t n = 0; n < l.size(); ++n) {
      if (!is_source[n]) {
        queued[n] = 1;
        active.push_back(n);
      }
    }
  } else {
    for (std::size_t s : src) activate_owners(s, active);
  }

  std::size_t updates = 0;
  std::size_t sweeps = 0;
  double residual = 0.0;
  std::vector<std::size_t> next;
  while (!active.empty()) {
    if (sweeps >= options.max_sweeps) {
      std::ostringstream os;
      os << "AGSI did not converge after " << sweeps << " sweeps; " << active.size()
         << " nodes still active, last max change " << residual;
      fail(ErrorKind::NonConvergence, os.str());
    }
    ++sweeps;
    residual = 0.0;
    next.clear();
    for (std::size_t y : active) {
      queued[y] = 0;
      const double v = hopf_lax_argmin(*stencils, m, y, map.values, map.values[y]).value;
      ++updates;
      const double old = map.values[y];
      if (v < old - options.tolerance) {
        residual = std::max(residual, std::isfinite(old) ? old - v : kInfinity);
        map.values[y] = v;
        activate_owners(y, next);
      }
    }
    std::swap(active, next);
  }

  map.tags.assign(l.size(), NodeTag::Far);
  std::size_t finite = 0;
  for (std::size_t n = 0; n < l.size(); ++n) {
    if (std::isfinite(map.values[n])) {
      map.tags[n] = NodeTag::Accepted;
      ++finite;
    }
  }
  r.stats.accepted_count = finite;
  r.stats.hopf_lax_update_count = updates;
  r.stats.mean_updates_per_node = finite ? static_cast<double>(updates) / finite : 0.0;
  r.stats.sweeps = sweeps;
  r.stats.stencil_bytes = stencils->memory_bytes();
  r.stats.wall_time = seconds_since(t0);
  return r;
}

// ---------------------------------------------------------------------------
// Update-count trend

std::vector<TrendRow> update_count_trend(const std::vector<double>& lambdas, const GridSpec3& grid, double alpha,
                                         const StencilPolicy& policy) {
  grid.validate();
  const LiftedPoint centre{(grid.base.width / 2) * grid.base.spacing, (grid.base.height / 2) * grid.base.spacing, 0.0};
  std::vector<TrendRow> rows;
  for (double lambda : lambdas) {
    const MetricField m = MetricField::elastica(grid, {lambda, alpha});
    FastMarchOptions opt;
    opt.policy = policy;
    rows.push_back({lambda, fast_march(m, {centre}, opt).stats});
  }
  return rows;
}

bool trend_is_sublinear(const std::vector<TrendRow>& rows, double max_ratio) {
  if (rows.size() < 2) return true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].stats.mean_updates_per_node < rows[i - 1].stats.mean_updates_per_node) return false;
  }
  // Compare the largest lambda against the first one above 1.
  std::size_t ref = 0;
  while (ref + 1 < rows.size() && rows[ref].lambda <= 1.0) ++ref;
  return rows.back().stats.mean_updates_per_node < max_ratio * rows[ref].stats.mean_updates_per_node;
}

}  // namespace elastica
