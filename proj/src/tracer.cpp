#include "elastica/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace elastica {

namespace {

struct Cell {
  int i0, j0, k0, k1;
  double tx, ty, tk;
};

Cell locate(const Lattice& l, const LiftedPoint& p) {
  Cell c{};
  const double fx = std::clamp(p.x / l.spacing(), 0.0, static_cast<double>(l.nx() - 1));
  const double fy = std::clamp(p.y / l.spacing(), 0.0, static_cast<double>(l.ny() - 1));
  c.i0 = std::min(static_cast<int>(fx), l.nx() - 2);
  c.j0 = std::min(static_cast<int>(fy), l.ny() - 2);
  c.tx = fx - c.i0;
  c.ty = fy - c.j0;
  if (l.is_lifted()) {
    const double fk = wrap_angle(p.theta) / l.theta_step();
    c.k0 = l.wrap_k(static_cast<int>(std::floor(fk)));
    c.k1 = l.wrap_k(c.k0 + 1);
    c.tk = fk - std::floor(fk);
  }
  return c;
}

// Visits the corners of the cell containing p with their trilinear weights.
template <class Fn>
void for_corners(const Lattice& l, const LiftedPoint& p, Fn&& fn) {
  const Cell c = locate(l, p);
  const int layers = l.is_lifted() ? 2 : 1;
  for (int a = 0; a < layers; ++a) {
    const int k = a == 0 ? c.k0 : c.k1;
    const double wk = l.is_lifted() ? (a == 0 ? 1.0 - c.tk : c.tk) : 1.0;
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        const double w = wk * (b ? c.ty : 1.0 - c.ty) * (d ? c.tx : 1.0 - c.tx);
        fn(LiftedIndex{c.i0 + d, c.j0 + b, k}, w);
      }
  }
}

// Interpolated action ignoring unreached corners.
double action_at(const ActionMap& u, const LiftedPoint& p) {
  double sum = 0.0;
  double wsum = 0.0;
  for_corners(u.lattice, p, [&](const LiftedIndex& idx, double w) {
    const double v = u.value(idx);
    if (w > 0.0 && std::isfinite(v)) {
      sum += w * v;
      wsum += w;
    }
  });
  return wsum > 0.0 ? sum / wsum : kInfinity;
}

bool node_gradient(const ActionMap& u, const LiftedIndex& idx, Eigen::Vector3d& g) {
  const Lattice& l = u.lattice;
  const double c = u.value(idx);
  if (!std::isfinite(c)) return false;
  auto axis = [&](int di, int dj, int dk, double h) {
    const auto lo = l.offset(idx, -di, -dj, -dk);
    const auto hi = l.offset(idx, di, dj, dk);
    const double a = lo ? u.values[*lo] : kInfinity;
    const double b = hi ? u.values[*hi] : kInfinity;
    if (std::isfinite(a) && std::isfinite(b)) return (b - a) / (2.0 * h);
    if (std::isfinite(b)) return (b - c) / h;
    if (std::isfinite(a)) return (c - a) / h;
    return 0.0;
  };
  g.x() = axis(1, 0, 0, l.spacing());
  g.y() = axis(0, 1, 0, l.spacing());
  g.z() = l.is_lifted() ? axis(0, 0, 1, l.theta_step()) : 0.0;
  return true;
}

LiftedPoint clamp_to_domain(const Lattice& l, LiftedPoint p) {
  p.x = std::clamp(p.x, 0.0, (l.nx() - 1) * l.spacing());
  p.y = std::clamp(p.y, 0.0, (l.ny() - 1) * l.spacing());
  p.theta = l.is_lifted() ? wrap_angle(p.theta) : 0.0;
  return p;
}

LiftedPoint advance(const Lattice& l, const LiftedPoint& p, const Eigen::Vector3d& d) {
  return clamp_to_domain(l, {p.x + d.x(), p.y + d.y(), p.theta + d.z()});
}

}  // namespace

Eigen::Vector3d action_gradient(const ActionMap& u, const LiftedPoint& p) {
  Eigen::Vector3d sum = Eigen::Vector3d::Zero();
  double wsum = 0.0;
  for_corners(u.lattice, p, [&](const LiftedIndex& idx, double w) {
    Eigen::Vector3d g;
    if (w > 0.0 && node_gradient(u, idx, g)) {
      sum += w * g;
      wsum += w;
    }
  });
  if (!(wsum > 0.0)) return Eigen::Vector3d::Zero();
  return sum / wsum;
}

LiftedPath trace_geodesic(const ActionMap& u, const MetricField& m, const LiftedPoint& target,
                          const std::vector<LiftedPoint>& source_points, const TraceOptions& options) {
  require(options.step > 0.0 && options.step <= 1.0, "trace step must lie in (0, 1]");
  require(u.lattice.size() == m.lattice().size(), "action map and metric grids differ");
  const Lattice& l = u.lattice;
  const LiftedIndex tidx = l.nearest(target);
  if (u.tag(tidx) != NodeTag::Accepted || !std::isfinite(u.value(tidx))) {
    fail(ErrorKind::NotAccepted, "trace target has not been reached by the front");
  }
  require(!u.sources.empty(), "action map has no sources");

  const double h = l.spacing();
  const double dt = l.is_lifted() ? l.theta_step() : 0.0;
  auto endpoint_for = [&](std::size_t s) {
    const LiftedIndex& idx = u.sources[s];
    for (const auto& p : source_points) {
      if (l.nearest(p) == idx) return p;
    }
    return l.point(idx);
  };
  // Source whose cell contains p, if any.
  auto arrived = [&](const LiftedPoint& p) -> long {
    for (std::size_t s = 0; s < u.sources.size(); ++s) {
      const LiftedPoint q = l.point(u.sources[s]);
      if (std::abs(p.x - q.x) > h * (1 + 1e-12) || std::abs(p.y - q.y) > h * (1 + 1e-12)) continue;
      if (l.is_lifted() && std::abs(angle_difference(p.theta, q.theta)) > dt * (1 + 1e-12)) continue;
      return static_cast<long>(s);
    }
    return -1;
  };

  LiftedPath back;
  back.step = options.step;
  const LiftedPoint start = clamp_to_domain(l, target);
  back.points.push_back(start);

  std::shared_ptr<const StencilSet> stencils = options.stencils;
  auto discrete_jump = [&](const LiftedPoint& p, LiftedPoint& out) {
    if (!stencils) stencils = std::make_shared<const StencilSet>(m, StencilPolicy{});
    const std::size_t n = l.linear(l.nearest(p));
    const SimplexMinimum best = hopf_lax_argmin(*stencils, m, n, u.values);
    if (!std::isfinite(best.value)) return false;
    out = advance(l, l.point(n), best.offset);
    return true;
  };

  auto direction = [&](const LiftedPoint& p, Eigen::Vector3d& d) {
    const Eigen::Vector3d g = action_gradient(u, p);
    if (!(g.squaredNorm() > 0.0) || !g.allFinite()) return false;
    d = -m.form_at(p).optimal_direction(g);
    double scale = std::max(std::abs(d.x()), std::abs(d.y())) / h;
    if (l.is_lifted()) scale = std::max(scale, std::abs(d.z()) / dt);
    if (!(scale > 0.0) || !std::isfinite(scale)) return false;
    d /= scale;
    return true;
  };

  const double u_target = std::max(action_at(u, start), 0.0);
  const double stall = options.stall_tolerance * std::max(u_target, 1.0);
  // Progress is measured against the lowest action seen so that oscillations count as stalls.
  double u_best = action_at(u, start);
  int stalled = 0;
  long hit = arrived(start);
  std::size_t steps = 0;
  while (hit < 0) {
    if (++steps > options.max_steps) {
      throw TraceError("geodesic back-tracking exceeded " + std::to_string(options.max_steps) + " steps", back);
    }
    const LiftedPoint& p = back.points.back();
    LiftedPoint next;
    Eigen::Vector3d d1, d2;
    bool ok = direction(p, d1);
    if (ok) {
      const LiftedPoint mid = advance(l, p, options.step * d1);
      if (direction(mid, d2)) {
        next = advance(l, p, 0.5 * options.step * (d1 + d2));
      } else {
        next = mid;
      }
    }
    const double u_next = ok ? action_at(u, next) : kInfinity;
    if (ok && options.consistency > 0.0) {
      // Forward travel next -> p must be paid for by the action drop.
      const double dth = angle_difference(p.theta, next.theta);
      const LiftedPoint mid{0.5 * (p.x + next.x), 0.5 * (p.y + next.y), wrap_angle(next.theta + 0.5 * dth)};
      const double cost = m.form_at(mid).eval({p.x - next.x, p.y - next.y, l.is_lifted() ? dth : 0.0});
      if (action_at(u, p) - u_next < options.consistency * cost - stall) ok = false;
    }
    if (ok && !(u_next < u_best - stall)) {
      ++stalled;
    } else if (ok) {
      stalled = 0;
    }
    if (!ok || stalled >= options.stall_window) {
      stalled = 0;
      if (!discrete_jump(p, next)) {
        throw TraceError("geodesic back-tracking is stuck: no descent direction", back);
      }
    }
    back.points.push_back(next);
    u_best = std::min(u_best, action_at(u, next));
    hit = arrived(next);
  }

  LiftedPath path;
  path.step = options.step;
  const LiftedPoint src = endpoint_for(static_cast<std::size_t>(hit));
  if (back.points.size() == 1 && l.nearest(start) == l.nearest(src) &&
      std::abs(start.x - src.x) + std::abs(start.y - src.y) + std::abs(angle_difference(start.theta, src.theta)) == 0.0) {
    path.points = {src};
    return path;
  }
  path.points.push_back(src);
  for (auto it = back.points.rbegin(); it != back.points.rend(); ++it) {
    // The last back-tracked point replaced by the exact source endpoint.
    if (it == back.points.rbegin() && back.points.size() > 1) continue;
    path.points.push_back(*it);
  }
  path.points.back() = make_lifted_point(target.x, target.y, target.theta);
  return path;
}

PathEnergy path_energy(const LiftedPath& path, const MetricEvaluator& f) {
  PathEnergy e;
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    const LiftedPoint& a = path.points[i];
    const LiftedPoint& b = path.points[i + 1];
    const double dth = angle_difference(b.theta, a.theta);
    const LiftedVector v{{b.x - a.x, b.y - a.y}, dth};
    const LiftedPoint mid{0.5 * (a.x + b.x), 0.5 * (a.y + b.y), wrap_angle(a.theta + 0.5 * dth)};
    const double c = f(mid, v);
    e.segments.push_back(c);
    e.value += c;
  }
  return e;
}

PathEnergy path_energy(const LiftedPath& path, const MetricField& m) {
  const bool lifted = m.lattice().is_lifted();
  return path_energy(path, [&](const LiftedPoint& x, const LiftedVector& v) {
    return lifted ? m.eval(x, v) : m.eval(x, LiftedVector{v.u, 0.0});
  });
}

double elastica_energy(const LiftedPath& path, double alpha) {
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    const LiftedPoint& a = path.points[i];
    const LiftedPoint& b = path.points[i + 1];
    const double ds = std::hypot(b.x - a.x, b.y - a.y);
    const double dth = angle_difference(b.theta, a.theta);
    if (ds == 0.0) {
      if (dth != 0.0) return kInfinity;
      continue;
    }
    e += ds + alpha * dth * dth / ds;
  }
  return e;
}

LiftedPath canonical_lifting(const std::vector<Eigen::Vector2d>& polyline) {
  require(polyline.size() >= 2, "canonical lifting needs at least two points");
  const std::size_t n = polyline.size() - 1;  // segments
  std::vector<double> chord(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d d = polyline[i + 1] - polyline[i];
    if (d.squaredNorm() == 0.0) fail(ErrorKind::InvalidArgument, "polyline has repeated consecutive points");
    const double raw = std::atan2(d.y(), d.x());
    chord[i] = i == 0 ? raw : chord[i - 1] + angle_difference(raw, chord[i - 1]);
  }
  std::vector<double> theta(n + 1);
  if (n == 1) {
    theta[0] = theta[1] = chord[0];
  } else {
    for (std::size_t i = 1; i < n; ++i) {
      const Eigen::Vector2d d = polyline[i + 1] - polyline[i - 1];
      const double ref = 0.5 * (chord[i - 1] + chord[i]);
      theta[i] = d.squaredNorm() > 0.0 ? ref + angle_difference(std::atan2(d.y(), d.x()), ref) : ref;
    }
    theta[0] = 2.0 * chord[0] - theta[1];
    theta[n] = 2.0 * chord[n - 1] - theta[n - 1];
  }
  LiftedPath path;
  for (std::size_t i = 0; i <= n; ++i) path.points.push_back(make_lifted_point(polyline[i].x(), polyline[i].y(), theta[i]));
  return path;
}

double spatial_hausdorff(const LiftedPath& a, const LiftedPath& b) {
  auto one_way = [](const LiftedPath& p, const LiftedPath& q) {
    double worst = 0.0;
    for (const auto& x : p.points) {
      const Eigen::Vector2d px(x.x, x.y);
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < q.points.size(); ++i) {
        const Eigen::Vector2d a0(q.points[i].x, q.points[i].y);
        if (i + 1 == q.points.size()) {
          best = std::min(best, (px - a0).norm());
          break;
        }
        const Eigen::Vector2d a1(q.points[i + 1].x, q.points[i + 1].y);
        const Eigen::Vector2d s = a1 - a0;
        const double len2 = s.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((px - a0).dot(s) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (px - (a0 + t * s)).norm());
      }
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(one_way(a, b), one_way(b, a));
}

}  // namespace elastica
