#include "elastica/applications.hpp"

#include "elastica/error.hpp"

#include <cmath>
#include <string>

namespace elastica {

namespace {

struct Candidate {
  std::size_t seed;
  bool reversed;
};

class Runner {
 public:
  Runner(const MetricField& m, const ApplicationOptions& options) : m_(m), options_(options) {
    stencils_ = options.stencils ? options.stencils : std::make_shared<const StencilSet>(m, options.policy);
    trace_ = options.trace;
    if (!trace_.stencils) trace_.stencils = stencils_;
  }

  /// Solves from `from` and returns the first reached candidate with its action.
  std::optional<std::pair<std::size_t, double>> nearest(const LiftedPoint& from, const std::vector<LiftedPoint>& targets,
                                                        SolveResult& out) {
    FastMarchOptions fo;
    fo.policy = options_.policy;
    fo.stencils = stencils_;
    fo.stops.mode = StopMode::FirstAny;
    for (const auto& t : targets) fo.stops.groups.push_back({t});
    out = fast_march(m_, {from}, fo);
    ++solves;
    if (!out.first_stop_group) return std::nullopt;
    const std::size_t g = *out.first_stop_group;
    const double v = out.map.value(m_.lattice().nearest(targets[g]));
    if (!std::isfinite(v)) return std::nullopt;
    return std::pair{g, v};
  }

  ContourSegment segment(const SolveResult& solved, const LiftedPoint& from, const LiftedPoint& to) const {
    ContourSegment s;
    s.path = trace_geodesic(solved.map, m_, to, {from}, trace_);
    s.energy = s.path.points.size() > 1 ? path_energy(s.path, m_).value : 0.0;
    s.action = solved.map.value(m_.lattice().nearest(to));
    return s;
  }

  const MetricField& m_;
  const ApplicationOptions& options_;
  std::shared_ptr<const StencilSet> stencils_;
  TraceOptions trace_;
  std::size_t solves = 0;
};

std::string seed_name(std::size_t i, const OrientedSeed& s) {
  return "seed " + std::to_string(i) + " at (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ")";
}

std::vector<LiftedPoint> lifts_of(const std::vector<OrientedSeed>& seeds, const std::vector<Candidate>& c) {
  std::vector<LiftedPoint> out;
  for (const auto& k : c) out.push_back(seeds[k.seed].lift(k.reversed));
  return out;
}

void erase_seed(std::vector<Candidate>& c, std::size_t seed) {
  std::erase_if(c, [seed](const Candidate& k) { return k.seed == seed; });
}

std::vector<Candidate> all_candidates(std::size_t n, std::size_t skip) {
  std::vector<Candidate> c;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == skip) continue;
    c.push_back({i, false});
    c.push_back({i, true});
  }
  return c;
}

ContourVertex vertex(const std::vector<OrientedSeed>& seeds, const Candidate& c) {
  return {c.seed, c.reversed, seeds[c.seed].lift(c.reversed)};
}

// Chooses (q1, q2) from both lifts of `start`; ties keep the unreversed lift.
struct FirstPair {
  Candidate q1, q2;
  SolveResult solved;
};

FirstPair first_pair(Runner& run, const std::vector<OrientedSeed>& seeds, std::size_t start,
                     const std::vector<Candidate>& pool) {
  const std::vector<LiftedPoint> targets = lifts_of(seeds, pool);
  std::optional<FirstPair> best;
  double best_value = kInfinity;
  for (bool rev : {false, true}) {
    SolveResult solved;
    const auto hit = run.nearest(seeds[start].lift(rev), targets, solved);
    if (hit && hit->second < best_value) {
      best_value = hit->second;
      best = FirstPair{{start, rev}, pool[hit->first], std::move(solved)};
    }
  }
  if (!best) fail(ErrorKind::Unreachable, "no other seed is reachable from " + seed_name(start, seeds[start]));
  return std::move(*best);
}

}  // namespace

void validate_seeds(const std::vector<OrientedSeed>& seeds, const MetricField& m) {
  const Lattice& l = m.lattice();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const OrientedSeed& s = seeds[i];
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || !std::isfinite(s.theta)) {
      fail(ErrorKind::InvalidArgument, seed_name(i, s) + " has non-finite coordinates");
    }
    try {
      l.nearest(s.lift(false));
    } catch (const Error&) {
      fail(ErrorKind::OutOfDomain, seed_name(i, s) + " lies outside the image");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const LiftedIndex a = l.nearest(s.lift(false));
      const LiftedIndex b = l.nearest(seeds[j].lift(false));
      if (a.i == b.i && a.j == b.j) {
        fail(ErrorKind::InvalidArgument, seed_name(i, s) + " coincides with " + seed_name(j, seeds[j]));
      }
    }
  }
}

ContourResult detect_closed_contour(const std::vector<OrientedSeed>& seeds, const MetricField& m,
                                    const ApplicationOptions& options) {
  require(m.lattice().is_lifted(), "contour detection needs an orientation-lifted metric");
  require(seeds.size() >= 2, "contour detection needs at least two seeds");
  validate_seeds(seeds, m);
  Runner run(m, options);
  ContourResult res;

  std::vector<Candidate> pool = all_candidates(seeds.size(), 0);
  FirstPair fp = first_pair(run, seeds, 0, pool);
  res.vertices = {vertex(seeds, fp.q1), vertex(seeds, fp.q2)};
  ContourSegment s = run.segment(fp.solved, res.vertices[0].point, res.vertices[1].point);
  s.from = 0;
  s.to = 1;
  res.segments.push_back(std::move(s));
  erase_seed(pool, fp.q2.seed);

  while (!pool.empty()) {
    const ContourVertex& last = res.vertices.back();
    const std::vector<LiftedPoint> targets = lifts_of(seeds, pool);
    SolveResult solved;
    const auto hit = run.nearest(last.point, targets, solved);
    if (!hit) {
      // Name the lowest-index seed that could not be reached.
      fail(ErrorKind::Unreachable, "remaining " + seed_name(pool.front().seed, seeds[pool.front().seed]) +
                                       " is unreachable from seed " + std::to_string(last.seed));
    }
    const Candidate next = pool[hit->first];
    res.vertices.push_back(vertex(seeds, next));
    ContourSegment seg = run.segment(solved, last.point, res.vertices.back().point);
    seg.from = res.vertices.size() - 2;
    seg.to = res.vertices.size() - 1;
    res.segments.push_back(std::move(seg));
    erase_seed(pool, next.seed);
  }

  // Close the loop back to q1.
  SolveResult solved;
  const ContourVertex& last = res.vertices.back();
  const auto hit = run.nearest(last.point, {res.vertices.front().point}, solved);
  if (!hit) fail(ErrorKind::Unreachable, "the first vertex is unreachable from seed " + std::to_string(last.seed));
  ContourSegment seg = run.segment(solved, last.point, res.vertices.front().point);
  seg.from = res.vertices.size() - 1;
  seg.to = 0;
  res.segments.push_back(std::move(seg));
  res.closed = true;
  res.solves = run.solves;
  return res;
}

GroupingResult perceptual_grouping(const std::vector<OrientedSeed>& seeds, const MetricField& m, std::size_t n_max,
                                   const ApplicationOptions& options) {
  require(m.lattice().is_lifted(), "perceptual grouping needs an orientation-lifted metric");
  GroupingResult out;
  if (n_max == 0) {
    for (std::size_t i = 0; i < seeds.size(); ++i) out.unused.push_back(i);
    return out;
  }
  require(seeds.size() >= 2, "perceptual grouping needs at least two seeds");
  validate_seeds(seeds, m);
  Runner run(m, options);

  std::vector<bool> used(seeds.size(), false);
  auto remaining = [&] {
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < seeds.size(); ++i)
      if (!used[i]) r.push_back(i);
    return r;
  };

  while (out.groups.size() < n_max && remaining().size() >= 2) {
    const std::size_t start = remaining().front();
    std::vector<Candidate> pool;
    for (std::size_t i : remaining()) {
      if (i == start) continue;
      pool.push_back({i, false});
      pool.push_back({i, true});
    }
    ContourResult group;
    std::optional<FirstPair> fp;
    try {
      fp = first_pair(run, seeds, start, pool);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unreachable) throw;
      used[start] = true;  // isolated seed: cannot seed a group
      continue;
    }
    group.vertices = {vertex(seeds, fp->q1), vertex(seeds, fp->q2)};
    ContourSegment s = run.segment(fp->solved, group.vertices[0].point, group.vertices[1].point);
    s.from = 0;
    s.to = 1;
    group.segments.push_back(std::move(s));
    used[start] = used[fp->q2.seed] = true;
    erase_seed(pool, fp->q2.seed);
    // q1 goes back into the pool so the loop can close on it.
    pool.insert(pool.begin(), fp->q1);

    while (true) {
      const ContourVertex& last = group.vertices.back();
      SolveResult solved;
      const auto hit = run.nearest(last.point, lifts_of(seeds, pool), solved);
      if (!hit) break;  // open group
      const Candidate next = pool[hit->first];
      const bool closing = next.seed == start;
      const LiftedPoint target = closing ? group.vertices.front().point : seeds[next.seed].lift(next.reversed);
      ContourSegment seg = run.segment(solved, last.point, target);
      seg.from = group.vertices.size() - 1;
      if (closing) {
        seg.to = 0;
        group.segments.push_back(std::move(seg));
        group.closed = true;
        break;
      }
      group.vertices.push_back(vertex(seeds, next));
      seg.to = group.vertices.size() - 1;
      group.segments.push_back(std::move(seg));
      used[next.seed] = true;
      erase_seed(pool, next.seed);
    }
    group.solves = run.solves;
    out.groups.push_back(std::move(group));
  }
  for (std::size_t i : remaining()) out.unused.push_back(i);
  return out;
}

TubularResult extract_tubular(const TubularPoint& source, const std::vector<TubularPoint>& ends,
                              const std::vector<double>& orientation, const MetricField& m,
                              const ApplicationOptions& options) {
  const Lattice& l = m.lattice();
  require(l.is_lifted(), "tubular extraction needs an orientation-lifted metric");
  require(orientation.size() == static_cast<std::size_t>(l.nx()) * l.ny(), "orientation map does not match the grid");
  auto theta_at = [&](const TubularPoint& p, const char* what) {
    LiftedIndex idx;
    try {
      idx = l.nearest({p.x, p.y, 0.0});
    } catch (const Error&) {
      fail(ErrorKind::OutOfDomain, std::string(what) + " lies outside the image");
    }
    return p.theta ? *p.theta : orientation[static_cast<std::size_t>(idx.j) * l.nx() + idx.i];
  };

  TubularResult res;
  res.source = make_lifted_point(source.x, source.y, theta_at(source, "tubular source"));
  const LiftedPoint src_rev = antipode(res.source);

  std::vector<std::array<LiftedPoint, 2>> lifts;
  FastMarchOptions fo;
  fo.policy = options.policy;
  fo.stencils = options.stencils ? options.stencils : std::make_shared<const StencilSet>(m, options.policy);
  fo.stops.mode = StopMode::AnyPerGroup;
  for (std::size_t i = 0; i < ends.size(); ++i) {
    const LiftedPoint p = make_lifted_point(ends[i].x, ends[i].y, theta_at(ends[i], ("end " + std::to_string(i)).c_str()));
    lifts.push_back({p, antipode(p)});
    fo.stops.groups.push_back({p, antipode(p)});
  }
  const SolveResult solved = fast_march(m, {res.source, src_rev}, fo);
  res.solves = 1;

  TraceOptions trace = options.trace;
  if (!trace.stencils) trace.stencils = fo.stencils;
  const LiftedIndex s0 = l.nearest(res.source);
  for (std::size_t i = 0; i < ends.size(); ++i) {
    TubularPath tp;
    tp.end = i;
    // The lift accepted first has the smaller action; ties keep the unreversed one.
    double best = kInfinity;
    for (const LiftedPoint& q : lifts[i]) {
      const LiftedIndex qi = l.nearest(q);
      if (solved.map.tag(qi) == NodeTag::Accepted && solved.map.value(qi) < best) {
        best = solved.map.value(qi);
        tp.end_lift = q;
      }
    }
    if (!std::isfinite(best)) {
      tp.error = "end " + std::to_string(i) + " is unreachable";
      res.centerlines.push_back(std::move(tp));
      continue;
    }
    tp.action = best;
    try {
      tp.path = trace_geodesic(solved.map, m, tp.end_lift, {res.source, src_rev}, trace);
      const LiftedPoint& first = tp.path.points.front();
      tp.source_lift = l.nearest(first) == s0 ? res.source : src_rev;
      tp.energy = tp.path.points.size() > 1 ? path_energy(tp.path, m).value : 0.0;
      tp.ok = true;
    } catch (const Error& e) {
      tp.error = e.what();
    }
    res.centerlines.push_back(std::move(tp));
  }
  return res;
}

}  // namespace elastica
