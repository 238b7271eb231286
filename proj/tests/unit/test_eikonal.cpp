#include "elastica/eikonal.hpp"
#include "elastica/error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace elastica;

namespace {

double rel_linf(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (!std::isfinite(a[n]) || !std::isfinite(b[n]) || b[n] == 0.0) continue;
    worst = std::max(worst, std::abs(a[n] - b[n]) / b[n]);
  }
  return worst;
}

}  // namespace

TEST_CASE("Hopf-Lax update samples") {
  const MetricField m = MetricField::isotropic({5, 5, 1.0}, 1.0);
  const StencilPolicy cube{StencilMode::Cube, 16};
  const Stencil s = build_stencil({2, 2, 0}, m, cube);
  ActionMap u;
  u.lattice = m.lattice();
  u.values.assign(25, kInfinity);
  CHECK(std::isinf(hopf_lax_update({2, 2, 0}, u, s, m)));
  u.values[m.lattice().linear({3, 2, 0})] = 0.0;
  CHECK(hopf_lax_update({2, 2, 0}, u, s, m) == doctest::Approx(1.0));
  u.values[m.lattice().linear({3, 3, 0})] = 0.0;
  // Segment (1,0)-(1,1): nearest point is the vertex itself.
  CHECK(hopf_lax_update({2, 2, 0}, u, s, m) == doctest::Approx(1.0));

  RandersForm euclid;
  const Eigen::Vector3d e[2] = {{1, 1, 0}, {1, -1, 0}};
  const double zero[2] = {0, 0};
  const double want = oracle::point_segment_distance(Eigen::Vector3d::Zero(), e[0], e[1]);
  CHECK(minimize_on_simplex(euclid, e, zero, 2).value == doctest::Approx(want));
  CHECK(want == doctest::Approx(1.0));
  const double inf2[2] = {kInfinity, kInfinity};
  CHECK(std::isinf(minimize_on_simplex(euclid, e, inf2, 2).value));
}

TEST_CASE("simplex minimisation matches a barycentric brute force") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> uni(-1, 1);
  for (int trial = 0; trial < 300; ++trial) {
    const double lambda = 1.0 + 50.0 * (uni(rng) + 1.0);
    const RandersForm f = randers_decomposition({lambda, 0.5 + uni(rng) * 0.4}, 3.0 * (uni(rng) + 1.0));
    std::vector<Eigen::Vector3d> e;
    std::vector<double> vals;
    const int n = 1 + trial % 3;
    for (int i = 0; i < n; ++i) {
      e.emplace_back(3 * uni(rng), 3 * uni(rng), 0.3 * uni(rng));
      vals.push_back(5.0 + 4.0 * uni(rng));
    }
    auto F = [&](const Eigen::Vector3d& v) { return f.eval(v); };
    const double want = oracle::brute_simplex_min(F, e, vals);
    const SimplexMinimum got = minimize_on_simplex(f, e.data(), vals.data(), n);
    CHECK(got.value == doctest::Approx(want).epsilon(1e-6));
    CHECK(got.value <= want + 1e-9 * want);
  }
}

TEST_CASE("fast marching preconditions") {
  const MetricField m = MetricField::isotropic({8, 8, 1.0}, 1.0);
  CHECK_THROWS_AS(fast_march(m, {}), Error);
  try {
    fast_march(m, {{20, 1, 0}});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::OutOfDomain);
  }
}

TEST_CASE("isotropic planar distance matches the Euclidean distance") {
  const MetricField m = MetricField::isotropic({64, 64, 1.0}, 1.0);
  FastMarchOptions opt;
  opt.record_order = true;
  const SolveResult r = fast_march(m, {{20, 30, 0}}, opt);
  double worst = 0.0;
  for (std::size_t n = 0; n < r.map.values.size(); ++n) {
    const LiftedPoint p = m.lattice().point(n);
    worst = std::max(worst, std::abs(r.map.values[n] - std::hypot(p.x - 20, p.y - 30)));
    CHECK(r.map.accepted(n));
  }
  CHECK(worst <= 1.5);
  CHECK(r.map.values[m.lattice().linear({20, 30, 0})] == 0.0);
  CHECK(r.stats.order_violation == 0.0);
  CHECK(r.stats.accepted_count == 64 * 64);
  CHECK(r.stats.mean_updates_per_node ==
        doctest::Approx(double(r.stats.hopf_lax_update_count) / r.stats.accepted_count));
  for (std::size_t i = 1; i < r.acceptance_order.size(); ++i)
    CHECK(r.map.values[r.acceptance_order[i]] >= r.map.values[r.acceptance_order[i - 1]]);
}

TEST_CASE("sources have value zero") {
  const MetricField m = MetricField::elastica({{16, 16, 1.0}, 16}, {10, 1});
  const std::vector<LiftedPoint> src = {{3, 3, 0}, {10, 12, 1.2}};
  const SolveResult r = fast_march(m, src);
  for (const auto& s : src) CHECK(r.map.value(m.lattice().nearest(s)) == 0.0);
  for (double v : r.map.values) CHECK(v >= 0.0);
  CHECK(r.map.sources.size() == 2);
}

TEST_CASE("symmetric metrics give symmetric maps") {
  const MetricField m = MetricField::isotropic({33, 33, 1.0}, 1.0);
  const SolveResult r = fast_march(m, {{16, 16, 0}});
  for (int j = 0; j < 33; ++j)
    for (int i = 0; i < 33; ++i) {
      const double v = r.map.value({i, j, 0});
      CHECK(std::abs(v - r.map.value({32 - i, j, 0})) < 1e-9);
      CHECK(std::abs(v - r.map.value({j, i, 0})) < 1e-9);
    }

  // Lifted: the octahedral stencil is mirror-symmetric; the prism stencil has
  // a fixed triangulation handedness, so it keeps only the rotations.
  const MetricField iolr = MetricField::orientation_lifted({{17, 17, 1.0}, 16}, 1.0, 2.0);
  FastMarchOptions cube;
  cube.policy.mode = StencilMode::Cube;
  const SolveResult q = fast_march(iolr, {{8, 8, 0}}, cube);
  const SolveResult a = fast_march(iolr, {{8, 8, 0}});
  for (int k = 0; k < 16; ++k)
    for (int j = 0; j < 17; ++j)
      for (int i = 0; i < 17; ++i) {
        const double v = q.map.value({i, j, k});
        CHECK(std::abs(v - q.map.value({16 - i, j, k})) < 1e-9);
        CHECK(std::abs(v - q.map.value({i, j, (16 - k) % 16})) < 1e-9);
        CHECK(std::abs(v - q.map.value({j, i, k})) < 1e-9);
        const double w = a.map.value({i, j, k});
        CHECK(std::abs(w - a.map.value({16 - j, i, k})) < 1e-9);
        CHECK(std::abs(w - a.map.value({i, j, (16 - k) % 16})) < 1e-9);
      }
}

TEST_CASE("early abort reproduces the full solve at the stop nodes") {
  const MetricField m = MetricField::elastica({{20, 20, 1.0}, 18}, {30, 1});
  const SolveResult full = fast_march(m, {{5, 10, 0}});
  const std::vector<LiftedPoint> stops = {{12, 10, 0}, {15, 14, 0.7}};
  FastMarchOptions opt;
  opt.stops = StopCriteria::all(stops);
  const SolveResult part = fast_march(m, {{5, 10, 0}}, opt);
  for (const auto& s : stops) {
    const LiftedIndex idx = m.lattice().nearest(s);
    CHECK(part.map.tag(idx) == NodeTag::Accepted);
    CHECK(part.map.value(idx) == full.map.value(idx));
  }
  CHECK(part.stats.accepted_count < full.stats.accepted_count);
}

TEST_CASE("first-any stop reports the earliest group") {
  const MetricField m = MetricField::isotropic({30, 30, 1.0}, 1.0);
  FastMarchOptions opt;
  opt.stops.mode = StopMode::FirstAny;
  opt.stops.groups = {{{25, 5, 0}}, {{5, 12, 0}, {28, 28, 0}}, {{5, 18, 0}}};
  const SolveResult r = fast_march(m, {{5, 5, 0}}, opt);
  REQUIRE(r.first_stop_group);
  CHECK(*r.first_stop_group == 1);

  // Exact tie: lower group index wins.
  opt.stops.groups = {{{5, 15, 0}}, {{15, 5, 0}}};
  const SolveResult t = fast_march(m, {{5, 5, 0}}, opt);
  REQUIRE(t.first_stop_group);
  CHECK(*t.first_stop_group == 0);
}

TEST_CASE("fast marching agrees with AGSI on causal metrics") {
  const MetricField iso = MetricField::isotropic({20, 20, 1.0}, 1.0);
  const SolveResult f1 = fast_march(iso, {{4, 7, 0}});
  const SolveResult a1 = agsi_solve(iso, {{4, 7, 0}});
  CHECK(rel_linf(f1.map.values, a1.map.values) <= 1e-6);

  const MetricField el = MetricField::elastica({{14, 14, 1.0}, 12}, {1, 1});
  const SolveResult f2 = fast_march(el, {{7, 7, 0}});
  const SolveResult a2 = agsi_solve(el, {{7, 7, 0}});
  CHECK(rel_linf(f2.map.values, a2.map.values) <= 1e-6);
  CHECK(f2.stats.order_violation == 0.0);
}

TEST_CASE("AGSI fixed point and failure modes") {
  const MetricField m = MetricField::elastica({{12, 12, 1.0}, 12}, {10, 1});
  AgsiOptions exact;
  exact.tolerance = 0.0;
  const SolveResult a = agsi_solve(m, {{6, 6, 0}}, exact);
  AgsiOptions again;
  again.tolerance = 0.0;
  again.max_sweeps = 1;
  again.initial = &a.map.values;
  const SolveResult b = agsi_solve(m, {{6, 6, 0}}, again);
  CHECK(b.map.values == a.map.values);

  AgsiOptions tight;
  tight.max_sweeps = 1;
  try {
    agsi_solve(m, {{6, 6, 0}}, tight);
    FAIL("expected non-convergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonConvergence);
    CHECK(std::string(e.what()).find("max change") != std::string::npos);
  }
  CHECK_THROWS_AS(agsi_solve(m, {}), Error);
}

TEST_CASE("fast marching values are a supersolution of the Hopf-Lax system") {
  const MetricField m = MetricField::elastica({{14, 14, 1.0}, 12}, {30, 1});
  auto set = std::make_shared<const StencilSet>(m, StencilPolicy{});
  FastMarchOptions fo;
  fo.stencils = set;
  const SolveResult f = fast_march(m, {{7, 7, 0}}, fo);
  for (std::size_t n = 0; n < f.map.values.size(); ++n) {
    if (f.map.values[n] == 0.0) continue;
    CHECK(hopf_lax_argmin(*set, m, n, f.map.values).value <= f.map.values[n] * (1 + 1e-12));
  }
  AgsiOptions ao;
  ao.stencils = set;
  const SolveResult a = agsi_solve(m, {{7, 7, 0}}, ao);
  CHECK(a.stats.mean_updates_per_node >= f.stats.mean_updates_per_node);
  for (std::size_t n = 0; n < f.map.values.size(); ++n) CHECK(a.map.values[n] <= f.map.values[n] * (1 + 1e-9));
}

TEST_CASE("smaller metrics give smaller distances") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> uni(1, 3);
  std::vector<double> lo(24 * 24), hi(24 * 24);
  for (std::size_t n = 0; n < lo.size(); ++n) {
    lo[n] = uni(rng);
    hi[n] = lo[n] + uni(rng) - 1.0;
  }
  const SolveResult a = fast_march(MetricField::isotropic({24, 24, 1.0}, lo), {{3, 3, 0}});
  const SolveResult b = fast_march(MetricField::isotropic({24, 24, 1.0}, hi), {{3, 3, 0}});
  for (std::size_t n = 0; n < lo.size(); ++n) CHECK(a.map.values[n] <= b.map.values[n] + 1e-12);
}

TEST_CASE("update counts grow slowly with lambda") {
  const auto rows = update_count_trend({1, 10, 100, 1000}, {{16, 16, 1.0}, 18}, 1.0);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.stats.accepted_count == 16u * 16u * 18u);
  CHECK(rows[0].stats.mean_updates_per_node <= rows[1].stats.mean_updates_per_node);
  CHECK(trend_is_sublinear(rows));
  std::vector<TrendRow> bad = rows;
  bad[2].stats.mean_updates_per_node = 0.0;
  CHECK_FALSE(trend_is_sublinear(bad));
}
