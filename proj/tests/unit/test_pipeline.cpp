#include "doctest.h"
#include "fixtures.hpp"

#include "elastica/error.hpp"
#include "elastica/pipeline.hpp"

using namespace elastica;

TEST_CASE("config parsing fills defaults and resolves paths") {
  const RunConfig c = parse_config(Json::parse(R"({
    "image": "img.png", "seeds": "s.json",
    "metric": {"kind": "data_driven", "lambda": 30, "alpha": 10},
    "grid": {"n_theta": 36},
    "application": {"mode": "group", "n_max": 2},
    "output": {"json": "out/r.json"}
  })"),
                                   "/data");
  CHECK(c.image == "/data/img.png");
  CHECK(c.seeds == "/data/s.json");
  CHECK(c.output.json == "/data/out/r.json");
  CHECK(c.metric.lambda == 30);
  CHECK(c.metric.alpha == 10);
  CHECK(c.grid.n_theta == 36);
  CHECK(c.feature.kind == "edge");
  CHECK(c.application.n_max == 2);
  CHECK(c.stencil.mode == StencilMode::Adaptive);
}

TEST_CASE("config errors are reported") {
  for (const char* bad : {R"({"metric": {"lamda": 3}})", R"({"metric": {"lambda": 0.5}})", R"({"grid": {"n_theta": 2}})",
                          R"({"feature": {"order": 2}})", R"({"application": {"mode": "paint"}})",
                          R"({"metric": {"kind": "isotropic"}, "application": {"mode": "contour"}})",
                          R"({"metric": {"alpha": "x"}})", R"({"bogus": 1})"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_config(Json::parse(bad)), Error);
  }
}

TEST_CASE("params override config blocks") {
  RunConfig c = parse_config(Json::object());
  apply_params(c, Json::parse(R"({"metric": {"alpha": 5}, "application": {"n_max": 3}})"));
  CHECK(c.metric.alpha == 5);
  CHECK(c.application.n_max == 3);
  CHECK_THROWS_AS(apply_params(c, Json::parse(R"({"output": {}})")), Error);
}

TEST_CASE("seed file parsing and validation") {
  const SeedFile s = parse_seed_file(Json::parse(R"({"points": [{"x": 1, "y": 2, "theta": 0.5}, {"x": 3, "y": 4, "theta": null}, [5, 6]], "params": {"metric": {"alpha": 2}}})"));
  REQUIRE(s.points.size() == 3);
  CHECK(*s.points[0].theta == 0.5);
  CHECK_FALSE(s.points[1].theta);
  CHECK(s.points[2].x == 5);
  CHECK(s.params["metric"]["alpha"] == 2);
  CHECK(parse_seed_file(seed_file_json(s)).points.size() == 3);

  CHECK(seed_problems(s.points, "tubular", 10, 10).empty());
  const auto probs = seed_problems(s.points, "contour", 10, 10);
  REQUIRE(probs.size() == 2);
  CHECK(probs[0] == "points[1].theta: required for mode contour");
  CHECK(seed_problems({s.points[0]}, "contour", 10, 10).front().find("at least 2") != std::string::npos);
  CHECK(seed_problems({{50, 1, 0.0}, {1, 1, 0.0}}, "group", 10, 10).front().find("outside") != std::string::npos);
  CHECK_THROWS_AS(parse_seed_file(Json::parse(R"({"points": [{"x": 1}]})")), Error);
}

TEST_CASE("trace with target equal to source gives a zero-length path") {
  RunConfig c = parse_config(Json::parse(R"({"metric": {"kind": "elastica"}, "feature": {"kind": "none"},
                                             "grid": {"n_theta": 16}, "application": {"mode": "trace"}})"));
  const FeatureSet f = compute_features(Image::gray(16, 16, 0.5), c.feature, c.grid, c.metric.kind);
  const RunOutput out = run_application(f, c, {{5, 5, 0.0}, {5, 5, 0.0}});
  CHECK(out.result["points"].size() == 1);
  CHECK(out.result["energy"] == 0.0);
  CHECK(out.result["meta"]["action"] == 0.0);
}

TEST_CASE("solve mode on a planar isotropic metric matches Euclidean distance") {
  RunConfig c = parse_config(Json::parse(R"({"metric": {"kind": "isotropic"}, "feature": {"kind": "none"},
                                             "application": {"mode": "solve"}})"));
  const FeatureSet f = compute_features(Image::gray(24, 24, 0.5), c.feature, c.grid, c.metric.kind);
  const RunOutput out = run_application(f, c, {{12, 12, std::nullopt}});
  REQUIRE(out.volume);
  CHECK(out.volume->n_theta == 1);
  CHECK(out.volume->data[12 * 24 + 12] == 0.0);
  CHECK(out.volume->data[12 * 24 + 20] == doctest::Approx(8.0).epsilon(1e-9));
  CHECK(out.result["stats"]["accepted"] == 24 * 24);
}

TEST_CASE("contour run is deterministic down to the serialized bytes") {
  RunConfig c = parse_config(Json::parse(R"({"grid": {"n_theta": 36}, "application": {"mode": "contour"}})"));
  const Eigen::Vector2d centre(32, 24);
  const Image img = fixture::ellipse_image(64, 48, centre, 22, 14);
  std::vector<SeedPoint> seeds;
  for (double t : {0.3, 2.4}) {
    const auto s = fixture::ellipse_seed(centre, 22, 14, t);
    seeds.push_back({s.x, s.y, s.theta});
  }
  const FeatureSet f = compute_features(img, c.feature, c.grid, c.metric.kind);
  const RunOutput a = run_application(f, c, seeds);
  const RunOutput b = run_application(compute_features(img, c.feature, c.grid, c.metric.kind), c, seeds);
  CHECK(dump_json(a.result) == dump_json(b.result));
  CHECK(a.result["closed"] == true);
  CHECK(a.result["segments"].size() == 2);
  CHECK(a.overlay.paths.size() == 2);
  CHECK(a.overlay.seeds.size() == 2);

  // Feature parameters must match the ones the set was computed with.
  RunConfig other = c;
  other.feature.sigma = 2.0;
  CHECK_THROWS_AS(run_application(f, other, seeds), Error);
}

TEST_CASE("metric kinds build from features") {
  const Image img = fixture::disks_image(32, 24, {{16, 12}}, 7);
  for (const char* kind : {"isotropic", "anisotropic", "orientation_lifted", "elastica", "data_driven"}) {
    CAPTURE(kind);
    FeatureConfig fc;
    GridConfig gc{8, 1.0};
    const FeatureSet f = compute_features(img, fc, gc, kind);
    MetricConfig mc;
    mc.kind = kind;
    const MetricField m = build_metric(f, mc);
    CHECK(m.lattice().nx() == 32);
    CHECK(m.lattice().is_lifted() == mc.lifted());
    if (std::string(kind) != "elastica") CHECK_FALSE(feature_volumes(f).empty());
  }
}

TEST_CASE("bench reports nondecreasing update counts") {
  const Json j = bench_json({1, 10}, {{12, 12, 1.0}, 12}, 1.0, {}, false);
  REQUIRE(j["rows"].size() == 2);
  CHECK(j["rows"][0].contains("wall_time") == false);
  CHECK(j["rows"][1]["mean_updates_per_node"].get<double>() >= j["rows"][0]["mean_updates_per_node"].get<double>());
}
