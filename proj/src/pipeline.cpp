#include "elastica/pipeline.hpp"

#include "elastica/eikonal.hpp"
#include "elastica/error.hpp"
#include "elastica/tracer.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace elastica {

namespace {

void check_keys(const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) fail(ErrorKind::InvalidArgument, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(ErrorKind::InvalidArgument, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    fail(ErrorKind::InvalidArgument, where + "." + key + " has the wrong type");
  }
}

std::string resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || std::filesystem::path(path).is_absolute()) return path;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

void validate(const RunConfig& c) {
  static const std::set<std::string> features{"edge", "flux", "none"};
  static const std::set<std::string> metrics{"isotropic", "anisotropic", "orientation_lifted", "elastica", "data_driven"};
  static const std::set<std::string> modes{"contour", "group", "tubular", "trace", "solve"};
  require(features.count(c.feature.kind), "feature.kind must be edge, flux or none");
  require(metrics.count(c.metric.kind), "metric.kind is not a known metric");
  require(modes.count(c.application.mode), "application.mode must be contour, group, tubular, trace or solve");
  require(c.feature.sigma > 0 && std::isfinite(c.feature.sigma), "feature.sigma must be > 0");
  require(c.feature.order == 1 || c.feature.order == 3 || c.feature.order == 5, "feature.order must be 1, 3 or 5");
  require(!c.feature.radii.empty(), "feature.radii must not be empty");
  for (double r : c.feature.radii) require(r > 0 && std::isfinite(r), "feature.radii must be positive");
  require(c.feature.eta >= 0 && std::isfinite(c.feature.eta), "feature.eta must be >= 0");
  require(c.feature.p > 0 && std::isfinite(c.feature.p), "feature.p must be > 0");
  require(c.feature.beta1 > 0 && std::isfinite(c.feature.beta1), "feature.beta1 must be > 0");
  require(c.feature.ar_ratio >= 1 && std::isfinite(c.feature.ar_ratio), "feature.ar_ratio must be >= 1");
  require(c.metric.lambda >= 1 && std::isfinite(c.metric.lambda), "metric.lambda must be >= 1");
  require(c.metric.alpha > 0 && std::isfinite(c.metric.alpha), "metric.alpha must be > 0");
  require(c.metric.rho > 0 && std::isfinite(c.metric.rho), "metric.rho must be > 0");
  require(c.grid.n_theta >= 4, "grid.n_theta must be >= 4");
  require(c.grid.spacing > 0 && std::isfinite(c.grid.spacing), "grid.spacing must be > 0");
  c.stencil.validate();
  const std::string& mode = c.application.mode;
  if (mode == "contour" || mode == "group" || mode == "tubular") {
    require(c.metric.lifted(), "application mode " + mode + " needs an orientation-lifted metric");
  }
}

void parse_blocks(RunConfig& c, const Json& j) {
  if (j.contains("feature")) {
    const Json& b = j.at("feature");
    check_keys(b, {"kind", "sigma", "order", "radii", "eta", "p", "beta1", "ar_ratio"}, "feature");
    read(b, "kind", c.feature.kind, "feature");
    read(b, "sigma", c.feature.sigma, "feature");
    read(b, "order", c.feature.order, "feature");
    read(b, "radii", c.feature.radii, "feature");
    read(b, "eta", c.feature.eta, "feature");
    read(b, "p", c.feature.p, "feature");
    read(b, "beta1", c.feature.beta1, "feature");
    read(b, "ar_ratio", c.feature.ar_ratio, "feature");
  }
  if (j.contains("metric")) {
    const Json& b = j.at("metric");
    check_keys(b, {"kind", "lambda", "alpha", "rho"}, "metric");
    read(b, "kind", c.metric.kind, "metric");
    read(b, "lambda", c.metric.lambda, "metric");
    read(b, "alpha", c.metric.alpha, "metric");
    read(b, "rho", c.metric.rho, "metric");
  }
  if (j.contains("grid")) {
    const Json& b = j.at("grid");
    check_keys(b, {"n_theta", "spacing"}, "grid");
    read(b, "n_theta", c.grid.n_theta, "grid");
    read(b, "spacing", c.grid.spacing, "grid");
  }
  if (j.contains("stencil")) {
    const Json& b = j.at("stencil");
    check_keys(b, {"mode", "radius_cap"}, "stencil");
    std::string mode = to_string(c.stencil.mode);
    read(b, "mode", mode, "stencil");
    c.stencil.mode = stencil_mode_from_string(mode);
    read(b, "radius_cap", c.stencil.radius_cap, "stencil");
  }
  if (j.contains("application")) {
    const Json& b = j.at("application");
    check_keys(b, {"mode", "n_max"}, "application");
    read(b, "mode", c.application.mode, "application");
    read(b, "n_max", c.application.n_max, "application");
  }
}

SeedPoint seed_from_json(const Json& p, std::size_t i) {
  const std::string where = "points[" + std::to_string(i) + "]";
  SeedPoint s;
  if (p.is_array()) {
    if (p.size() != 2 && p.size() != 3) fail(ErrorKind::InvalidArgument, where + " must be [x, y] or [x, y, theta]");
    s.x = p[0].get<double>();
    s.y = p[1].get<double>();
    if (p.size() == 3 && !p[2].is_null()) s.theta = p[2].get<double>();
    return s;
  }
  check_keys(p, {"x", "y", "theta"}, where);
  if (!p.contains("x") || !p.contains("y")) fail(ErrorKind::InvalidArgument, where + " needs x and y");
  try {
    s.x = p.at("x").get<double>();
    s.y = p.at("y").get<double>();
    if (p.contains("theta") && !p.at("theta").is_null()) s.theta = p.at("theta").get<double>();
  } catch (const Json::exception&) {
    fail(ErrorKind::InvalidArgument, where + " coordinates must be numbers");
  }
  return s;
}

Json seeds_to_json(const std::vector<SeedPoint>& seeds) {
  Json pts = Json::array();
  for (const auto& s : seeds) {
    Json p;
    p["x"] = s.x;
    p["y"] = s.y;
    p["theta"] = s.theta ? Json(*s.theta) : Json(nullptr);
    pts.push_back(std::move(p));
  }
  return pts;
}

Json path_points(const LiftedPath& path) {
  Json pts = Json::array();
  for (const auto& p : path.points) pts.push_back(point_json(p));
  return pts;
}

Json contour_json(const ContourResult& r) {
  Json verts = Json::array();
  for (const auto& v : r.vertices) verts.push_back({{"seed", v.seed}, {"reversed", v.reversed}, {"point", point_json(v.point)}});
  Json segs = Json::array();
  double total = 0.0;
  for (const auto& s : r.segments) {
    total += s.energy;
    segs.push_back({{"from", s.from},
                    {"to", s.to},
                    {"from_seed", r.vertices[s.from].seed},
                    {"to_seed", r.vertices[s.to].seed},
                    {"energy", s.energy},
                    {"action", s.action},
                    {"points", path_points(s.path)}});
  }
  return {{"closed", r.closed}, {"total_energy", total}, {"vertices", verts}, {"segments", segs}};
}

std::vector<OrientedSeed> oriented(const std::vector<SeedPoint>& seeds) {
  std::vector<OrientedSeed> out;
  for (const auto& s : seeds) out.push_back({s.x, s.y, *s.theta});
  return out;
}

void add_contour_overlay(RunOutput& out, const ContourResult& r, std::size_t& color, const std::string& prefix) {
  for (std::size_t k = 0; k < r.segments.size(); ++k) {
    out.overlay.paths.push_back({r.segments[k].path, palette_color(color++)});
    out.paths.emplace_back(prefix + "segment" + std::to_string(k), r.segments[k].path);
  }
}

void add_seed_glyphs(RunOutput& out, const std::vector<SeedPoint>& seeds) {
  for (const auto& s : seeds) out.overlay.seeds.push_back({s.x, s.y, s.theta, {255, 255, 0}});
}

LiftedPoint lift_seed(const SeedPoint& s, const MetricField& m) {
  return make_lifted_point(s.x, s.y, m.lattice().is_lifted() ? s.theta.value_or(0.0) : 0.0);
}

}  // namespace

RunConfig parse_config(const Json& j, const std::string& base_dir) {
  check_keys(j, {"image", "seeds", "feature", "metric", "grid", "stencil", "application", "output", "params"}, "config");
  RunConfig c;
  read(j, "image", c.image, "config");
  c.image = resolve(c.image, base_dir);
  if (j.contains("seeds")) {
    const Json& s = j.at("seeds");
    if (s.is_string()) {
      c.seeds = resolve(s.get<std::string>(), base_dir);
    } else {
      c.inline_seeds = parse_seed_file(s).points;
      c.has_inline_seeds = true;
    }
  }
  parse_blocks(c, j);
  if (j.contains("output")) {
    const Json& b = j.at("output");
    check_keys(b, {"json", "overlay", "csv", "volume"}, "output");
    read(b, "json", c.output.json, "output");
    read(b, "overlay", c.output.overlay, "output");
    read(b, "csv", c.output.csv, "output");
    read(b, "volume", c.output.volume, "output");
    c.output.json = resolve(c.output.json, base_dir);
    c.output.overlay = resolve(c.output.overlay, base_dir);
    c.output.csv = resolve(c.output.csv, base_dir);
    c.output.volume = resolve(c.output.volume, base_dir);
  }
  if (j.contains("params")) apply_params(c, j.at("params"));
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidArgument, path + ": " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path().string());
}

Json config_to_json(const RunConfig& c) {
  Json j;
  j["feature"] = {{"kind", c.feature.kind}, {"sigma", c.feature.sigma},   {"order", c.feature.order},
                  {"radii", c.feature.radii}, {"eta", c.feature.eta},     {"p", c.feature.p},
                  {"beta1", c.feature.beta1}, {"ar_ratio", c.feature.ar_ratio}};
  j["metric"] = {{"kind", c.metric.kind}, {"lambda", c.metric.lambda}, {"alpha", c.metric.alpha}, {"rho", c.metric.rho}};
  j["grid"] = {{"n_theta", c.grid.n_theta}, {"spacing", c.grid.spacing}};
  j["stencil"] = {{"mode", to_string(c.stencil.mode)}, {"radius_cap", c.stencil.radius_cap}};
  j["application"] = {{"mode", c.application.mode}, {"n_max", c.application.n_max}};
  return j;
}

void apply_params(RunConfig& c, const Json& params) {
  if (params.is_null()) return;
  check_keys(params, {"feature", "metric", "grid", "stencil", "application"}, "params");
  parse_blocks(c, params);
  c.params_applied.merge_patch(params);
  validate(c);
}

SeedFile parse_seed_file(const Json& j) {
  SeedFile s;
  const Json* points = &j;
  if (j.is_object()) {
    check_keys(j, {"points", "params"}, "seed file");
    if (!j.contains("points")) fail(ErrorKind::InvalidArgument, "seed file needs a points array");
    points = &j.at("points");
    if (j.contains("params")) s.params = j.at("params");
  }
  if (!points->is_array()) fail(ErrorKind::InvalidArgument, "points must be an array");
  for (std::size_t i = 0; i < points->size(); ++i) s.points.push_back(seed_from_json((*points)[i], i));
  return s;
}

Json seed_file_json(const SeedFile& s) { return {{"points", seeds_to_json(s.points)}, {"params", s.params}}; }

std::vector<std::string> seed_problems(const std::vector<SeedPoint>& seeds, const std::string& mode, int width,
                                       int height) {
  std::vector<std::string> out;
  const std::size_t need = mode == "solve" || mode == "tubular" ? 1 : 2;
  if (seeds.size() < need) {
    out.push_back("points: mode " + mode + " needs at least " + std::to_string(need) + " seeds, got " +
                  std::to_string(seeds.size()));
  }
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const auto& s = seeds[i];
    const std::string where = "points[" + std::to_string(i) + "]";
    if (!std::isfinite(s.x) || !std::isfinite(s.y) || (s.theta && !std::isfinite(*s.theta))) {
      out.push_back(where + ": coordinates must be finite");
      continue;
    }
    if (s.x < -0.5 || s.y < -0.5 || s.x > width - 0.5 || s.y > height - 0.5) {
      out.push_back(where + ": (" + std::to_string(s.x) + ", " + std::to_string(s.y) + ") lies outside the " +
                    std::to_string(width) + "x" + std::to_string(height) + " image");
    }
    if ((mode == "contour" || mode == "group") && !s.theta) out.push_back(where + ".theta: required for mode " + mode);
  }
  if (mode == "trace" && seeds.size() > 2) out.push_back("points: mode trace takes a source and a target");
  return out;
}

FeatureSet compute_features(const Image& img, const FeatureConfig& fc, const GridConfig& gc,
                            const std::string& metric_kind) {
  img.validate();
  FeatureSet f;
  f.image = img;
  f.config = fc;
  f.grid = gc;
  const bool lifted = metric_kind == "orientation_lifted" || metric_kind == "elastica" || metric_kind == "data_driven";
  if (lifted) {
    if (fc.kind == "edge" && metric_kind != "elastica") {
      f.response = steerable_edge_response(img, fc.sigma, fc.order, gc.n_theta);
    } else if (fc.kind == "flux") {
      FluxResult flux = oriented_flux(img, fc.sigma, fc.radii, gc.n_theta);
      f.orientation = optimal_orientation(flux.g);
      f.vesselness = std::move(flux.vesselness);
      f.response = std::move(flux.g);
    }
    if (f.response && metric_kind != "elastica") f.speed = speed_function(*f.response, fc.eta, fc.p).phi;
  } else if (fc.kind == "flux") {
    FluxResult flux = oriented_flux(img, fc.sigma, fc.radii, 4);
    f.vesselness = std::move(flux.vesselness);
  } else if (fc.kind == "edge" || metric_kind == "anisotropic") {
    f.structure = color_structure_tensor(img, fc.sigma);
  }
  return f;
}

MetricField build_metric(const FeatureSet& f, const MetricConfig& mc) {
  const GridSpec2 g2 = f.image.grid(f.grid.spacing);
  const GridSpec3 g3{g2, f.grid.n_theta};
  const ElasticaParams ep{mc.lambda, mc.alpha};
  if (mc.kind == "elastica") return MetricField::elastica(g3, ep);
  if (mc.kind == "data_driven") {
    return f.speed.empty() ? MetricField::elastica(g3, ep) : MetricField::data_driven(g3, ep, f.speed);
  }
  if (mc.kind == "orientation_lifted") {
    return f.speed.empty() ? MetricField::orientation_lifted(g3, 1.0, mc.rho)
                           : MetricField::orientation_lifted(g3, f.speed, mc.rho);
  }
  if (mc.kind == "isotropic") {
    if (!f.vesselness.empty()) return MetricField::isotropic(g2, ir_cost(f.vesselness, f.config.beta1, 2 * f.config.eta, f.config.p));
    if (f.structure) return MetricField::isotropic(g2, ir_cost(f.structure->phi2, f.config.beta1, 2 * f.config.eta, f.config.p));
    return MetricField::isotropic(g2, 1.0);
  }
  if (mc.kind == "anisotropic") {
    require(f.structure.has_value(), "anisotropic metric needs structure-tensor features");
    return MetricField::anisotropic(g2, ar_tensors(*f.structure, ar_tau_for_ratio(*f.structure, f.config.ar_ratio)));
  }
  fail(ErrorKind::InvalidArgument, "unknown metric kind " + mc.kind);
}

RunOutput run_application(const FeatureSet& f, const RunConfig& c, const std::vector<SeedPoint>& seeds) {
  const std::string& mode = c.application.mode;
  const auto problems = seed_problems(seeds, mode, f.image.width, f.image.height);
  if (!problems.empty()) fail(ErrorKind::InvalidArgument, problems.front());
  require(f.config == c.feature && f.grid == c.grid, "feature set was computed with different parameters");

  const MetricField m = build_metric(f, c.metric);
  ApplicationOptions options;
  options.policy = c.stencil;
  options.stencils = std::make_shared<const StencilSet>(m, c.stencil);

  RunOutput out;
  Json& r = out.result;
  r["mode"] = mode;
  r["metric"] = {{"kind", c.metric.kind}, {"lambda", c.metric.lambda}, {"alpha", c.metric.alpha}};
  r["seeds"] = seeds_to_json(seeds);
  add_seed_glyphs(out, seeds);
  std::size_t color = 0;

  if (mode == "contour") {
    const ContourResult res = detect_closed_contour(oriented(seeds), m, options);
    r["solves"] = res.solves;
    r.update(contour_json(res));
    add_contour_overlay(out, res, color, "");
  } else if (mode == "group") {
    const GroupingResult res = perceptual_grouping(oriented(seeds), m, c.application.n_max, options);
    Json groups = Json::array();
    for (std::size_t g = 0; g < res.groups.size(); ++g) {
      Json gj = contour_json(res.groups[g]);
      Json members = Json::array();
      for (const auto& v : res.groups[g].vertices) members.push_back(v.seed);
      gj["seeds"] = members;
      groups.push_back(std::move(gj));
      add_contour_overlay(out, res.groups[g], color, "group" + std::to_string(g) + "_");
    }
    r["n_max"] = c.application.n_max;
    r["solves"] = res.groups.empty() ? 0 : res.groups.back().solves;
    r["groups"] = std::move(groups);
    r["unused"] = res.unused;
  } else if (mode == "tubular") {
    std::vector<TubularPoint> ends;
    for (std::size_t i = 1; i < seeds.size(); ++i) ends.push_back({seeds[i].x, seeds[i].y, seeds[i].theta});
    std::vector<double> orientation = f.orientation;
    if (orientation.empty()) orientation.assign(f.image.pixels(), 0.0);
    const TubularResult res =
        extract_tubular({seeds[0].x, seeds[0].y, seeds[0].theta}, ends, orientation, m, options);
    Json lines = Json::array();
    for (const auto& cl : res.centerlines) {
      lines.push_back({{"end", cl.end},
                       {"ok", cl.ok},
                       {"error", cl.ok ? Json(nullptr) : Json(cl.error)},
                       {"action", cl.action},
                       {"energy", cl.energy},
                       {"source_lift", cl.ok ? point_json(cl.source_lift) : Json(nullptr)},
                       {"end_lift", cl.ok ? point_json(cl.end_lift) : Json(nullptr)},
                       {"points", path_points(cl.path)}});
      if (cl.ok) {
        out.overlay.paths.push_back({cl.path, palette_color(color++)});
        out.paths.emplace_back("centerline" + std::to_string(cl.end), cl.path);
      }
    }
    r["source"] = point_json(res.source);
    r["solves"] = res.solves;
    r["centerlines"] = std::move(lines);
  } else if (mode == "trace") {
    const LiftedPoint source = lift_seed(seeds[0], m);
    const LiftedPoint target = lift_seed(seeds[1], m);
    FastMarchOptions fo;
    fo.policy = c.stencil;
    fo.stencils = options.stencils;
    fo.stops = StopCriteria::all({target});
    const SolveResult solved = fast_march(m, {source}, fo);
    TraceOptions to;
    to.stencils = options.stencils;
    const LiftedPath path = trace_geodesic(solved.map, m, target, {source}, to);
    const double energy = path.points.size() > 1 ? path_energy(path, m).value : 0.0;
    const Json meta = {{"action", solved.map.value(m.lattice().nearest(target))},
                       {"source", point_json(source)},
                       {"target", point_json(target)}};
    r.update(path_json(path, energy, meta));
    out.overlay.paths.push_back({path, palette_color(0)});
    out.paths.emplace_back("path", path);
  } else if (mode == "solve") {
    std::vector<LiftedPoint> sources;
    for (const auto& s : seeds) sources.push_back(lift_seed(s, m));
    FastMarchOptions fo;
    fo.policy = c.stencil;
    fo.stencils = options.stencils;
    const SolveResult solved = fast_march(m, sources, fo);
    const Lattice& l = m.lattice();
    Volume v;
    v.width = l.nx();
    v.height = l.ny();
    v.n_theta = l.nt();
    v.spacing = l.spacing();
    v.data = solved.map.values;
    v.meta = {{"quantity", "action"}, {"metric", c.metric.kind}};
    out.volume = std::move(v);
    double vmax = 0.0;
    for (double x : solved.map.values)
      if (std::isfinite(x)) vmax = std::max(vmax, x);
    r["stats"] = {{"accepted", solved.stats.accepted_count},
                  {"hopf_lax_updates", solved.stats.hopf_lax_update_count},
                  {"mean_updates_per_node", solved.stats.mean_updates_per_node},
                  {"stencil_bytes", solved.stats.stencil_bytes},
                  {"max_action", vmax}};
    r["shape"] = {l.nt(), l.ny(), l.nx()};
  }
  return out;
}

std::vector<std::pair<std::string, Volume>> feature_volumes(const FeatureSet& f) {
  std::vector<std::pair<std::string, Volume>> out;
  const int w = f.image.width, h = f.image.height;
  auto make = [&](std::vector<double> data, int nt, const char* quantity) {
    Volume v;
    v.width = w;
    v.height = h;
    v.n_theta = nt;
    v.spacing = f.grid.spacing;
    v.data = std::move(data);
    v.meta = {{"quantity", quantity}, {"feature", f.config.kind}};
    return v;
  };
  if (f.response) out.emplace_back("response", make(f.response->samples, f.grid.n_theta, to_string(f.response->kind)));
  if (!f.speed.empty()) out.emplace_back("speed", make(f.speed, f.grid.n_theta, "speed"));
  if (!f.orientation.empty()) out.emplace_back("orientation", make(f.orientation, 1, "orientation"));
  if (!f.vesselness.empty()) out.emplace_back("vesselness", make(f.vesselness, 1, "vesselness"));
  if (f.structure) {
    out.emplace_back("phi1", make(f.structure->phi1, 1, "phi1"));
    out.emplace_back("phi2", make(f.structure->phi2, 1, "phi2"));
  }
  return out;
}

Json bench_json(const std::vector<double>& lambdas, const GridSpec3& grid, double alpha, const StencilPolicy& policy,
                bool include_timing) {
  const auto rows = update_count_trend(lambdas, grid, alpha, policy);
  Json table = Json::array();
  for (const auto& row : rows) {
    Json j = {{"lambda", row.lambda},
              {"accepted", row.stats.accepted_count},
              {"hopf_lax_updates", row.stats.hopf_lax_update_count},
              {"mean_updates_per_node", row.stats.mean_updates_per_node},
              {"stencil_bytes", row.stats.stencil_bytes}};
    if (include_timing) j["wall_time"] = row.stats.wall_time;
    table.push_back(std::move(j));
  }
  bool nondecreasing = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    nondecreasing = nondecreasing && rows[i].stats.mean_updates_per_node >= rows[i - 1].stats.mean_updates_per_node;
  return {{"grid", {grid.base.width, grid.base.height, grid.n_theta}},
          {"alpha", alpha},
          {"rows", table},
          {"nondecreasing", nondecreasing},
          {"sublinear", trend_is_sublinear(rows)}};
}

}  // namespace elastica
