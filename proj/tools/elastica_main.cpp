// Command-line front end: features | solve | trace | contour | group | tubular | bench | serve.

#include "elastica/error.hpp"
#include "elastica/io.hpp"
#include "elastica/parallel.hpp"
#include "elastica/pipeline.hpp"
#include "elastica/service.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

using namespace elastica;

namespace {

struct Overrides {
  std::string config, image, seeds, out, overlay, csv, volume;
  std::optional<double> lambda, alpha;
  std::optional<int> n_theta;
  std::optional<std::size_t> n_max;
  std::optional<std::string> metric, feature, stencil;
};

void add_common(CLI::App* cmd, Overrides& o, bool seeds) {
  cmd->add_option("-c,--config", o.config, "Run configuration JSON")->check(CLI::ExistingFile);
  cmd->add_option("-i,--image", o.image, "Input image (PNG or binary PNM)");
  if (seeds) cmd->add_option("-s,--seeds", o.seeds, "Seed file JSON {points: [{x, y, theta}], params}");
  cmd->add_option("-o,--out", o.out, "Result JSON path (default: stdout)");
  cmd->add_option("--overlay", o.overlay, "Overlay PNG path");
  cmd->add_option("--csv", o.csv, "CSV path prefix, one file per path");
  cmd->add_option("--volume", o.volume, "Raw volume path prefix");
  cmd->add_option("--lambda", o.lambda, "Curvature anisotropy lambda >= 1");
  cmd->add_option("--alpha", o.alpha, "Bending weight alpha > 0");
  cmd->add_option("--n-theta", o.n_theta, "Number of orientations");
  cmd->add_option("--n-max", o.n_max, "Maximum number of groups");
  cmd->add_option("--metric", o.metric, "isotropic|anisotropic|orientation_lifted|elastica|data_driven");
  cmd->add_option("--feature", o.feature, "edge|flux|none");
  cmd->add_option("--stencil", o.stencil, "adaptive|cube");
}

RunConfig build_config(const Overrides& o, const std::string& mode) {
  Json j = Json::object();
  std::string base;
  if (!o.config.empty()) {
    try {
      j = Json::parse(read_file(o.config));
    } catch (const Json::exception& e) {
      fail(ErrorKind::InvalidArgument, o.config + ": " + e.what());
    }
    base = std::filesystem::path(o.config).parent_path().string();
  }
  if (!j.is_object()) fail(ErrorKind::InvalidArgument, "config must be a JSON object");
  RunConfig c = parse_config(j, base);
  if (!o.seeds.empty()) {
    c.seeds = o.seeds;
    c.has_inline_seeds = false;
  }
  // Seed-file params sit between the config file and command-line flags.
  if (!c.seeds.empty() && !c.has_inline_seeds) {
    Json sj;
    try {
      sj = Json::parse(read_file(c.seeds));
    } catch (const Json::exception& e) {
      fail(ErrorKind::InvalidArgument, c.seeds + ": " + e.what());
    }
    SeedFile sf = parse_seed_file(sj);
    c.inline_seeds = std::move(sf.points);
    c.has_inline_seeds = true;
    apply_params(c, sf.params);
  }
  Json params = Json::object();
  if (o.lambda) params["metric"]["lambda"] = *o.lambda;
  if (o.alpha) params["metric"]["alpha"] = *o.alpha;
  if (o.metric) params["metric"]["kind"] = *o.metric;
  if (o.feature) params["feature"]["kind"] = *o.feature;
  if (o.n_theta) params["grid"]["n_theta"] = *o.n_theta;
  if (o.stencil) params["stencil"]["mode"] = *o.stencil;
  if (o.n_max) params["application"]["n_max"] = *o.n_max;
  params["application"]["mode"] = mode;
  apply_params(c, params);
  if (!o.image.empty()) c.image = o.image;
  if (!o.out.empty()) c.output.json = o.out;
  if (!o.overlay.empty()) c.output.overlay = o.overlay;
  if (!o.csv.empty()) c.output.csv = o.csv;
  if (!o.volume.empty()) c.output.volume = o.volume;
  if (c.image.empty()) fail(ErrorKind::InvalidArgument, "no input image (use --image or the config 'image' key)");
  return c;
}

void emit(const RunConfig& c, const Json& result) {
  const std::string text = dump_json(result) + "\n";
  if (c.output.json.empty()) {
    std::cout << text;
  } else {
    write_file(c.output.json, text);
  }
}

int run_mode(const Overrides& o, const std::string& mode) {
  RunConfig c = build_config(o, mode);
  if (c.inline_seeds.empty() && !c.has_inline_seeds) {
    fail(ErrorKind::InvalidArgument, "no seeds (use --seeds or the config 'seeds' key)");
  }
  const std::vector<SeedPoint>& seeds = c.inline_seeds;
  const Image img = read_image(c.image);
  const FeatureSet f = compute_features(img, c.feature, c.grid, c.metric.kind);
  const RunOutput out = run_application(f, c, seeds);
  if (!c.output.overlay.empty()) write_png(c.output.overlay, render_overlay(img, out.overlay));
  if (!c.output.csv.empty()) {
    for (const auto& [name, path] : out.paths) write_file(c.output.csv + "_" + name + ".csv", path_csv(path));
  }
  if (out.volume && !c.output.volume.empty()) write_volume(c.output.volume + "_action.raw", *out.volume);
  emit(c, out.result);
  return 0;
}

int run_features(const Overrides& o) {
  RunConfig c = build_config(o, "solve");
  const Image img = read_image(c.image);
  const FeatureSet f = compute_features(img, c.feature, c.grid, c.metric.kind);
  Json files = Json::array();
  for (const auto& [name, v] : feature_volumes(f)) {
    Json entry = {{"name", name}, {"shape", {v.n_theta, v.height, v.width}}};
    if (!c.output.volume.empty()) {
      const std::string path = c.output.volume + "_" + name + ".raw";
      write_volume(path, v);
      entry["path"] = path;
    }
    double lo = kInfinity, hi = -kInfinity;
    for (double x : v.data) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    entry["min"] = lo;
    entry["max"] = hi;
    files.push_back(std::move(entry));
  }
  emit(c, {{"mode", "features"}, {"config", config_to_json(c)}, {"volumes", files}});
  return 0;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::InvalidArgument, "cannot parse number '" + item + "'");
    }
  }
  if (out.empty()) fail(ErrorKind::InvalidArgument, "empty list");
  return out;
}

GridSpec3 parse_grid(const std::string& s) {
  int w = 0, h = 0, t = 0;
  char x1 = 0, x2 = 0;
  std::stringstream ss(s);
  if (!(ss >> w >> x1 >> h >> x2 >> t) || x1 != 'x' || x2 != 'x' || w < 2 || h < 2 || t < 4) {
    fail(ErrorKind::InvalidArgument, "grid must look like 32x32x36");
  }
  return {{w, h, 1.0}, t};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature-penalized minimal paths: features, solves, contours, grouping and tubular centerlines.\n"
               "Set ELASTICA_THREADS to override the worker thread count."};
  app.require_subcommand(1);
  Overrides o;
  std::string lambdas = "1,10,100,1000", grid = "32x32x36", host = "127.0.0.1", bench_out;
  double bench_alpha = 1.0;
  bool timing = false;
  int port = 8080;
  std::size_t workers = 2;

  auto* features = app.add_subcommand("features", "Compute feature volumes (response, speed, orientation)");
  add_common(features, o, false);
  auto* solve = app.add_subcommand("solve", "Fast marching from the seeds; writes the action volume");
  add_common(solve, o, true);
  auto* trace = app.add_subcommand("trace", "Minimal path from the first seed to the second");
  add_common(trace, o, true);
  auto* contour = app.add_subcommand("contour", "Closed contour through all oriented seeds");
  add_common(contour, o, true);
  auto* group = app.add_subcommand("group", "Perceptual grouping of oriented seeds");
  add_common(group, o, true);
  auto* tubular = app.add_subcommand("tubular", "Centerlines from the first seed to the others");
  add_common(tubular, o, true);
  auto* bench = app.add_subcommand("bench", "Hopf-Lax update counts over lambda on a constant elastica metric");
  bench->add_option("--lambdas", lambdas, "Comma-separated lambdas")->capture_default_str();
  bench->add_option("--grid", grid, "WxHxN_theta")->capture_default_str();
  bench->add_option("--alpha", bench_alpha, "Bending weight")->capture_default_str();
  bench->add_option("-o,--out", bench_out, "Result JSON path (default: stdout)");
  bench->add_flag("--timing", timing, "Include wall-clock times (not reproducible)");
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str();
  serve->add_option("--workers", workers, "Computation worker threads")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cout << dump_json({{"error", {{"kind", "usage_error"}, {"message", e.what()}}}}) << "\n";
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*features) return run_features(o);
    for (const auto& [cmd, mode] : std::initializer_list<std::pair<CLI::App*, const char*>>{
             {solve, "solve"}, {trace, "trace"}, {contour, "contour"}, {group, "group"}, {tubular, "tubular"}}) {
      if (*cmd) return run_mode(o, mode);
    }
    if (*bench) {
      StencilPolicy policy;
      const Json j = bench_json(parse_list(lambdas), parse_grid(grid), bench_alpha, policy, timing);
      const std::string text = dump_json(j) + "\n";
      if (bench_out.empty()) {
        std::cout << text;
      } else {
        write_file(bench_out, text);
      }
      return 0;
    }
    if (*serve) {
      ServiceOptions so;
      so.workers = workers;
      SessionService service(so);
      std::cerr << "listening on " << host << ":" << port << " with " << worker_count() << " solver threads\n";
      if (!service.listen(host, port)) {
        fail(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cout << dump_json(error_json(e)) << "\n";
    return 1;
  }
  return 0;
}
