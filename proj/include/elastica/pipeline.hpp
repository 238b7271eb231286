#pragma once

// Configuration-driven pipeline shared by the command-line tool, the HTTP
// service and the Python module: image -> features -> metric -> solve -> JSON.

#include "elastica/applications.hpp"
#include "elastica/features.hpp"
#include "elastica/io.hpp"
#include "elastica/metrics.hpp"

#include <optional>
#include <string>
#include <vector>

namespace elastica {

struct FeatureConfig {
  std::string kind = "edge";  ///< edge | flux | none
  double sigma = 1.5;
  int order = 5;              ///< steerable template order (1, 3, 5)
  std::vector<double> radii{1, 2, 3, 4};
  double eta = 10.0;
  double p = 2.0;
  double beta1 = 1.0;         ///< isotropic cost offset
  double ar_ratio = 20.0;     ///< eigenvalue ratio of the anisotropic tensors

  bool operator==(const FeatureConfig&) const = default;
};

struct MetricConfig {
  std::string kind = "data_driven";  ///< isotropic | anisotropic | orientation_lifted | elastica | data_driven
  double lambda = 100.0;
  double alpha = 1.0;
  double rho = 1.0;                  ///< orientation_lifted angular weight

  bool lifted() const { return kind == "orientation_lifted" || kind == "elastica" || kind == "data_driven"; }
};

struct GridConfig {
  int n_theta = 72;
  double spacing = 1.0;

  bool operator==(const GridConfig&) const = default;
};

struct ApplicationConfig {
  std::string mode = "contour";  ///< contour | group | tubular | trace | solve
  std::size_t n_max = 1;
};

struct OutputConfig {
  std::string json;     ///< result JSON file; empty = stdout
  std::string overlay;  ///< overlay PNG
  std::string csv;      ///< per-path CSV prefix
  std::string volume;   ///< raw volume prefix (solve, features)
};

/// Seed as read from a seed file; theta is optional for tubular runs.
struct SeedPoint {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> theta;
};

struct RunConfig {
  std::string image;  ///< path, resolved against the config file directory
  std::string seeds;  ///< seed file path (optional when seeds are inline)
  std::vector<SeedPoint> inline_seeds;
  bool has_inline_seeds = false;
  FeatureConfig feature;
  MetricConfig metric;
  GridConfig grid;
  StencilPolicy stencil;
  ApplicationConfig application;
  OutputConfig output;
  Json params_applied = Json::object();
};

/// Parses and validates a config document. Relative paths are resolved against
/// `base_dir`. Unknown keys are rejected so typos do not pass silently.
RunConfig parse_config(const Json& j, const std::string& base_dir = "");
RunConfig load_config(const std::string& path);
Json config_to_json(const RunConfig& c);

/// Applies {metric, feature, grid, stencil, application} override blocks.
void apply_params(RunConfig& c, const Json& params);

struct SeedFile {
  std::vector<SeedPoint> points;
  Json params = Json::object();
};
/// {points: [{x, y, theta?|null}], params: {...}}.
SeedFile parse_seed_file(const Json& j);
Json seed_file_json(const SeedFile& s);

/// Per-field validation messages, empty when the seeds suit the mode and image.
std::vector<std::string> seed_problems(const std::vector<SeedPoint>& seeds, const std::string& mode, int width,
                                       int height);

/// Feature volumes of one image; immutable once computed.
struct FeatureSet {
  Image image;
  FeatureConfig config;
  GridConfig grid;
  std::optional<OrientedResponse> response;  ///< edge h or flux g
  std::vector<double> orientation;           ///< per-pixel Theta (flux only)
  std::vector<double> speed;                 ///< phi over the lifted grid
  std::vector<double> vesselness;            ///< flux only
  std::optional<StructureTensor> structure;  ///< planar metrics only
};

/// Computes what `metric_kind` needs from the image.
FeatureSet compute_features(const Image& img, const FeatureConfig& fc, const GridConfig& gc,
                            const std::string& metric_kind);
MetricField build_metric(const FeatureSet& f, const MetricConfig& mc);

struct RunOutput {
  Json result;
  OverlaySpec overlay;
  std::vector<std::pair<std::string, LiftedPath>> paths;  ///< named, for CSV export
  std::optional<Volume> volume;                           ///< solve mode
};

/// Runs the configured application on prepared features.
RunOutput run_application(const FeatureSet& f, const RunConfig& c, const std::vector<SeedPoint>& seeds);

/// Feature volumes (response, speed, orientation) for export.
std::vector<std::pair<std::string, Volume>> feature_volumes(const FeatureSet& f);

/// Fast-marching statistics over lambda on a constant elastica metric.
Json bench_json(const std::vector<double>& lambdas, const GridSpec3& grid, double alpha, const StencilPolicy& policy,
                bool include_timing);

}  // namespace elastica
