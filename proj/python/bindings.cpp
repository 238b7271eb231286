#include "elastica/eikonal.hpp"
#include "elastica/error.hpp"
#include "elastica/features.hpp"
#include "elastica/io.hpp"
#include "elastica/metrics.hpp"
#include "elastica/pipeline.hpp"
#include "elastica/tracer.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace elastica;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 2 && !(a.ndim() == 3 && (a.shape(2) == 1 || a.shape(2) == 3))) {
    throw py::value_error("image must have shape (H, W) or (H, W, C) with C in {1, 3}");
  }
  Image img;
  img.height = static_cast<int>(a.shape(0));
  img.width = static_cast<int>(a.shape(1));
  img.channels = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  img.data.assign(a.data(), a.data() + a.size());
  img.validate();
  return img;
}

Array from_image(const Image& img) {
  std::vector<py::ssize_t> shape{img.height, img.width};
  if (img.channels == 3) shape.push_back(3);
  Array out(shape);
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

Array volume_array(const std::vector<double>& v, int nt, int h, int w) {
  Array out(std::vector<py::ssize_t>{nt, h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array plane_array(const std::vector<double>& v, int h, int w) {
  Array out(std::vector<py::ssize_t>{h, w});
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

Array path_array(const LiftedPath& p) {
  Array out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(p.points.size()), 3});
  auto m = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < p.points.size(); ++i) {
    m(i, 0) = p.points[i].x;
    m(i, 1) = p.points[i].y;
    m(i, 2) = p.points[i].theta;
  }
  return out;
}

std::vector<LiftedPoint> to_points(const std::vector<std::tuple<double, double, double>>& pts) {
  std::vector<LiftedPoint> out;
  for (const auto& [x, y, t] : pts) out.push_back(make_lifted_point(x, y, t));
  return out;
}

std::vector<double> to_volume(const Array& a, const MetricField& m) {
  if (static_cast<std::size_t>(a.size()) != m.lattice().size()) throw py::value_error("volume size does not match the grid");
  return {a.data(), a.data() + a.size()};
}

StencilPolicy policy(const std::string& mode, int cap) {
  StencilPolicy p;
  p.mode = stencil_mode_from_string(mode);
  p.radius_cap = cap;
  p.validate();
  return p;
}

py::dict stats_dict(const SolveStats& s) {
  py::dict d;
  d["accepted"] = s.accepted_count;
  d["hopf_lax_updates"] = s.hopf_lax_update_count;
  d["mean_updates_per_node"] = s.mean_updates_per_node;
  d["wall_time"] = s.wall_time;
  d["stencil_bytes"] = s.stencil_bytes;
  d["sweeps"] = s.sweeps;
  return d;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(dump_json(j, -1)); }

}  // namespace

PYBIND11_MODULE(_elastica, mod) {
  mod.doc() = "Curvature-penalized minimal paths on orientation-lifted grids";

  py::register_exception<Error>(mod, "ElasticaError", PyExc_RuntimeError);

  py::class_<MetricField>(mod, "Metric")
      .def_static(
          "elastica",
          [](int width, int height, int n_theta, double lambda, double alpha, double spacing) {
            return MetricField::elastica({{width, height, spacing}, n_theta}, {lambda, alpha});
          },
          py::arg("width"), py::arg("height"), py::arg("n_theta"), py::arg("lam") = 100.0, py::arg("alpha") = 1.0,
          py::arg("spacing") = 1.0)
      .def_static(
          "data_driven",
          [](const Array& speed, double lambda, double alpha, double spacing) {
            if (speed.ndim() != 3) throw py::value_error("speed must have shape (n_theta, H, W)");
            const GridSpec3 g{{static_cast<int>(speed.shape(2)), static_cast<int>(speed.shape(1)), spacing},
                              static_cast<int>(speed.shape(0))};
            return MetricField::data_driven(g, {lambda, alpha}, {speed.data(), speed.data() + speed.size()});
          },
          py::arg("speed"), py::arg("lam") = 100.0, py::arg("alpha") = 1.0, py::arg("spacing") = 1.0)
      .def_static(
          "isotropic",
          [](const Array& cost, double spacing) {
            if (cost.ndim() != 2) throw py::value_error("cost must have shape (H, W)");
            const GridSpec2 g{static_cast<int>(cost.shape(1)), static_cast<int>(cost.shape(0)), spacing};
            return MetricField::isotropic(g, std::vector<double>(cost.data(), cost.data() + cost.size()));
          },
          py::arg("cost"), py::arg("spacing") = 1.0)
      .def_property_readonly("shape",
                             [](const MetricField& m) {
                               return py::make_tuple(m.lattice().nt(), m.lattice().ny(), m.lattice().nx());
                             })
      .def_property_readonly("kind", [](const MetricField& m) { return std::string(to_string(m.kind())); })
      .def(
          "eval",
          [](const MetricField& m, std::tuple<double, double, double> x, std::tuple<double, double, double> u) {
            const auto [px, py_, pt] = x;
            const auto [ux, uy, nu] = u;
            return m.eval(make_lifted_point(px, py_, pt), LiftedVector{{ux, uy}, nu});
          },
          py::arg("x"), py::arg("u"));

  mod.def(
      "eval_elastica",
      [](double lambda, double alpha, std::tuple<double, double, double> x, std::tuple<double, double, double> u) {
        const auto [px, py_, pt] = x;
        const auto [ux, uy, nu] = u;
        return eval_elastica({lambda, alpha}, make_lifted_point(px, py_, pt), LiftedVector{{ux, uy}, nu});
      },
      py::arg("lam"), py::arg("alpha"), py::arg("x"), py::arg("u"), "F^lambda at x for the lifted vector u");

  mod.def(
      "fast_march",
      [](const MetricField& m, const std::vector<std::tuple<double, double, double>>& sources, const std::string& stencil,
         int radius_cap) {
        FastMarchOptions fo;
        fo.policy = policy(stencil, radius_cap);
        SolveResult r;
        {
          py::gil_scoped_release release;
          r = fast_march(m, to_points(sources), fo);
        }
        const Lattice& l = m.lattice();
        return py::make_tuple(volume_array(r.map.values, l.nt(), l.ny(), l.nx()), stats_dict(r.stats));
      },
      py::arg("metric"), py::arg("sources"), py::arg("stencil") = "adaptive", py::arg("radius_cap") = 16,
      "Action map of shape (n_theta, H, W) and solver statistics");

  mod.def(
      "agsi_solve",
      [](const MetricField& m, const std::vector<std::tuple<double, double, double>>& sources, double tolerance) {
        AgsiOptions ao;
        ao.tolerance = tolerance;
        SolveResult r;
        {
          py::gil_scoped_release release;
          r = agsi_solve(m, to_points(sources), ao);
        }
        const Lattice& l = m.lattice();
        return py::make_tuple(volume_array(r.map.values, l.nt(), l.ny(), l.nx()), stats_dict(r.stats));
      },
      py::arg("metric"), py::arg("sources"), py::arg("tolerance") = 1e-9);

  mod.def(
      "trace",
      [](const MetricField& m, const Array& action, const std::vector<std::tuple<double, double, double>>& sources,
         std::tuple<double, double, double> target) {
        ActionMap u;
        u.lattice = m.lattice();
        u.values = to_volume(action, m);
        u.tags.assign(u.values.size(), NodeTag::Accepted);
        for (auto& v : u.values)
          if (!std::isfinite(v)) v = kInfinity;
        const auto src = to_points(sources);
        for (const auto& s : src) u.sources.push_back(m.lattice().nearest(s));
        const auto [tx, ty, tt] = target;
        const LiftedPath p = trace_geodesic(u, m, make_lifted_point(tx, ty, tt), src);
        const double e = p.points.size() > 1 ? path_energy(p, m).value : 0.0;
        return py::make_tuple(path_array(p), e);
      },
      py::arg("metric"), py::arg("action"), py::arg("sources"), py::arg("target"),
      "Geodesic points (N, 3) from a source to target and their metric energy");

  mod.def(
      "edge_response",
      [](const Array& image, double sigma, int order, int n_theta) {
        const OrientedResponse r = steerable_edge_response(to_image(image), sigma, order, n_theta);
        return volume_array(r.samples, n_theta, r.grid.base.height, r.grid.base.width);
      },
      py::arg("image"), py::arg("sigma") = 1.5, py::arg("order") = 5, py::arg("n_theta") = 72);

  mod.def(
      "oriented_flux",
      [](const Array& image, double sigma, const std::vector<double>& radii, int n_theta) {
        const Image img = to_image(image);
        const FluxResult f = oriented_flux(img, sigma, radii, n_theta);
        py::dict d;
        d["g"] = volume_array(f.g.samples, n_theta, img.height, img.width);
        d["vesselness"] = plane_array(f.vesselness, img.height, img.width);
        d["radius"] = plane_array(f.optimal_radius, img.height, img.width);
        d["orientation"] = plane_array(optimal_orientation(f.g), img.height, img.width);
        return d;
      },
      py::arg("image"), py::arg("sigma") = 1.0, py::arg("radii") = std::vector<double>{1, 2, 3, 4},
      py::arg("n_theta") = 72);

  mod.def(
      "speed_function",
      [](const Array& response, double eta, double p) {
        if (response.ndim() != 3) throw py::value_error("response must have shape (n_theta, H, W)");
        OrientedResponse r;
        r.grid = {{static_cast<int>(response.shape(2)), static_cast<int>(response.shape(1)), 1.0},
                  static_cast<int>(response.shape(0))};
        r.samples.assign(response.data(), response.data() + response.size());
        const SpeedField s = speed_function(r, eta, p);
        return volume_array(s.phi, r.grid.n_theta, r.grid.base.height, r.grid.base.width);
      },
      py::arg("response"), py::arg("eta") = 10.0, py::arg("p") = 2.0);

  mod.def(
      "read_image", [](const std::string& path) { return from_image(read_image(path)); }, py::arg("path"));
  mod.def(
      "write_png", [](const std::string& path, const Array& image) { write_png(path, to_image(image)); },
      py::arg("path"), py::arg("image"));

  mod.def(
      "run",
      [](const std::string& config, const Array& image, const std::string& seeds) {
        RunConfig c = parse_config(Json::parse(config));
        const SeedFile sf = parse_seed_file(Json::parse(seeds));
        apply_params(c, sf.params);
        const Image img = to_image(image);
        std::string text;
        {
          py::gil_scoped_release release;
          const FeatureSet f = compute_features(img, c.feature, c.grid, c.metric.kind);
          text = dump_json(run_application(f, c, sf.points).result) + "\n";
        }
        return text;
      },
      py::arg("config"), py::arg("image"), py::arg("seeds"),
      "Runs the configured application and returns the serialized result JSON");

  mod.def(
      "bench",
      [](const std::vector<double>& lambdas, int width, int height, int n_theta, double alpha) {
        Json j;
        {
          py::gil_scoped_release release;
          j = bench_json(lambdas, {{width, height, 1.0}, n_theta}, alpha, {}, true);
        }
        return json_to_py(j);
      },
      py::arg("lambdas"), py::arg("width") = 32, py::arg("height") = 32, py::arg("n_theta") = 36,
      py::arg("alpha") = 1.0);
}
