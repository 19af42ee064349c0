#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "surfipp/experiment.hpp"

namespace py = pybind11;
using namespace surfipp;

namespace {

CliOverrides overrides(std::optional<std::filesystem::path> out, std::optional<std::uint64_t> seed,
                       std::optional<int> trials, std::optional<int> parallel) {
  CliOverrides o;
  o.out = std::move(out);
  o.seed = seed;
  o.trials = trials;
  o.parallel = parallel;
  return o;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Informative path planning on triangle-mesh surfaces";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<SurfaceMesh>(m, "SurfaceMesh")
      .def(py::init([](std::vector<Vec3> v, std::vector<SurfaceMesh::Facet> f) {
             return SurfaceMesh(std::move(v), std::move(f));
           }),
           py::arg("vertices"), py::arg("facets"))
      .def_property_readonly("num_facets", &SurfaceMesh::num_facets)
      .def_property_readonly("centers", [](const SurfaceMesh& s) {
        Eigen::MatrixXd c(static_cast<Eigen::Index>(s.num_facets()), 3);
        for (std::size_t i = 0; i < s.num_facets(); ++i) c.row(static_cast<Eigen::Index>(i)) = s.centers()[i];
        return c;
      })
      .def_property_readonly("normals", [](const SurfaceMesh& s) {
        Eigen::MatrixXd c(static_cast<Eigen::Index>(s.num_facets()), 3);
        for (std::size_t i = 0; i < s.num_facets(); ++i) c.row(static_cast<Eigen::Index>(i)) = s.normals()[i];
        return c;
      });

  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("save_obj", &save_obj, py::arg("mesh"), py::arg("path"));
  m.def("generate_cylinder_tank", &generate_cylinder_tank, py::arg("radius"), py::arg("height"),
        py::arg("dome_height"), py::arg("target_facets"));
  m.def("generate_airplane", [] { return generate_airplane(AirplaneShape{}); });
  m.def("geodesic_distances", [](const SurfaceMesh& s) { return compute_geodesics(s).dist; },
        py::arg("mesh"));

  py::class_<KernelParams>(m, "KernelParams")
      .def(py::init<>())
      .def_readwrite("sigma_f", &KernelParams::sigma_f)
      .def_readwrite("length_scale", &KernelParams::length_scale)
      .def_readwrite("jitter", &KernelParams::jitter);
  m.def("matern32", &matern32_geodesic, py::arg("d"), py::arg("params"));
  m.def("prior_covariance",
        [](const Eigen::MatrixXd& dist, const KernelParams& p) { return prior_covariance(GeodesicField{dist}, p); },
        py::arg("geodesics"), py::arg("params"));

  py::class_<FieldMap>(m, "FieldMap")
      .def(py::init([](Eigen::VectorXd mean, Eigen::MatrixXd cov) { return FieldMap{std::move(mean), std::move(cov)}; }),
           py::arg("mean"), py::arg("cov"))
      .def_readwrite("mean", &FieldMap::mean)
      .def_readwrite("cov", &FieldMap::cov)
      .def_property_readonly("trace", &trace_cov);
  m.def("fuse",
        [](const FieldMap& map, std::vector<int> facets, Eigen::VectorXd values, Eigen::VectorXd noise_vars) {
          return fuse(map, ObservationBatch{std::move(facets), std::move(values), std::move(noise_vars)});
        },
        py::arg("map"), py::arg("facets"), py::arg("values"), py::arg("noise_vars"));

  py::class_<MissionEvent>(m, "MissionEvent")
      .def_readonly("time", &MissionEvent::time)
      .def_readonly("trace", &MissionEvent::trace)
      .def_readonly("rmse", &MissionEvent::rmse)
      .def_readonly("observed", &MissionEvent::observed);
  py::class_<MissionLog>(m, "MissionLog")
      .def_readonly("events", &MissionLog::events)
      .def_readonly("elapsed", &MissionLog::elapsed)
      .def_readonly("collision_samples", &MissionLog::collision_samples);
  py::class_<Scenario>(m, "Scenario")
      .def_property_readonly("num_facets", [](const Scenario& s) { return s.mesh->num_facets(); })
      .def_property_readonly("library_size", [](const Scenario& s) { return s.library->size(); })
      .def_property_readonly("budget", [](const Scenario& s) { return s.planner.budget; })
      .def_property_readonly("prior_cov", [](const Scenario& s) { return *s.prior_cov; });
  m.def("load_scenario", [](const std::filesystem::path& p) { return build_scenario(load_config(p)); },
        py::arg("config"));
  m.def("run_mission",
        [](const Scenario& s, const std::string& kind, std::uint64_t seed) {
          py::gil_scoped_release release;
          return run_mission(s, parse_planner_kind(kind), seed);
        },
        py::arg("scenario"), py::arg("kind") = "ipp", py::arg("seed") = 1);

  auto command = [&](const char* name, void (*fn)(const std::filesystem::path&, const CliOverrides&)) {
    m.def(name,
          [fn](const std::filesystem::path& config, std::optional<std::filesystem::path> out,
               std::optional<std::uint64_t> seed, std::optional<int> trials, std::optional<int> parallel) {
            const CliOverrides o = overrides(std::move(out), seed, trials, parallel);
            py::gil_scoped_release release;
            fn(config, o);
          },
          py::arg("config"), py::arg("out") = py::none(), py::arg("seed") = py::none(),
          py::arg("trials") = py::none(), py::arg("parallel") = py::none());
  };
  command("run", &cmd_run);
  command("compare", &cmd_compare);
  command("ablate", &cmd_ablate);
  m.def("plot", &cmd_plot, py::arg("results_dir"));
}
