#include "surfipp/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "surfipp/log.hpp"

namespace surfipp {

namespace {

// YAML mapping that tracks read keys; leftovers are unknown keys.
class Section {
 public:
  Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(name() + " must be a mapping");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return;
    const YAML::Node v = node_[key];
    if (!v || v.IsNull()) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(field(key) + ": cannot parse value '" + scalar(v) + "'");
    }
  }

  void get_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    std::filesystem::path p(s);
    out = p.is_absolute() || base.empty() ? p : (base / p).lexically_normal();
  }

  YAML::Node raw(const char* key) {
    seen_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node();
    return node_[key];
  }

  Section child(const char* key) { return Section(raw(key), field(key)); }

  void finish() const {
    if (!node_ || node_.IsNull()) return;
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) throw ConfigError(field(key.c_str()) + ": unknown key");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string name() const { return path_.empty() ? "config" : path_; }
  static std::string scalar(const YAML::Node& v) { return v.IsScalar() ? v.Scalar() : "<non-scalar>"; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

void ScenarioConfig::validate() const {
  if (mesh.kind != "cylinder" && mesh.kind != "airplane" && mesh.kind != "file") {
    throw ConfigError("mesh.kind must be cylinder, airplane or file");
  }
  if (mesh.kind == "file" && mesh.path.empty()) throw ConfigError("mesh.path is required for kind 'file'");
  kernel.validate();
  camera.validate();
  dynamics.validate();
  if (!(voxel > 0)) throw ConfigError("world.voxel must be > 0");
  if (margin >= 0 && margin < camera.d_max) throw ConfigError("world.margin must be >= camera.d_max");
  planner.validate();
  library.validate(camera);
  ground_truth.validate();
  parse_planner_kind(method);
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
  if (ablation_priors.empty()) throw ConfigError("ablation.priors must not be empty");
  for (const auto& p : ablation_priors) {
    if (p != "mgp" && p != "identity" && p != "random_spd") {
      throw ConfigError("ablation.priors: unknown prior '" + p + "'");
    }
  }
  if (report.grid_points < 2) throw ConfigError("report.grid_points must be >= 2");
  if (!(report.trajectory_rate > 0)) throw ConfigError("report.trajectory_rate must be > 0");
}

ScenarioConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  ScenarioConfig c;
  Section top(root, "");

  {
    Section m = top.child("mesh");
    m.get("kind", c.mesh.kind);
    m.get("radius", c.mesh.radius);
    m.get("height", c.mesh.height);
    m.get("dome_height", c.mesh.dome_height);
    m.get("target_facets", c.mesh.target_facets);
    m.get_path("path", c.mesh.path, base_dir);
    Section a = m.child("airplane");
    auto& s = c.mesh.airplane;
    a.get("fuselage_length", s.fuselage_length);
    a.get("fuselage_radius", s.fuselage_radius);
    a.get("fuselage_sides", s.fuselage_sides);
    a.get("fuselage_segments", s.fuselage_segments);
    a.get("wing_root_start", s.wing_root_start);
    a.get("wing_chord_segments", s.wing_chord_segments);
    a.get("wing_span", s.wing_span);
    a.get("wing_span_segments", s.wing_span_segments);
    a.finish();
    m.get_path("geodesic_cache", c.geodesic_cache, base_dir);
    m.finish();
  }
  {
    Section k = top.child("kernel");
    k.get("sigma_f", c.kernel.sigma_f);
    k.get("length_scale", c.kernel.length_scale);
    k.get("jitter", c.kernel.jitter);
    k.get("prior_mean", c.prior_mean);
    k.finish();
  }
  {
    Section s = top.child("camera");
    auto& cam = c.camera;
    s.get("fov_h", cam.fov_h);
    s.get("fov_v", cam.fov_v);
    s.get("d_min", cam.d_min);
    s.get("d_max", cam.d_max);
    s.get("alpha_max", cam.alpha_max);
    s.get("pitch", cam.pitch);
    s.get("noise_a", cam.noise_a);
    s.get("noise_b", cam.noise_b);
    s.get("occlusion_check", cam.occlusion_check);
    s.get("occlusion_offset", cam.occlusion_offset);
    s.get("occlusion_clearance", cam.occlusion_clearance);
    s.get("occlusion_step", cam.occlusion_step);
    s.finish();
  }
  {
    Section d = top.child("dynamics");
    d.get("v_max", c.dynamics.v_max);
    d.get("a_max", c.dynamics.a_max);
    double yaw_deg = c.dynamics.yaw_rate_max / kDeg;
    d.get("yaw_rate_max_deg", yaw_deg);
    c.dynamics.yaw_rate_max = yaw_deg * kDeg;
    d.get("uav_radius", c.dynamics.uav_radius);
    d.finish();
  }
  {
    Section w = top.child("world");
    w.get("voxel", c.voxel);
    w.get("margin", c.margin);
    w.get("max_voxels", c.max_voxels);
    w.finish();
  }
  {
    Section p = top.child("planner");
    auto& pc = c.planner;
    p.get("N", pc.N);
    p.get("order", pc.order);
    p.get("duration_safety", pc.duration_safety);
    p.get("w_coll", pc.w_coll);
    p.get("budget", pc.budget);
    p.get("measurement_freq", pc.measurement_freq);
    p.get("los_margin", pc.los_margin);
    p.get("sample_step", pc.sample_step);
    p.get("start_index", pc.start_index);
    Section cma = p.child("cma");
    cma.get("lambda", pc.cma.lambda);
    cma.get("max_iterations", pc.cma.max_iterations);
    cma.get("sigma0_fraction", pc.cma.sigma0_fraction);
    cma.finish();
    p.finish();
  }
  {
    Section l = top.child("library");
    auto& lp = c.library;
    l.get("mode", lp.mode);
    l.get("d_view", lp.d_view);
    l.get("rings", lp.rings);
    l.get("levels", lp.levels);
    l.get("shell_count", lp.shell_count);
    l.get("shell_tolerance", lp.shell_tolerance);
    l.get("shell_min_spacing", lp.shell_min_spacing);
    l.get("shell_max_attempts", lp.shell_max_attempts);
    l.get("shell_seed", lp.shell_seed);
    l.get("yaw_bins", lp.yaw_bins);
    l.get("yaw_grid_spacing", lp.yaw_grid_spacing);
    l.finish();
  }
  {
    Section g = top.child("ground_truth");
    auto& gt = c.ground_truth;
    g.get("ambient", gt.ambient);
    g.get("random_sources", gt.random_sources);
    g.get("amplitude_min", gt.amplitude_min);
    g.get("amplitude_max", gt.amplitude_max);
    g.get("random_sign", gt.random_sign);
    g.get("width_min", gt.width_min);
    g.get("width_max", gt.width_max);
    g.get_path("field_csv", c.ground_truth_csv, base_dir);
    const YAML::Node src = g.raw("sources");
    if (src && !src.IsNull()) {
      if (!src.IsSequence()) throw ConfigError("ground_truth.sources must be a list");
      for (std::size_t i = 0; i < src.size(); ++i) {
        Section s(src[i], "ground_truth.sources[" + std::to_string(i) + "]");
        HeatSource h;
        s.get("facet", h.facet);
        s.get("amplitude", h.amplitude);
        s.get("width", h.width);
        s.finish();
        gt.sources.push_back(h);
      }
    }
    g.finish();
  }
  {
    Section e = top.child("experiment");
    e.get("method", c.method);
    e.get("trials", c.trials);
    e.get("seed", c.seed);
    e.get("parallel", c.parallel);
    e.get_path("output", c.output, base_dir);
    const YAML::Node pri = e.raw("ablation_priors");
    if (pri && !pri.IsNull()) {
      try {
        c.ablation_priors = pri.as<std::vector<std::string>>();
      } catch (const YAML::Exception&) {
        throw ConfigError("experiment.ablation_priors must be a list of names");
      }
    }
    e.finish();
  }
  {
    Section r = top.child("report");
    r.get("grid_points", c.report.grid_points);
    r.get("trajectory_rate", c.report.trajectory_rate);
    r.finish();
  }
  top.finish();
  c.validate();
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  std::shared_ptr<SurfaceMesh> mesh;
  if (cfg.mesh.kind == "cylinder") {
    mesh = std::make_shared<SurfaceMesh>(generate_cylinder_tank(
        cfg.mesh.radius, cfg.mesh.height, cfg.mesh.dome_height, cfg.mesh.target_facets));
  } else if (cfg.mesh.kind == "airplane") {
    mesh = std::make_shared<SurfaceMesh>(generate_airplane(cfg.mesh.airplane));
  } else {
    mesh = std::make_shared<SurfaceMesh>(load_mesh(cfg.mesh.path));
  }
  log().info("mesh: {} facets", mesh->num_facets());

  Scenario s;
  s.mesh = mesh;
  s.geo = std::make_shared<const GeodesicField>(
      cfg.geodesic_cache.empty() ? compute_geodesics(*mesh)
                                 : compute_geodesics_cached(*mesh, cfg.geodesic_cache));
  const double margin = cfg.margin >= 0 ? cfg.margin : cfg.camera.d_max + 2.0;
  s.world = std::make_shared<const WorldModel>(build_world(*mesh, cfg.voxel, margin, cfg.max_voxels));
  s.kernel = cfg.kernel;
  s.prior_mean = cfg.prior_mean;
  s.cam = cfg.camera;
  s.lim = cfg.dynamics;
  s.planner = cfg.planner;
  s.library_params = cfg.library;
  s.truth = cfg.ground_truth;
  if (!cfg.ground_truth_csv.empty()) {
    s.fixed_truth = std::make_shared<const GroundTruthField>(
        read_field_csv(cfg.ground_truth_csv, mesh->num_facets()));
  }
  finalize_scenario(s);
  log().info("library: {} viewpoints, coverage sweep of {}", s.library->size(),
             s.coverage->order.size());
  return s;
}

}  // namespace surfipp
