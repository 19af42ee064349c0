#include "surfipp/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>

#include <Eigen/Cholesky>

#include "surfipp/log.hpp"

namespace surfipp {

void LibraryParams::validate(const CameraModel& cam) const {
  if (mode != "lattice" && mode != "shell") {
    throw ConfigError("library.mode must be 'lattice' or 'shell'");
  }
  if (!(d_view > cam.d_min && d_view < cam.d_max)) {
    throw ConfigError("library.d_view must lie in (camera.d_min, camera.d_max)");
  }
  if (mode == "lattice") {
    if (rings < 1) throw ConfigError("library.rings must be >= 1");
    if (levels < 1) throw ConfigError("library.levels must be >= 1");
  } else {
    if (shell_count < 1) throw ConfigError("library.shell_count must be >= 1");
    if (!(shell_tolerance > 0)) throw ConfigError("library.shell_tolerance must be > 0");
    if (!(shell_min_spacing >= 0)) throw ConfigError("library.shell_min_spacing must be >= 0");
    if (shell_max_attempts < 1) throw ConfigError("library.shell_max_attempts must be >= 1");
  }
  if (yaw_bins < 4) throw ConfigError("library.yaw_bins must be >= 4");
  if (!(yaw_grid_spacing > 0)) throw ConfigError("library.yaw_grid_spacing must be > 0");
}

ViewpointLibrary build_library(const SurfaceMesh& mesh, const CameraModel& cam,
                               const WorldModel& world, const LibraryParams& params,
                               double min_clearance) {
  params.validate(cam);
  std::vector<Vec3> positions;
  std::vector<int> levels;
  const Vec3 c = mesh.centroid();
  const Vec3 lo = mesh.bbox_min(), hi = mesh.bbox_max();

  if (params.mode == "lattice") {
    double extent = 0.0;
    for (const auto& v : mesh.vertices()) extent = std::max(extent, (v - c).head<2>().norm());
    const double radius = extent + params.d_view;
    const double dz = (hi.z() - lo.z()) / params.levels;
    for (int k = 0; k < params.levels; ++k) {
      const double z = lo.z() + (k + 0.5) * dz;
      for (int j = 0; j < params.rings; ++j) {
        const double phi = 2.0 * std::numbers::pi * j / params.rings;
        positions.emplace_back(c.x() + radius * std::cos(phi), c.y() + radius * std::sin(phi), z);
        levels.push_back(k);
      }
    }
  } else {
    std::mt19937_64 rng(params.shell_seed);
    const Vec3 wlo = world.origin(), whi = world.upper();
    std::uniform_real_distribution<double> ux(wlo.x(), whi.x()), uy(wlo.y(), whi.y()),
        uz(wlo.z(), whi.z());
    const double min_sq = params.shell_min_spacing * params.shell_min_spacing;
    for (int a = 0; a < params.shell_max_attempts &&
                    static_cast<int>(positions.size()) < params.shell_count;
         ++a) {
      const Vec3 p(ux(rng), uy(rng), uz(rng));
      if (std::abs(distance_at(world, p) - params.d_view) > params.shell_tolerance) continue;
      const bool crowded = std::any_of(positions.begin(), positions.end(), [&](const Vec3& q) {
        return (q - p).squaredNorm() < min_sq;
      });
      if (crowded) continue;
      positions.push_back(p);
    }
    std::sort(positions.begin(), positions.end(), [](const Vec3& a, const Vec3& b) {
      return std::lexicographical_compare(a.data() + 0, a.data() + 3, b.data(), b.data() + 3);
    });
    const double band = params.shell_min_spacing > 0 ? params.shell_min_spacing : params.d_view;
    for (const auto& p : positions) {
      levels.push_back(static_cast<int>(std::floor((p.z() - wlo.z()) / band)));
    }
  }

  std::vector<Vec3> kept_pos;
  std::vector<int> kept_lvl;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (distance_at(world, positions[i]) >= min_clearance) {
      kept_pos.push_back(positions[i]);
      kept_lvl.push_back(levels[i]);
    }
  }
  const auto yaws = build_yaw_library(kept_pos, cam, mesh, world, params.yaw_bins);

  ViewpointLibrary lib;
  for (std::size_t i = 0; i < kept_pos.size(); ++i) {
    Viewpoint vp(kept_pos[i], yaws[i]);
    ObservationGeometry obs = observe(vp, cam, mesh, world);
    if (obs.empty()) continue;
    lib.viewpoints.push_back(vp);
    lib.observations.push_back(std::move(obs));
    lib.levels.push_back(kept_lvl[i]);
  }
  if (lib.viewpoints.empty()) {
    throw ConfigError("viewpoint library is empty: no candidate is collision-free and sees a facet");
  }

  double total = 0.0;
  for (std::size_t i = 0; i < lib.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < lib.size(); ++j) {
      if (i != j) best = std::min(best, (lib.viewpoints[i].position - lib.viewpoints[j].position).norm());
    }
    total += std::isfinite(best) ? best : params.d_view;
  }
  lib.spacing = total / static_cast<double>(lib.size());
  log().debug("viewpoint library: {} of {} candidates kept, spacing {}", lib.size(),
              positions.size(), lib.spacing);
  return lib;
}

PooledObservation pool_observations(std::span<const ObservationGeometry> obs) {
  std::vector<std::pair<int, double>> entries;
  for (const auto& o : obs) {
    for (std::size_t k = 0; k < o.facets.size(); ++k) {
      entries.emplace_back(o.facets[k], 1.0 / o.noise_vars[k]);
    }
  }
  std::sort(entries.begin(), entries.end());
  PooledObservation out;
  std::vector<double> info;
  for (const auto& [f, w] : entries) {
    if (!out.facets.empty() && out.facets.back() == f) {
      info.back() += w;
    } else {
      out.facets.push_back(f);
      info.push_back(w);
    }
  }
  out.noise_vars.resize(static_cast<Eigen::Index>(info.size()));
  for (std::size_t k = 0; k < info.size(); ++k) {
    out.noise_vars[static_cast<Eigen::Index>(k)] = 1.0 / info[k];
  }
  return out;
}

GainModel::GainModel(Eigen::MatrixXd cov) : cov_(std::move(cov)) {
  if (cov_.rows() != cov_.cols()) throw Error("gain model needs a square covariance");
  cov_sq_.noalias() = cov_ * cov_;
}

double GainModel::gain(const PooledObservation& obs) const {
  if (obs.empty()) return 0.0;
  Eigen::MatrixXd s = cov_(obs.facets, obs.facets);
  s.diagonal() += obs.noise_vars;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw Error("innovation matrix is not positive definite");
  const Eigen::MatrixXd q = cov_sq_(obs.facets, obs.facets);
  return std::max(0.0, llt.solve(q).trace());
}

double info_gain(const FieldMap& map, const std::vector<Viewpoint>& vps, const CameraModel& cam,
                 const SurfaceMesh& mesh, const WorldModel& world) {
  std::vector<ObservationGeometry> obs;
  for (const auto& vp : vps) obs.push_back(observe(vp, cam, mesh, world));
  const PooledObservation pooled = pool_observations(obs);
  if (pooled.empty()) return 0.0;
  const Eigen::MatrixXd hp = map.cov(pooled.facets, Eigen::all);
  Eigen::MatrixXd s = hp(Eigen::all, pooled.facets);
  s.diagonal() += pooled.noise_vars;
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) throw Error("innovation matrix is not positive definite");
  return llt.matrixL().solve(hp).squaredNorm();
}

GreedyResult greedy_search(const GainModel& gains, const Viewpoint& start,
                           const ViewpointLibrary& lib, int n, const WorldModel& world,
                           const DynamicsLimits& lim, const LosParams& los) {
  if (lib.size() == 0) throw Error("greedy search needs a nonempty library");
  if (n < 1) throw ConfigError("greedy search needs N >= 1");
  GreedyResult out;
  out.waypoints.push_back(start);
  std::vector<ObservationGeometry> chosen;
  double chosen_gain = 0.0;
  for (int pick = 0; pick < n; ++pick) {
    const Viewpoint prev = out.waypoints.back();
    int best = -1;
    double best_eff = -std::numeric_limits<double>::infinity();
    double best_gain = 0.0;
    chosen.emplace_back();
    for (std::size_t c = 0; c < lib.size(); ++c) {
      const Viewpoint& cand = lib.viewpoints[c];
      const double t = segment_time(prev, cand, lim);
      if (t <= 0) continue;
      if (!line_of_sight(world, prev.position, cand.position, los.clearance, los.step)) continue;
      chosen.back() = lib.observations[c];
      const double total = gains.gain(chosen);
      const double eff = std::max(0.0, total - chosen_gain) / t;
      if (eff > best_eff) {
        best_eff = eff;
        best = static_cast<int>(c);
        best_gain = total;
      }
    }
    if (best < 0) {
      chosen.pop_back();
      log().warn("greedy search: no line-of-sight candidate after {} picks", pick);
      break;
    }
    chosen.back() = lib.observations[static_cast<std::size_t>(best)];
    chosen_gain = best_gain;
    out.waypoints.push_back(lib.viewpoints[static_cast<std::size_t>(best)]);
    out.indices.push_back(best);
    out.efficiencies.push_back(best_eff);
  }
  return out;
}

GreedyResult greedy_search(const FieldMap& map, const Viewpoint& start,
                           const ViewpointLibrary& lib, int n, const WorldModel& world,
                           const DynamicsLimits& lim, const LosParams& los) {
  return greedy_search(GainModel(map.cov), start, lib, n, world, lim, los);
}

void PlannerConfig::validate() const {
  if (N < 2) throw ConfigError("planner.N must be >= 2");
  if (order < 5) throw ConfigError("planner.order must be >= 5");
  if (!(duration_safety >= 1.0)) throw ConfigError("planner.duration_safety must be >= 1");
  if (!(w_coll >= 0)) throw ConfigError("planner.w_coll must be >= 0");
  if (cma.lambda != 0 && cma.lambda < 4) throw ConfigError("planner.cma.lambda must be >= 4");
  if (cma.max_iterations < 0) throw ConfigError("planner.cma.max_iterations must be >= 0");
  if (!(cma.sigma0_fraction > 0)) throw ConfigError("planner.cma.sigma0_fraction must be > 0");
  if (!(budget > 0)) throw ConfigError("planner.budget must be > 0");
  if (!(measurement_freq > 0)) throw ConfigError("planner.measurement_freq must be > 0");
  if (start_index < 0) throw ConfigError("planner.start_index must be >= 0");
}

HorizonValue horizon_objective(const std::vector<Viewpoint>& waypoints, const HorizonContext& ctx) {
  HorizonValue v;
  if (waypoints.size() < 2) return v;
  std::optional<Trajectory> traj;
  try {
    traj.emplace(plan_polynomial(waypoints, ctx.lim, ctx.traj));
  } catch (const Error&) {
    return v;  // all waypoints coincide
  }
  v.duration = traj->total_time();
  std::vector<ObservationGeometry> obs;
  for (const auto& m : measurement_viewpoints(*traj, ctx.measurement_freq, ctx.measurement_offset)) {
    obs.push_back(observe(m.viewpoint, *ctx.cam, *ctx.mesh, *ctx.world));
  }
  v.info_rate = ctx.gains->gain(obs) / v.duration;
  v.collision = collision_penalty(*ctx.world, *traj, ctx.lim.uav_radius, ctx.w_coll, ctx.sample_step);
  v.utility = v.info_rate + v.collision;
  return v;
}

RefineResult refine_cmaes(const std::vector<Viewpoint>& c0, const HorizonContext& ctx,
                          const CmaConfig& cma, double library_spacing, std::uint64_t seed) {
  RefineResult out;
  out.waypoints = c0;
  out.initial_utility = horizon_objective(c0, ctx).utility;
  out.utility = out.initial_utility;
  if (c0.size() < 2 || cma.max_iterations == 0) return out;

  const auto free = static_cast<Eigen::Index>(c0.size() - 1);
  Eigen::VectorXd x0(3 * free);
  for (Eigen::Index i = 0; i < free; ++i) x0.segment<3>(3 * i) = c0[static_cast<std::size_t>(i + 1)].position;

  auto decode = [&](const Eigen::VectorXd& x) {
    std::vector<Viewpoint> wps{c0.front()};
    for (Eigen::Index i = 0; i < free; ++i) {
      const Vec3 p = x.segment<3>(3 * i);
      const double yaw = ctx.yaw_field ? ctx.yaw_field->lookup(p)
                                       : c0[static_cast<std::size_t>(i + 1)].yaw;
      wps.emplace_back(p, yaw);
    }
    return wps;
  };

  CmaesOptions opts;
  opts.lambda = cma.lambda;
  opts.max_iterations = cma.max_iterations;
  opts.sigma0 = cma.sigma0_fraction * (library_spacing > 0 ? library_spacing : 1.0);
  opts.seed = seed;
  opts.lower.resize(3 * free);
  opts.upper.resize(3 * free);
  for (Eigen::Index i = 0; i < free; ++i) {
    opts.lower.segment<3>(3 * i) = ctx.world->origin();
    opts.upper.segment<3>(3 * i) = ctx.world->upper();
  }
  const CmaesResult res = cmaes_maximize(
      [&](const Eigen::VectorXd& x) { return horizon_objective(decode(x), ctx).utility; }, x0, opts);
  out.evaluations = res.evaluations + 1;
  if (res.best_value > out.initial_utility) {
    out.waypoints = decode(res.best_x);
    out.utility = res.best_value;
  }
  return out;
}

}  // namespace surfipp
