#include "surfipp/mission.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <optional>

#include "surfipp/io_util.hpp"
#include "surfipp/log.hpp"

namespace surfipp {

std::string to_string(PlannerKind kind) {
  switch (kind) {
    case PlannerKind::ipp: return "ipp";
    case PlannerKind::coverage: return "coverage";
    case PlannerKind::random: return "random";
  }
  return "?";
}

PlannerKind parse_planner_kind(const std::string& name) {
  if (name == "ipp") return PlannerKind::ipp;
  if (name == "coverage") return PlannerKind::coverage;
  if (name == "random") return PlannerKind::random;
  throw ConfigError("planner kind must be ipp, coverage or random, got '" + name + "'");
}

double Scenario::sample_step() const {
  if (planner.sample_step > 0) return planner.sample_step;
  return std::min(world->voxel(), lim.uav_radius) / 2.0;
}

LosParams Scenario::los() const {
  const double step = sample_step();
  return {lim.uav_radius + (planner.los_margin >= 0 ? planner.los_margin : step), step};
}

void finalize_scenario(Scenario& s) {
  if (!s.mesh || !s.geo || !s.world) throw Error("scenario needs mesh, geodesics and world");
  s.kernel.validate();
  s.cam.validate();
  s.lim.validate();
  s.planner.validate();
  s.truth.validate();
  if (s.geo->size() != s.mesh->num_facets()) throw Error("geodesic field does not match the mesh");
  s.prior_cov = std::make_shared<const Eigen::MatrixXd>(prior_covariance(*s.geo, s.kernel));
  s.library = std::make_shared<const ViewpointLibrary>(
      build_library(*s.mesh, s.cam, *s.world, s.library_params, s.lim.uav_radius));
  if (static_cast<std::size_t>(s.planner.start_index) >= s.library->size()) {
    throw ConfigError("planner.start_index exceeds the library size (" +
                      std::to_string(s.library->size()) + ")");
  }
  s.yaw_field = std::make_shared<const YawField>(*s.world, s.cam, *s.mesh,
                                                 s.library_params.yaw_grid_spacing,
                                                 s.library_params.yaw_bins, s.lim.uav_radius);
  s.graph = std::make_shared<const LibraryGraph>(build_library_graph(*s.library, *s.world, s.los()));
  s.coverage = std::make_shared<const CoveragePlan>(
      plan_coverage(*s.library, *s.graph, s.mesh->centroid()));
}

namespace {

class CoverageFollower {
 public:
  CoverageFollower(const Scenario& s) : s_(s) {}

  std::vector<int> next(int pose_index, int count) {
    const auto& route = s_.coverage->route;
    if (route.empty()) return {};
    int tail = pending_.empty() ? pose_index : pending_.back();
    int misses = 0;
    while (static_cast<int>(pending_.size()) < count && misses <= static_cast<int>(route.size())) {
      const int target = route[cursor_];
      cursor_ = (cursor_ + 1) % route.size();
      if (target == tail) {
        ++misses;
        continue;
      }
      if (tail < 0 || s_.graph->visible(tail, target)) {
        pending_.push_back(target);
      } else {
        const auto path = shortest_route(*s_.graph, *s_.library, tail, target);
        if (path.empty()) {
          ++misses;
          continue;
        }
        pending_.insert(pending_.end(), path.begin() + 1, path.end());
      }
      misses = 0;
      tail = pending_.back();
    }
    const auto take = std::min<std::size_t>(pending_.size(), static_cast<std::size_t>(count));
    return {pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(take)};
  }

  void consume(std::size_t n) {
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(std::min(n, pending_.size())));
  }

 private:
  const Scenario& s_;
  std::deque<int> pending_;
  std::size_t cursor_ = 0;
};

// Earliest time at which the executed part must stop to stay collision
// free: the last waypoint before the first violating sample.
double safe_duration(const Trajectory& traj, const WorldModel& world, double r, double step) {
  for (double t : traj.sample_times(step)) {
    if (distance_at(world, traj.position(t)) < r) {
      double stop = 0.0;
      for (std::size_t i = 0; i < traj.segments().size(); ++i) {
        const double end = traj.segment_start(i) + traj.segments()[i].duration;
        if (end <= t) stop = end;
      }
      return stop;
    }
  }
  return traj.total_time();
}

}  // namespace

MissionLog run_mission(const Scenario& s, const MissionOptions& opts) {
  const auto wall0 = std::chrono::steady_clock::now();
  if (!s.library || !s.prior_cov) throw Error("scenario is not finalized");
  const auto& lib = *s.library;
  const auto& cfg = s.planner;
  const double budget = cfg.budget;
  const double r = s.lim.uav_radius;
  const double step = s.sample_step();
  const LosParams los = s.los();

  const GroundTruthField truth = s.fixed_truth ? *s.fixed_truth
                                               : generate_field(*s.mesh, *s.geo, s.truth, opts.truth_seed);
  if (truth.size() != s.mesh->num_facets()) throw Error("ground truth does not match the mesh");
  FieldMap map;
  map.cov = opts.prior_override ? *opts.prior_override : *s.prior_cov;
  if (static_cast<std::size_t>(map.cov.rows()) != s.mesh->num_facets()) {
    throw Error("prior covariance does not match the mesh");
  }
  map.mean = Eigen::VectorXd::Constant(map.cov.rows(), s.prior_mean);
  map.mesh_id = s.mesh->content_hash();

  MissionLog out;
  out.initial_map = map;
  Viewpoint pose = lib.viewpoints[static_cast<std::size_t>(cfg.start_index)];
  int pose_index = cfg.start_index;
  out.events.push_back({0.0, pose, trace_cov(map), rmse(map, truth), 0});

  CoverageFollower follower(s);
  double t = 0.0;
  long next_k = 1;
  std::uint64_t meas_index = 0;
  for (std::uint64_t horizon = 0; t < budget; ++horizon) {
    const auto plan0 = std::chrono::steady_clock::now();
    HorizonRecord rec;
    rec.start_time = t;
    std::vector<Viewpoint> wps{pose};
    std::vector<int> picks;
    std::vector<Viewpoint> fallback;

    switch (opts.kind) {
      case PlannerKind::ipp: {
        const GainModel gains(map.cov);
        const GreedyResult greedy = greedy_search(gains, pose, lib, cfg.N - 1, *s.world, s.lim, los);
        HorizonContext ctx;
        ctx.gains = &gains;
        ctx.cam = &s.cam;
        ctx.mesh = s.mesh.get();
        ctx.world = s.world.get();
        ctx.yaw_field = s.yaw_field.get();
        ctx.lim = s.lim;
        ctx.traj = cfg.trajectory_options();
        ctx.w_coll = cfg.w_coll;
        ctx.sample_step = step;
        ctx.measurement_freq = cfg.measurement_freq;
        ctx.measurement_offset = static_cast<double>(next_k) / cfg.measurement_freq - t;
        const RefineResult refined =
            refine_cmaes(greedy.waypoints, ctx, cfg.cma, lib.spacing, seed_combine(opts.seed, 0xC3A, horizon));
        wps = refined.waypoints;
        fallback = greedy.waypoints;
        rec.initial_utility = refined.initial_utility;
        rec.utility = refined.utility;
        break;
      }
      case PlannerKind::coverage:
        picks = follower.next(pose_index, cfg.N - 1);
        break;
      case PlannerKind::random:
        picks = plan_random(lib, cfg.N - 1, seed_combine(opts.seed, 0x5A4D, horizon), s.graph.get(),
                            pose_index);
        break;
    }
    for (int i : picks) wps.push_back(lib.viewpoints[static_cast<std::size_t>(i)]);

    std::optional<Trajectory> traj;
    double exec = 0.0;
    for (const auto* cand : {&wps, &fallback}) {
      if (cand->size() < 2) continue;
      try {
        Trajectory tr = plan_polynomial(*cand, s.lim, cfg.trajectory_options());
        exec = safe_duration(tr, *s.world, r, step);
        if (exec > 0) {
          if (cand == &fallback) log().info("horizon {}: refined plan collides, using greedy plan", horizon);
          traj.emplace(std::move(tr));
          wps = *cand;
          break;
        }
      } catch (const Error& e) {
        log().debug("horizon {}: {}", horizon, e.what());
      }
    }
    if (!traj) {
      log().warn("mission stopped at t={}: no executable plan", t);
      break;
    }
    exec = std::min(exec, budget - t);
    rec.plan_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - plan0).count();

    for (;;) {
      const double tm = static_cast<double>(next_k) / cfg.measurement_freq;
      if (tm > budget || tm > t + exec + 1e-9) break;
      ++next_k;
      const Viewpoint vp = traj->viewpoint(std::clamp(tm - t, 0.0, traj->total_time()));
      const auto batch = simulate_measurement(vp, truth, s.cam, *s.mesh, *s.world,
                                              seed_combine(opts.seed, 0x4D45, meas_index++));
      if (!batch) continue;
      map = fuse(map, *batch);
      out.events.push_back({tm, vp, trace_cov(map), rmse(map, truth), static_cast<int>(batch->size())});
    }

    for (double ts : traj->sample_times(step)) {
      if (ts <= exec && distance_at(*s.world, traj->position(ts)) < r) ++out.collision_samples;
    }
    std::size_t reached = 0;
    for (std::size_t i = 0; i < traj->segments().size(); ++i) {
      if (traj->segment_start(i) + traj->segments()[i].duration <= exec + 1e-12) reached = i + 1;
    }
    pose = traj->viewpoint(exec);
    if (opts.kind == PlannerKind::ipp) {
      pose_index = -1;
    } else {
      pose_index = reached > 0 ? picks[reached - 1] : pose_index;
      if (opts.kind == PlannerKind::coverage) follower.consume(reached);
    }
    rec.duration = exec;
    rec.waypoints = static_cast<int>(wps.size());
    out.horizons.push_back(rec);
    log().debug("{} horizon {}: t={} dur={} U0={} U={} plan {}s", to_string(opts.kind), horizon, t,
                exec, rec.initial_utility, rec.utility, rec.plan_seconds);
    out.path.push_back({t, exec, std::move(*traj)});
    t += exec;
  }
  out.elapsed = t;
  out.final_map = std::move(map);
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  return out;
}

MissionLog run_mission(const Scenario& scenario, PlannerKind kind, std::uint64_t seed) {
  MissionOptions opts;
  opts.kind = kind;
  opts.seed = seed;
  opts.truth_seed = seed;
  return run_mission(scenario, opts);
}

void write_metrics_csv(const MissionLog& log, const std::filesystem::path& path) {
  CsvWriter csv(path, {"t", "trace", "rmse", "x", "y", "z", "yaw", "observed"});
  for (const auto& e : log.events) {
    const Vec3& p = e.viewpoint.position;
    csv.row({fmt_num(e.time), fmt_num(e.trace), fmt_num(e.rmse), fmt_num(p.x()), fmt_num(p.y()),
             fmt_num(p.z()), fmt_num(e.viewpoint.yaw), std::to_string(e.observed)});
  }
}

void write_path_csv(const MissionLog& log, const std::filesystem::path& path, double rate_hz) {
  if (!(rate_hz > 0)) throw Error("path sample rate must be > 0");
  CsvWriter csv(path, {"t", "x", "y", "z", "yaw"});
  for (const auto& piece : log.path) {
    const long count = static_cast<long>(std::floor(piece.duration * rate_hz + 1e-9));
    for (long k = 0; k <= count; ++k) {
      const double tl = std::min(static_cast<double>(k) / rate_hz, piece.duration);
      const Vec3 p = piece.trajectory.position(tl);
      csv.row_numbers({piece.start_time + tl, p.x(), p.y(), p.z(), piece.trajectory.yaw(tl)});
    }
  }
}

std::vector<double> interpolate_events(const std::vector<MissionEvent>& events,
                                       const std::vector<double>& times, bool use_trace) {
  if (events.empty()) throw Error("cannot interpolate an empty log");
  auto value = [&](std::size_t i) { return use_trace ? events[i].trace : events[i].rmse; };
  std::vector<double> out;
  out.reserve(times.size());
  std::size_t j = 0;
  for (double tau : times) {
    while (j + 1 < events.size() && events[j + 1].time <= tau) ++j;
    if (tau <= events.front().time) {
      out.push_back(value(0));
    } else if (j + 1 >= events.size()) {
      out.push_back(value(events.size() - 1));
    } else {
      const double t0 = events[j].time, t1 = events[j + 1].time;
      const double w = (tau - t0) / (t1 - t0);
      out.push_back((1 - w) * value(j) + w * value(j + 1));
    }
  }
  return out;
}

}  // namespace surfipp
