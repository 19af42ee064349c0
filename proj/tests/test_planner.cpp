#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "surfipp/cmaes.hpp"
#include "surfipp/mission.hpp"
#include "surfipp/planner.hpp"
#include "test_util.hpp"

using namespace surfipp;
using surfipp::testing::desk_scenario;
using surfipp::testing::random_spd;

namespace {

constexpr double kPi = std::numbers::pi;

// Covariance-only sequential fusion of each geometry.
Eigen::MatrixXd fuse_geometries(Eigen::MatrixXd cov, const std::vector<ObservationGeometry>& obs) {
  FieldMap m{Eigen::VectorXd::Zero(cov.rows()), std::move(cov)};
  for (const auto& o : obs) {
    if (o.empty()) continue;
    ObservationBatch b;
    b.facet_indices = o.facets;
    b.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.facets.size()));
    b.noise_vars = Eigen::Map<const Eigen::VectorXd>(o.noise_vars.data(), b.values.size());
    m = fuse(m, b);
  }
  return m.cov;
}

double brute_gain(const Eigen::MatrixXd& cov, const std::vector<ObservationGeometry>& obs) {
  return cov.trace() - fuse_geometries(cov, obs).trace();
}

FieldMap prior_map(const Scenario& s) {
  return FieldMap{Eigen::VectorXd::Zero(s.prior_cov->rows()), *s.prior_cov};
}

struct SmallScene {
  SurfaceMesh mesh = generate_cylinder_tank(1.0, 2.0, 0.2, 20);
  WorldModel world = build_world(mesh, 0.1, 3.0);
  GeodesicField geo = compute_geodesics(mesh);
  CameraModel cam;
  SmallScene() {
    cam.d_min = 0.3;
    cam.d_max = 3.0;
    cam.fov_h = cam.fov_v = 90;
    cam.pitch = 0;
  }
  Viewpoint random_view(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> a(-kPi, kPi), r(1.5, 2.8), z(0.0, 2.2), j(-0.5, 0.5);
    const double th = a(rng);
    return Viewpoint(Vec3(r(rng) * std::cos(th), r(rng) * std::sin(th), z(rng)), th + kPi + j(rng));
  }
};

}  // namespace

TEST(Library, DeskCylinderLattice) {
  const Scenario& s = desk_scenario();
  const auto& lib = *s.library;
  EXPECT_EQ(lib.size(), 60u);
  EXPECT_EQ(lib.observations.size(), lib.size());
  for (std::size_t i = 0; i < lib.size(); ++i) {
    EXPECT_GE(distance_at(*s.world, lib.viewpoints[i].position), s.lim.uav_radius);
    EXPECT_FALSE(lib.observations[i].empty());
    EXPECT_EQ(lib.observations[i].facets,
              visible_facets(lib.viewpoints[i], s.cam, *s.mesh, *s.world));
    EXPECT_NEAR(mesh_distance(*s.mesh, lib.viewpoints[i].position), 4.0, 1.3);
  }
  EXPECT_GT(lib.spacing, 0.0);
}

TEST(Library, ShellModeKeepsOffsetBand) {
  const Scenario& s = desk_scenario();
  LibraryParams p;
  p.mode = "shell";
  p.shell_count = 40;
  p.shell_tolerance = 0.5;
  p.shell_min_spacing = 2.5;
  const ViewpointLibrary lib = build_library(*s.mesh, s.cam, *s.world, p, s.lim.uav_radius);
  EXPECT_GT(lib.size(), 10u);
  for (const auto& vp : lib.viewpoints) {
    EXPECT_NEAR(distance_at(*s.world, vp.position), 4.0, 0.5 + 1e-12);
  }
}

TEST(Library, OffsetInsideVehicleRadiusIsEmpty) {
  const SurfaceMesh thin = surfipp::testing::unit_cube(0.2);
  const WorldModel w = build_world(thin, 0.05, 2.0);
  CameraModel cam;
  cam.d_min = 0.1;
  LibraryParams p;
  p.mode = "shell";
  p.d_view = 0.3;
  p.shell_tolerance = 0.1;
  p.shell_min_spacing = 0.0;
  p.shell_max_attempts = 20000;
  try {
    build_library(thin, cam, w, p, 0.6);
    FAIL() << "library should be empty";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("empty"), std::string::npos);
  }
}

TEST(InfoGain, ScalarCase) {
  FieldMap m{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Constant(1, 1, 2.0)};
  const GainModel g(m.cov);
  PooledObservation o{{0}, Eigen::VectorXd::Constant(1, 2.0)};
  EXPECT_DOUBLE_EQ(g.gain(o), 1.0);
}

TEST(InfoGain, NothingVisibleIsZero) {
  const Scenario& s = desk_scenario();
  const Viewpoint away(Vec3(25, 0, 10), 0.0);
  EXPECT_EQ(info_gain(prior_map(s), {away}, s.cam, *s.mesh, *s.world), 0.0);
  const GainModel g(*s.prior_cov);
  EXPECT_EQ(g.gain(std::vector<ObservationGeometry>{ObservationGeometry{}}), 0.0);
}

TEST(InfoGain, MatchesSequentialCovarianceUpdates) {
  const Scenario& s = desk_scenario();
  const FieldMap map = prior_map(s);
  const GainModel g(map.cov);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Viewpoint> vps;
    std::vector<ObservationGeometry> obs;
    const int k = 1 + trial % 4;
    for (int j = 0; j < k; ++j) {
      const auto idx = rng() % s.library->size();
      vps.push_back(s.library->viewpoints[idx]);
      obs.push_back(s.library->observations[idx]);
    }
    const double ref = brute_gain(map.cov, obs);
    EXPECT_NEAR(info_gain(map, vps, s.cam, *s.mesh, *s.world), ref, 1e-8 * ref);
    EXPECT_NEAR(g.gain(obs), ref, 1e-8 * ref);
  }
}

TEST(InfoGain, NonNegativeAndDiminishingReturns) {
  const SmallScene sc;
  std::mt19937_64 rng(10);
  int informative = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(sc.mesh.num_facets());
    ASSERT_LE(n, 20);
    KernelParams kp;
    kp.sigma_f = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
    kp.length_scale = std::uniform_real_distribution<double>(0.3, 4.0)(rng);
    // Geodesic kernel priors.
    const Eigen::MatrixXd cov = prior_covariance(sc.geo, kp);
    const FieldMap map{Eigen::VectorXd::Zero(n), cov};
    const Viewpoint a = sc.random_view(rng), b = sc.random_view(rng);
    const double ga = info_gain(map, {a}, sc.cam, sc.mesh, sc.world);
    const double gb = info_gain(map, {b}, sc.cam, sc.mesh, sc.world);
    const double gab = info_gain(map, {a, b}, sc.cam, sc.mesh, sc.world);
    EXPECT_GE(ga, 0.0);
    EXPECT_GE(gab, 0.0);
    EXPECT_LE(gab, ga + gb + 1e-10);
    const auto oa = observe(a, sc.cam, sc.mesh, sc.world), ob = observe(b, sc.cam, sc.mesh, sc.world);
    EXPECT_NEAR(gab, brute_gain(cov, {oa, ob}), 1e-9 * std::max(1.0, gab));
    if (ga > 0) ++informative;
  }
  EXPECT_GT(informative, 100);
}

TEST(InfoGain, PoolingMergesRepeatedFacets) {
  const std::vector<ObservationGeometry> obs = {{{1, 3}, {0.5, 0.25}}, {{3, 4}, {0.25, 1.0}}};
  const PooledObservation p = pool_observations(obs);
  EXPECT_EQ(p.facets, (std::vector<int>{1, 3, 4}));
  EXPECT_DOUBLE_EQ(p.noise_vars[1], 0.125);
  std::mt19937_64 rng(1);
  const Eigen::MatrixXd cov = random_spd(6, rng);
  EXPECT_NEAR(GainModel(cov).gain(p), brute_gain(cov, obs), 1e-12);
}

TEST(Greedy, PrefersUnmeasuredRegionAtEqualTravelTime) {
  const int n = 10;
  FieldMap map{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n)};
  // Facets 0-4 were already measured.
  ObservationBatch seen{{0, 1, 2, 3, 4}, Eigen::VectorXd::Zero(5), Eigen::VectorXd::Constant(5, 0.01)};
  map = fuse(map, seen);
  ViewpointLibrary lib;
  lib.viewpoints = {Viewpoint(Vec3(100, 5, 0), 0), Viewpoint(Vec3(100, -5, 0), 0)};
  lib.observations = {{{0, 1, 2, 3, 4}, std::vector<double>(5, 0.05)},
                      {{5, 6, 7, 8, 9}, std::vector<double>(5, 0.05)}};
  lib.levels = {0, 0};
  const WorldModel world = build_world(surfipp::testing::unit_cube(), 0.5, 1.0);
  const GreedyResult r = greedy_search(map, Viewpoint(Vec3(100, 0, 0), 0), lib, 1, world,
                                       DynamicsLimits{}, LosParams{});
  ASSERT_EQ(r.indices.size(), 1u);
  EXPECT_EQ(r.indices[0], 1);
  EXPECT_EQ(r.waypoints.size(), 2u);
}

TEST(Greedy, SingleStepEqualsExhaustiveArgmax) {
  const Scenario& s = desk_scenario();
  const auto& lib = *s.library;
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    FieldMap map = prior_map(s);
    // Perturb the state with a few real measurements.
    for (int k = 0; k < trial % 4; ++k) {
      const auto& o = lib.observations[rng() % lib.size()];
      ObservationBatch b{o.facets, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(o.facets.size())),
                         Eigen::Map<const Eigen::VectorXd>(o.noise_vars.data(), static_cast<Eigen::Index>(o.facets.size()))};
      map = fuse(map, b);
    }
    const Viewpoint start = lib.viewpoints[rng() % lib.size()];
    const GreedyResult r = greedy_search(map, start, lib, 1, *s.world, s.lim, s.los());
    int best = -1;
    double best_eff = -1;
    for (std::size_t c = 0; c < lib.size(); ++c) {
      const double t = segment_time(start, lib.viewpoints[c], s.lim);
      if (t <= 0) continue;
      if (!line_of_sight(*s.world, start.position, lib.viewpoints[c].position, s.los().clearance,
                         s.los().step)) {
        continue;
      }
      const double eff = brute_gain(map.cov, {lib.observations[c]}) / t;
      if (eff > best_eff * (1 + 1e-12)) {
        best_eff = eff;
        best = static_cast<int>(c);
      }
    }
    ASSERT_EQ(r.indices.size(), 1u);
    EXPECT_EQ(r.indices[0], best);
    EXPECT_NEAR(r.efficiencies[0], best_eff, 1e-8 * best_eff);
  }
}

TEST(Greedy, MultiStepMatchesSequentialReference) {
  const Scenario& s = desk_scenario();
  const auto& lib = *s.library;
  const Viewpoint start = lib.viewpoints[0];
  const GreedyResult r = greedy_search(prior_map(s), start, lib, 3, *s.world, s.lim, s.los());
  ASSERT_EQ(r.indices.size(), 3u);
  ASSERT_EQ(r.waypoints.size(), 4u);
  Eigen::MatrixXd cov = *s.prior_cov;
  Viewpoint prev = start;
  for (int pick = 0; pick < 3; ++pick) {
    int best = -1;
    double best_eff = -1;
    for (std::size_t c = 0; c < lib.size(); ++c) {
      const double t = segment_time(prev, lib.viewpoints[c], s.lim);
      if (t <= 0 || !line_of_sight(*s.world, prev.position, lib.viewpoints[c].position,
                                   s.los().clearance, s.los().step)) {
        continue;
      }
      const double eff = brute_gain(cov, {lib.observations[c]}) / t;
      if (eff > best_eff * (1 + 1e-12)) {
        best_eff = eff;
        best = static_cast<int>(c);
      }
    }
    EXPECT_EQ(r.indices[pick], best);
    cov = fuse_geometries(cov, {lib.observations[best]});
    prev = lib.viewpoints[best];
  }
  const GreedyResult again = greedy_search(prior_map(s), start, lib, 3, *s.world, s.lim, s.los());
  EXPECT_EQ(again.indices, r.indices);
}

TEST(Greedy, NoLineOfSightReturnsPartialPlan) {
  const Scenario& s = desk_scenario();
  const auto& lib = *s.library;
  LosParams blocked{1e6, 0.25};
  const GreedyResult r = greedy_search(prior_map(s), lib.viewpoints[0], lib, 3, *s.world, s.lim, blocked);
  EXPECT_TRUE(r.indices.empty());
  EXPECT_EQ(r.waypoints.size(), 1u);
}

TEST(Cmaes, DefaultPopulation) {
  EXPECT_EQ(cmaes_default_lambda(1), 4);
  EXPECT_EQ(cmaes_default_lambda(9), 4 + 6);
  EXPECT_EQ(cmaes_default_lambda(20), 4 + 8);
}

TEST(Cmaes, FindsQuadraticOptimum) {
  const Eigen::Vector3d target(1.0, -2.0, 0.5);
  auto f = [&](const Eigen::VectorXd& x) { return -(x - target).squaredNorm(); };
  CmaesOptions o;
  o.max_iterations = 200;
  o.sigma0 = 1.0;
  const CmaesResult r = cmaes_maximize(f, Eigen::VectorXd::Zero(3), o);
  EXPECT_LE((r.best_x - target).norm(), 1e-4);
}

TEST(Cmaes, SolvesRosenbrock) {
  auto f = [](const Eigen::VectorXd& x) {
    double s = 0;
    for (int i = 0; i + 1 < x.size(); ++i)
      s += 100 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1 - x[i], 2);
    return -s;
  };
  CmaesOptions o;
  o.max_iterations = 2000;
  o.sigma0 = 0.5;
  const CmaesResult r = cmaes_maximize(f, Eigen::VectorXd::Zero(4), o);
  EXPECT_LE((r.best_x - Eigen::VectorXd::Ones(4)).norm(), 1e-3);
}

TEST(Cmaes, RespectsBoundsAndNeverWorseThanStart) {
  auto f = [](const Eigen::VectorXd& x) { return x.sum(); };  // optimum at the upper corner
  CmaesOptions o;
  o.lower = Eigen::VectorXd::Constant(3, -1.0);
  o.upper = Eigen::VectorXd::Constant(3, 2.0);
  o.max_iterations = 100;
  const CmaesResult r = cmaes_maximize(f, Eigen::VectorXd::Zero(3), o);
  EXPECT_TRUE((r.best_x.array() <= 2.0).all());
  EXPECT_TRUE((r.best_x.array() >= -1.0).all());
  EXPECT_NEAR(r.best_value, 6.0, 1e-3);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::normal_distribution<double> g;
    const Eigen::Vector2d x0(g(rng), g(rng));
    auto bumpy = [](const Eigen::VectorXd& x) { return -std::abs(std::sin(5 * x[0]) * x[1]) - x.squaredNorm(); };
    CmaesOptions q;
    q.max_iterations = 3;
    q.seed = static_cast<std::uint64_t>(trial);
    const CmaesResult rr = cmaes_maximize(bumpy, x0, q);
    EXPECT_GE(rr.best_value, bumpy(x0));
    const CmaesResult again = cmaes_maximize(bumpy, x0, q);
    EXPECT_EQ(rr.best_x, again.best_x);
  }
}

namespace {

// One free waypoint in front of a single facet; the yaw slew fixes the flight time.
struct ToyProblem {
  SurfaceMesh mesh = surfipp::testing::unit_cube(4.0);
  WorldModel world = build_world(mesh, 0.2, 8.0);
  CameraModel cam;
  GainModel gains{Eigen::MatrixXd::Identity(12, 12)};
  HorizonContext ctx;
  int facet = -1;

  ToyProblem() {
    cam.fov_h = cam.fov_v = 5.0;
    cam.pitch = 0.0;
    cam.noise_a = 1.0;
    cam.noise_b = 0.5;
    for (std::size_t i = 0; i < mesh.num_facets(); ++i) {
      if (mesh.normals()[i].x() > 0.99) {
        facet = static_cast<int>(i);
        break;
      }
    }
    ctx.gains = &gains;
    ctx.cam = &cam;
    ctx.mesh = &mesh;
    ctx.world = &world;
    ctx.lim = DynamicsLimits{4.0, 6.0, kPi / 4, 0.3};
    ctx.traj = TrajectoryOptions{12, 1.1};
    ctx.w_coll = 100;
    ctx.sample_step = 0.05;
    ctx.measurement_freq = 1.0 / 2.2;
    ctx.measurement_offset = 0.0;
  }
  Vec3 center() const { return mesh.centers()[facet]; }
  std::vector<Viewpoint> plan(const Vec3& end) const {
    return {Viewpoint(center() + Vec3(6, 0, 0), 0.0), Viewpoint(end, kPi)};
  }
};

}  // namespace

TEST(Refine, ToyProblemApproachesNearRangeLimitLikeGridSearch) {
  const ToyProblem toy;
  ASSERT_GE(toy.facet, 0);
  const auto c0 = toy.plan(toy.center() + Vec3(4, 0, 0));
  double grid_best = -1;
  Vec3 grid_arg = Vec3::Zero();
  for (double dx = 1.0; dx <= 7.0 + 1e-9; dx += 0.05)
    for (double dy = -0.3; dy <= 0.3 + 1e-9; dy += 0.05)
      for (double dz = -0.3; dz <= 0.3 + 1e-9; dz += 0.05) {
        const double u = horizon_objective(toy.plan(toy.center() + Vec3(dx, dy, dz)), toy.ctx).utility;
        if (u > grid_best) {
          grid_best = u;
          grid_arg = Vec3(dx, dy, dz);
        }
      }
  EXPECT_NEAR(grid_arg.norm(), toy.cam.d_min, 0.05 + 1e-9);

  CmaConfig cma;
  cma.max_iterations = 80;
  const RefineResult r = refine_cmaes(c0, toy.ctx, cma, 0.4, 5);
  EXPECT_GE(r.utility, r.initial_utility);
  EXPECT_GE(r.utility, grid_best * (1 - 1e-3));
  const double d_end = (r.waypoints.back().position - toy.center()).norm();
  EXPECT_LT(d_end, 4.0);
  EXPECT_NEAR(d_end, toy.cam.d_min, 0.1);
  EXPECT_EQ(r.waypoints.front().position, c0.front().position);
}

TEST(Refine, DeterministicAndNeverWorseThanGreedyOnDesk) {
  const Scenario& s = desk_scenario();
  const GainModel gains(*s.prior_cov);
  HorizonContext ctx;
  ctx.gains = &gains;
  ctx.cam = &s.cam;
  ctx.mesh = s.mesh.get();
  ctx.world = s.world.get();
  ctx.yaw_field = s.yaw_field.get();
  ctx.lim = s.lim;
  ctx.traj = s.planner.trajectory_options();
  ctx.w_coll = s.planner.w_coll;
  ctx.sample_step = s.sample_step();
  ctx.measurement_freq = s.planner.measurement_freq;
  ctx.measurement_offset = 5.0;
  for (int start : {0, 17, 42}) {
    const GreedyResult g =
        greedy_search(gains, s.library->viewpoints[start], *s.library, 3, *s.world, s.lim, s.los());
    const RefineResult a = refine_cmaes(g.waypoints, ctx, s.planner.cma, s.library->spacing, 9);
    const RefineResult b = refine_cmaes(g.waypoints, ctx, s.planner.cma, s.library->spacing, 9);
    EXPECT_GE(a.utility, a.initial_utility - 1e-12);
    EXPECT_NEAR(a.initial_utility, horizon_objective(g.waypoints, ctx).utility, 0);
    EXPECT_NEAR(a.utility, horizon_objective(a.waypoints, ctx).utility, 1e-12 * std::abs(a.utility));
    ASSERT_EQ(a.waypoints.size(), b.waypoints.size());
    for (std::size_t i = 0; i < a.waypoints.size(); ++i) {
      EXPECT_EQ(a.waypoints[i].position, b.waypoints[i].position);
    }
    const HorizonValue v0 = horizon_objective(g.waypoints, ctx);
    if (v0.collision == 0.0) {
      EXPECT_EQ(horizon_objective(a.waypoints, ctx).collision, 0.0);
    }
  }
}

TEST(Mission, BudgetBelowFirstMeasurementKeepsOnlyInitialState) {
  Scenario s = desk_scenario();
  s.planner.budget = 1.0;
  const MissionLog log = run_mission(s, PlannerKind::ipp, 3);
  ASSERT_EQ(log.events.size(), 1u);
  EXPECT_EQ(log.events[0].time, 0.0);
  EXPECT_LE(log.elapsed, 1.0 + 1e-12);
}

TEST(Mission, IppHalvesTraceAndKeepsInvariants) {
  const Scenario& s = desk_scenario();
  const MissionLog log = run_mission(s, PlannerKind::ipp, 1);
  ASSERT_GT(log.events.size(), 2u);
  EXPECT_LT(log.events.back().trace, 0.5 * log.events.front().trace);
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    EXPECT_GT(log.events[i].time, log.events[i - 1].time);
    EXPECT_LE(log.events[i].trace, log.events[i - 1].trace);
    EXPECT_LE(log.events[i].time, s.planner.budget);
  }
  EXPECT_EQ(log.collision_samples, 0);
  for (const auto& piece : log.path) {
    for (double t : piece.trajectory.sample_times(s.sample_step())) {
      if (t <= piece.duration) {
        ASSERT_GE(distance_at(*s.world, piece.trajectory.position(t)), s.lim.uav_radius);
      }
    }
  }
  EXPECT_LE(log.elapsed, s.planner.budget + 1e-9);
  // Measurements fall on the global sensor clock.
  for (std::size_t i = 1; i < log.events.size(); ++i) {
    const double k = log.events[i].time * s.planner.measurement_freq;
    EXPECT_NEAR(k, std::round(k), 1e-9);
  }
}

TEST(Mission, DeterministicPerSeed) {
  const Scenario& s = desk_scenario();
  for (PlannerKind kind : {PlannerKind::ipp, PlannerKind::coverage, PlannerKind::random}) {
    const MissionLog a = run_mission(s, kind, 5);
    const MissionLog b = run_mission(s, kind, 5);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
      EXPECT_EQ(a.events[i].time, b.events[i].time);
      EXPECT_EQ(a.events[i].trace, b.events[i].trace);
      EXPECT_EQ(a.events[i].rmse, b.events[i].rmse);
    }
  }
}

TEST(Mission, PlannerKindNames) {
  EXPECT_EQ(parse_planner_kind("coverage"), PlannerKind::coverage);
  EXPECT_EQ(to_string(PlannerKind::random), "random");
  EXPECT_THROW(parse_planner_kind("spiral"), ConfigError);
}

TEST(Mission, InterpolateEventsHoldsTheLastValue) {
  std::vector<MissionEvent> ev = {{0.0, {}, 10.0, 1.0, 0}, {5.0, {}, 6.0, 0.5, 3}, {10.0, {}, 4.0, 0.25, 3}};
  const auto tr = interpolate_events(ev, {0.0, 2.5, 5.0, 7.5, 10.0, 12.0}, true);
  EXPECT_EQ(tr, (std::vector<double>{10.0, 8.0, 6.0, 5.0, 4.0, 4.0}));
  const auto rm = interpolate_events(ev, {7.5}, false);
  EXPECT_DOUBLE_EQ(rm[0], 0.375);
}
