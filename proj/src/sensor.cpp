#include "surfipp/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "surfipp/ground_truth.hpp"

namespace surfipp {

namespace {
constexpr double kDeg = std::numbers::pi / 180.0;

struct CameraLimits {
  double half_h, half_v, cos_alpha_max;
  explicit CameraLimits(const CameraModel& cam)
      : half_h(0.5 * cam.fov_h * kDeg),
        half_v(0.5 * cam.fov_v * kDeg),
        cos_alpha_max(std::cos(cam.alpha_max * kDeg)) {}
};

struct CameraFrame {
  Vec3 axis, left, up;
  CameraFrame(const Viewpoint& vp, const CameraModel& cam) {
    const double th = cam.pitch * kDeg;
    const Vec3 fwd(std::cos(vp.yaw), std::sin(vp.yaw), 0.0);
    left = Vec3(-std::sin(vp.yaw), std::cos(vp.yaw), 0.0);
    const Vec3 z = Vec3::UnitZ();
    axis = std::cos(th) * fwd - std::sin(th) * z;
    up = std::sin(th) * fwd + std::cos(th) * z;
  }
};

bool facet_visible(const Viewpoint& vp, const CameraModel& cam, const CameraLimits& lim,
                   const CameraFrame& frame, const Vec3& center, const Vec3& normal,
                   const WorldModel& world, double& distance) {
  const Vec3 v = center - vp.position;
  const double d = v.norm();
  if (d < cam.d_min || d > cam.d_max) return false;
  // Incidence: outward normal against the facet-to-camera direction.
  if (-normal.dot(v) < lim.cos_alpha_max * d) return false;
  const double x = v.dot(frame.axis);
  if (std::abs(std::atan2(v.dot(frame.left), x)) > lim.half_h) return false;
  if (std::abs(std::atan2(v.dot(frame.up), x)) > lim.half_v) return false;
  if (cam.occlusion_check) {
    const Vec3 target = center + cam.occlusion_offset * normal;
    if (!line_of_sight(world, vp.position, target, cam.occlusion_clearance, cam.occlusion_step)) {
      return false;
    }
  }
  distance = d;
  return true;
}

int count_visible(const Viewpoint& vp, const CameraModel& cam, const SurfaceMesh& mesh,
                  const WorldModel& world) {
  const CameraLimits lim(cam);
  const CameraFrame frame(vp, cam);
  int count = 0;
  double d = 0;
  for (std::size_t i = 0; i < mesh.num_facets(); ++i) {
    if (facet_visible(vp, cam, lim, frame, mesh.centers()[i], mesh.normals()[i], world, d)) {
      ++count;
    }
  }
  return count;
}

}  // namespace

void CameraModel::validate() const {
  if (!(fov_h > 0 && fov_h <= 180)) throw ConfigError("camera.fov_h must be in (0, 180]");
  if (!(fov_v > 0 && fov_v <= 180)) throw ConfigError("camera.fov_v must be in (0, 180]");
  if (!(d_min > 0)) throw ConfigError("camera.d_min must be > 0");
  if (!(d_max > d_min)) throw ConfigError("camera.d_max must exceed camera.d_min");
  if (!(alpha_max > 0 && alpha_max < 90)) throw ConfigError("camera.alpha_max must be in (0, 90)");
  if (!(pitch > -90 && pitch < 90)) throw ConfigError("camera.pitch must be in (-90, 90)");
  if (!(noise_a > 0)) throw ConfigError("camera.noise_a must be > 0");
  if (!(noise_b > 0)) throw ConfigError("camera.noise_b must be > 0");
  if (occlusion_check) {
    if (!(occlusion_step > 0)) throw ConfigError("camera.occlusion_step must be > 0");
    if (!(occlusion_offset >= 0)) throw ConfigError("camera.occlusion_offset must be >= 0");
  }
}

FacetView view_facet(const Viewpoint& vp, const CameraModel& cam, const Vec3& center,
                     const Vec3& normal) {
  const CameraFrame frame(vp, cam);
  const Vec3 v = center - vp.position;
  FacetView out;
  out.distance = v.norm();
  const double x = v.dot(frame.axis);
  out.in_front = x > 0;
  out.azimuth = std::atan2(v.dot(frame.left), x);
  out.elevation = std::atan2(v.dot(frame.up), x);
  out.incidence = out.distance > 0
                      ? std::acos(std::clamp(-normal.dot(v) / out.distance, -1.0, 1.0))
                      : 0.0;
  return out;
}

std::vector<int> visible_facets(const Viewpoint& vp, const CameraModel& cam,
                                const SurfaceMesh& mesh, const WorldModel& world) {
  return observe(vp, cam, mesh, world).facets;
}

double noise_variance(double d, const CameraModel& cam) {
  return -cam.noise_a * std::expm1(-cam.noise_b * d);
}

ObservationGeometry observe(const Viewpoint& vp, const CameraModel& cam, const SurfaceMesh& mesh,
                            const WorldModel& world) {
  const CameraLimits lim(cam);
  const CameraFrame frame(vp, cam);
  ObservationGeometry out;
  double d = 0;
  for (std::size_t i = 0; i < mesh.num_facets(); ++i) {
    if (facet_visible(vp, cam, lim, frame, mesh.centers()[i], mesh.normals()[i], world, d)) {
      out.facets.push_back(static_cast<int>(i));
      out.noise_vars.push_back(noise_variance(d, cam));
    }
  }
  return out;
}

std::optional<ObservationBatch> simulate_measurement(const Viewpoint& vp,
                                                     const GroundTruthField& truth,
                                                     const CameraModel& cam,
                                                     const SurfaceMesh& mesh,
                                                     const WorldModel& world,
                                                     std::uint64_t rng_seed) {
  if (truth.size() != mesh.num_facets()) throw Error("ground truth does not match the mesh");
  ObservationGeometry geom = observe(vp, cam, mesh, world);
  if (geom.empty()) return std::nullopt;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> unit(0.0, 1.0);
  ObservationBatch batch;
  const auto m = static_cast<Eigen::Index>(geom.facets.size());
  batch.values.resize(m);
  batch.noise_vars.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double var = geom.noise_vars[static_cast<std::size_t>(k)];
    batch.noise_vars[k] = var;
    batch.values[k] = truth.values[geom.facets[static_cast<std::size_t>(k)]] +
                      std::sqrt(var) * unit(rng);
  }
  batch.facet_indices = std::move(geom.facets);
  return batch;
}

std::vector<double> yaw_candidates(int yaw_bins) {
  if (yaw_bins < 4) throw ConfigError("yaw_bins must be >= 4");
  std::vector<double> yaws(static_cast<std::size_t>(yaw_bins));
  for (int k = 0; k < yaw_bins; ++k) {
    yaws[static_cast<std::size_t>(k)] = wrap_angle(2.0 * std::numbers::pi * k / yaw_bins);
  }
  std::sort(yaws.begin(), yaws.end());
  return yaws;
}

namespace {
double best_yaw(const Vec3& p, const std::vector<double>& candidates, const CameraModel& cam,
                const SurfaceMesh& mesh, const WorldModel& world) {
  double best = candidates.front();
  int best_count = -1;
  for (double yaw : candidates) {
    const int c = count_visible(Viewpoint(p, yaw), cam, mesh, world);
    if (c > best_count) {
      best_count = c;
      best = yaw;
    }
  }
  return best;
}
}  // namespace

std::vector<double> build_yaw_library(std::span<const Vec3> positions, const CameraModel& cam,
                                      const SurfaceMesh& mesh, const WorldModel& world,
                                      int yaw_bins) {
  const auto candidates = yaw_candidates(yaw_bins);
  std::vector<double> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(best_yaw(p, candidates, cam, mesh, world));
  return out;
}

YawField::YawField(const WorldModel& world, const CameraModel& cam, const SurfaceMesh& mesh,
                   double spacing, int yaw_bins, double min_clearance)
    : origin_(world.origin()), spacing_(spacing) {
  if (!(spacing > 0)) throw ConfigError("library.yaw_grid_spacing must be > 0");
  const auto candidates = yaw_candidates(yaw_bins);
  const Vec3 extent = world.upper() - world.origin();
  for (int ax = 0; ax < 3; ++ax) {
    dims_[ax] = static_cast<int>(std::floor(extent[ax] / spacing)) + 1;
  }
  const Vec3 centroid = mesh.centroid();
  yaws_.resize(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]);
  std::size_t idx = 0;
  for (int k = 0; k < dims_[2]; ++k) {
    for (int j = 0; j < dims_[1]; ++j) {
      for (int i = 0; i < dims_[0]; ++i, ++idx) {
        const Vec3 p = origin_ + spacing * Vec3(i, j, k);
        const double d = distance_at(world, p);
        if (d >= min_clearance && d <= cam.d_max) {
          yaws_[idx] = best_yaw(p, candidates, cam, mesh, world);
        } else {
          yaws_[idx] = std::atan2(centroid.y() - p.y(), centroid.x() - p.x());
        }
      }
    }
  }
}

double YawField::lookup(const Vec3& p) const {
  int ijk[3];
  for (int ax = 0; ax < 3; ++ax) {
    const long r = std::lround((p[ax] - origin_[ax]) / spacing_);
    ijk[ax] = static_cast<int>(std::clamp<long>(r, 0, dims_[ax] - 1));
  }
  return yaws_[(static_cast<std::size_t>(ijk[2]) * dims_[1] + ijk[1]) * dims_[0] + ijk[0]];
}

}  // namespace surfipp
