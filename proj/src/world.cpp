#include "surfipp/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "surfipp/io_util.hpp"
#include "surfipp/log.hpp"
#include "surfipp/trajectory.hpp"

namespace surfipp {

WorldModel::WorldModel(Vec3 origin, double voxel, std::array<int, 3> dims,
                       std::vector<double> values, double margin)
    : origin_(std::move(origin)), voxel_(voxel), dims_(dims), values_(std::move(values)),
      margin_(margin) {
  if (!(voxel_ > 0)) throw Error("voxel size must be > 0");
  if (dims_[0] < 2 || dims_[1] < 2 || dims_[2] < 2) throw Error("world grid needs >= 2 voxels per axis");
  if (values_.size() != static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2]) {
    throw Error("world value count does not match dims");
  }
}

Vec3 WorldModel::upper() const {
  return origin_ + voxel_ * Vec3(dims_[0] - 1, dims_[1] - 1, dims_[2] - 1);
}

bool WorldModel::contains(const Vec3& p) const {
  const Vec3 hi = upper();
  return (p.array() >= origin_.array()).all() && (p.array() <= hi.array()).all();
}

double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Closest point by Voronoi-region classification (Ericson, RTCD 5.1.5).
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return ap.norm();
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return bp.norm();
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    return (p - (a + v * ab)).norm();
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return cp.norm();
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    return (p - (a + w * ac)).norm();
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return (p - (b + w * (c - b))).norm();
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  return (p - (a + ab * v + ac * w)).norm();
}

double mesh_distance(const SurfaceMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  const auto& vs = mesh.vertices();
  for (const auto& f : mesh.facets()) {
    best = std::min(best, point_triangle_distance(p, vs[f[0]], vs[f[1]], vs[f[2]]));
  }
  return best;
}

WorldModel build_world(const SurfaceMesh& mesh, double voxel, double margin,
                       std::size_t max_voxels) {
  if (!(voxel > 0)) throw ConfigError("world.voxel must be > 0");
  if (!(margin >= 0)) throw ConfigError("world.margin must be >= 0");
  const Vec3 lo = mesh.bbox_min() - Vec3::Constant(margin);
  const Vec3 hi = mesh.bbox_max() + Vec3::Constant(margin);
  std::array<int, 3> dims{};
  std::size_t total = 1;
  for (int ax = 0; ax < 3; ++ax) {
    const double cells = std::ceil((hi[ax] - lo[ax]) / voxel);
    if (cells + 1 > static_cast<double>(max_voxels)) {
      throw Error("distance grid exceeds the voxel cap; use a larger world.voxel");
    }
    dims[ax] = std::max(2, static_cast<int>(cells) + 1);
    total *= static_cast<std::size_t>(dims[ax]);
  }
  if (total > max_voxels) {
    throw Error("distance grid would need " + std::to_string(total) + " voxels (cap " +
                std::to_string(max_voxels) + "); use a larger world.voxel");
  }

  struct Tri {
    Vec3 a, b, c, center;
    double radius;
  };
  std::vector<Tri> tris;
  tris.reserve(mesh.num_facets());
  const auto& vs = mesh.vertices();
  for (const auto& f : mesh.facets()) {
    Tri t{vs[f[0]], vs[f[1]], vs[f[2]], (vs[f[0]] + vs[f[1]] + vs[f[2]]) / 3.0, 0.0};
    t.radius = std::max({(t.a - t.center).norm(), (t.b - t.center).norm(),
                         (t.c - t.center).norm()});
    tris.push_back(t);
  }

  // Exact minimum per voxel, bound seeded by the previous voxel's nearest triangle.
  std::vector<double> values(total);
  std::size_t nearest = 0;
  std::size_t idx = 0;
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i, ++idx) {
        const Vec3 p = lo + voxel * Vec3(i, j, k);
        const Tri& seed = tris[nearest];
        double best = point_triangle_distance(p, seed.a, seed.b, seed.c);
        for (std::size_t t = 0; t < tris.size(); ++t) {
          const Tri& tr = tris[t];
          if ((p - tr.center).norm() - tr.radius >= best) continue;
          const double d = point_triangle_distance(p, tr.a, tr.b, tr.c);
          if (d < best) {
            best = d;
            nearest = t;
          }
        }
        values[idx] = best;
      }
    }
  }
  log().debug("distance grid {}x{}x{} at {} m", dims[0], dims[1], dims[2], voxel);
  return WorldModel(lo, voxel, dims, std::move(values), margin);
}

double distance_at(const WorldModel& w, const Vec3& p) {
  const Vec3 g = (p - w.origin()) / w.voxel();
  const auto& dims = w.dims();
  for (int ax = 0; ax < 3; ++ax) {
    if (!(g[ax] >= 0.0) || g[ax] > dims[ax] - 1) {
      log().trace("distance query outside the grid at ({}, {}, {})", p.x(), p.y(), p.z());
      return std::numeric_limits<double>::infinity();
    }
  }
  int i0[3];
  double f[3];
  for (int ax = 0; ax < 3; ++ax) {
    i0[ax] = std::min(static_cast<int>(g[ax]), dims[ax] - 2);
    f[ax] = g[ax] - i0[ax];
  }
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int dx = c & 1, dy = (c >> 1) & 1, dz = (c >> 2) & 1;
    const double wgt = (dx ? f[0] : 1 - f[0]) * (dy ? f[1] : 1 - f[1]) * (dz ? f[2] : 1 - f[2]);
    if (wgt != 0.0) acc += wgt * w.value(i0[0] + dx, i0[1] + dy, i0[2] + dz);
  }
  return acc;
}

bool line_of_sight(const WorldModel& w, const Vec3& a, const Vec3& b, double clearance,
                   double step) {
  if (!(step > 0)) throw Error("line-of-sight step must be > 0");
  // Sample from the lexicographically smaller endpoint.
  const bool swap = std::lexicographical_compare(b.data(), b.data() + 3, a.data(), a.data() + 3);
  const Vec3& p0 = swap ? b : a;
  const Vec3& p1 = swap ? a : b;
  const double len = (p1 - p0).norm();
  std::size_t count = 1;
  while (static_cast<double>(count) * step < len) count *= 2;
  for (std::size_t i = 0; i <= count; ++i) {
    const Vec3 p = i == count ? p1 : Vec3(p0 + (p1 - p0) * (static_cast<double>(i) / count));
    if (distance_at(w, p) < clearance) return false;
  }
  return true;
}

int count_collisions(const WorldModel& w, const Trajectory& traj, double r, double step) {
  int violations = 0;
  for (double t : traj.sample_times(step)) {
    if (distance_at(w, traj.position(t)) < r) ++violations;
  }
  return violations;
}

double collision_penalty(const WorldModel& w, const Trajectory& traj, double r, double w_coll,
                         double step) {
  const int v = count_collisions(w, traj, r, step);
  return v == 0 ? 0.0 : -w_coll * v;
}

void write_distance_slice_csv(const WorldModel& w, double z, const std::filesystem::path& path) {
  CsvWriter csv(path, {"x", "y", "distance"});
  for (int j = 0; j < w.dims()[1]; ++j) {
    for (int i = 0; i < w.dims()[0]; ++i) {
      const Vec3 p = w.origin() + w.voxel() * Vec3(i, j, 0);
      csv.row_numbers({p.x(), p.y(), distance_at(w, Vec3(p.x(), p.y(), z))});
    }
  }
}

}  // namespace surfipp
