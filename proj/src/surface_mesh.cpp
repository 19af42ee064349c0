#include "surfipp/surface_mesh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "surfipp/io_util.hpp"
#include "surfipp/log.hpp"

namespace surfipp {

namespace {

std::uint64_t edge_key(int a, int b) {
  auto lo = static_cast<std::uint64_t>(std::min(a, b));
  auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

// True if the facet traverses a -> b in its cyclic order.
bool has_directed_edge(const SurfaceMesh::Facet& f, int a, int b) {
  for (int k = 0; k < 3; ++k) {
    if (f[k] == a && f[(k + 1) % 3] == b) return true;
  }
  return false;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

SurfaceMesh::SurfaceMesh(std::vector<Vec3> vertices, std::vector<Facet> facets)
    : vertices_(std::move(vertices)) {
  const int nv = static_cast<int>(vertices_.size());
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& v : vertices_) {
    if (!v.allFinite()) throw Error("mesh has a non-finite vertex coordinate");
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const double scale = nv > 0 ? (hi - lo).norm() : 1.0;
  const double min_area = 1e-12 * scale * scale;

  std::size_t dropped = 0;
  facets_.reserve(facets.size());
  for (std::size_t i = 0; i < facets.size(); ++i) {
    const auto& f = facets[i];
    for (int k = 0; k < 3; ++k) {
      if (f[k] < 0 || f[k] >= nv) {
        throw Error("facet " + std::to_string(i) + " references vertex " + std::to_string(f[k]) +
                    " outside [0, " + std::to_string(nv) + ")");
      }
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw Error("facet " + std::to_string(i) + " repeats a vertex index");
    }
    const Vec3 cr = (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]);
    if (0.5 * cr.norm() <= min_area) {
      ++dropped;
      continue;
    }
    facets_.push_back(f);
  }
  if (dropped > 0) log().warn("dropped {} zero-area facet(s)", dropped);
  if (facets_.empty()) throw Error("mesh has no non-degenerate facets");

  const int n = static_cast<int>(facets_.size());
  std::unordered_map<std::uint64_t, std::vector<int>> edge_facets;
  edge_facets.reserve(3 * facets_.size());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) {
      edge_facets[edge_key(facets_[i][k], facets_[i][(k + 1) % 3])].push_back(i);
    }
  }
  adjacency_.assign(n, {});
  for (const auto& [key, owners] : edge_facets) {
    if (owners.size() > 2) {
      throw Error("non-manifold edge between vertices " + std::to_string(key & 0xffffffffULL) +
                  " and " + std::to_string(key >> 32) + " shared by " +
                  std::to_string(owners.size()) + " facets");
    }
    if (owners.size() == 2 && owners[0] != owners[1]) {
      adjacency_[owners[0]].push_back(owners[1]);
      adjacency_[owners[1]].push_back(owners[0]);
    }
  }
  for (auto& nb : adjacency_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }

  // Connectivity.
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    int f = stack.back();
    stack.pop_back();
    for (int g : adjacency_[f]) {
      if (!seen[g]) {
        seen[g] = 1;
        ++reached;
        stack.push_back(g);
      }
    }
  }
  if (reached != n) {
    int missing = static_cast<int>(std::find(seen.begin(), seen.end(), 0) - seen.begin());
    throw Error("facet adjacency graph is disconnected: facet 0 cannot reach facet " +
                std::to_string(missing));
  }

  orient_facets();

  hash_ = kFnvOffset;
  for (const auto& f : facets_) {
    for (int k = 0; k < 3; ++k) hash_ = fnv1a(hash_, vertices_[f[k]].data(), 3 * sizeof(double));
  }
}

void SurfaceMesh::orient_facets() {
  const int n = static_cast<int>(facets_.size());
  // Flood fill: neighbours must traverse the shared edge in opposite directions.
  std::vector<char> done(n, 0);
  std::queue<int> queue;
  queue.push(0);
  done[0] = 1;
  while (!queue.empty()) {
    int f = queue.front();
    queue.pop();
    for (int g : adjacency_[f]) {
      if (done[g]) continue;
      for (int k = 0; k < 3; ++k) {
        int a = facets_[f][k];
        int b = facets_[f][(k + 1) % 3];
        if (has_directed_edge(facets_[g], a, b)) {
          std::swap(facets_[g][1], facets_[g][2]);
          break;
        }
      }
      done[g] = 1;
      queue.push(g);
    }
  }

  centers_.resize(n);
  normals_.resize(n);
  areas_.resize(n);
  double total_area = 0.0;
  centroid_.setZero();
  for (int i = 0; i < n; ++i) {
    const Vec3& a = vertices_[facets_[i][0]];
    const Vec3& b = vertices_[facets_[i][1]];
    const Vec3& c = vertices_[facets_[i][2]];
    const Vec3 cr = (b - a).cross(c - a);
    centers_[i] = (a + b + c) / 3.0;
    areas_[i] = 0.5 * cr.norm();
    normals_[i] = cr.normalized();
    total_area += areas_[i];
    centroid_ += areas_[i] * centers_[i];
  }
  centroid_ /= total_area;

  int outward = 0;
  for (int i = 0; i < n; ++i) {
    double s = normals_[i].dot(centers_[i] - centroid_);
    if (s > 0) ++outward;
    else if (s < 0) --outward;
  }
  if (outward < 0) {
    for (int i = 0; i < n; ++i) {
      std::swap(facets_[i][1], facets_[i][2]);
      normals_[i] = -normals_[i];
    }
  }
}

Vec3 SurfaceMesh::bbox_min() const {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& f : facets_) {
    for (int v : f) lo = lo.cwiseMin(vertices_[v]);
  }
  return lo;
}

Vec3 SurfaceMesh::bbox_max() const {
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& f : facets_) {
    for (int v : f) hi = hi.cwiseMax(vertices_[v]);
  }
  return hi;
}

// ---------------------------------------------------------------------------
// File IO

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

int parse_obj_index(const std::string& token, int nverts, int lineno) {
  std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    std::size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument(head);
  } catch (const std::exception&) {
    throw Error("OBJ line " + std::to_string(lineno) + ": bad vertex reference '" + token + "'");
  }
  if (idx == 0) throw Error("OBJ line " + std::to_string(lineno) + ": vertex index 0");
  return idx > 0 ? idx - 1 : nverts + idx;
}

SurfaceMesh parse_obj(std::istream& in) {
  std::vector<Vec3> verts;
  std::vector<SurfaceMesh::Facet> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      std::string xs, ys, zs;
      if (!(ss >> xs >> ys >> zs)) {
        throw Error("OBJ line " + std::to_string(lineno) + ": vertex needs 3 coordinates");
      }
      try {
        verts.emplace_back(parse_double(xs), parse_double(ys), parse_double(zs));
      } catch (const Error& e) {
        throw Error("OBJ line " + std::to_string(lineno) + ": " + e.what());
      }
    } else if (tag == "f") {
      std::vector<std::string> refs;
      std::string tok;
      while (ss >> tok) refs.push_back(tok);
      if (refs.size() != 3) {
        throw Error("OBJ line " + std::to_string(lineno) + ": non-triangle face with " +
                    std::to_string(refs.size()) + " vertices");
      }
      SurfaceMesh::Facet f{};
      for (int k = 0; k < 3; ++k) {
        f[k] = parse_obj_index(refs[k], static_cast<int>(verts.size()), lineno);
      }
      faces.push_back(f);
    }
    // vn, vt, g, o, s, usemtl, mtllib and friends carry nothing we use.
  }
  return SurfaceMesh(std::move(verts), std::move(faces));
}

SurfaceMesh parse_ascii_stl(std::istream& in) {
  std::vector<Vec3> verts;
  std::vector<SurfaceMesh::Facet> faces;
  std::map<std::array<double, 3>, int> weld;
  std::vector<int> loop;
  std::string tok;
  bool in_loop = false;
  while (in >> tok) {
    tok = lower(tok);
    if (tok == "outer") {
      in >> tok;  // "loop"
      in_loop = true;
      loop.clear();
    } else if (tok == "vertex") {
      std::string xs, ys, zs;
      if (!(in >> xs >> ys >> zs)) throw Error("STL: truncated vertex record");
      std::array<double, 3> p{parse_double(xs), parse_double(ys), parse_double(zs)};
      auto [it, inserted] = weld.emplace(p, static_cast<int>(verts.size()));
      if (inserted) verts.emplace_back(p[0], p[1], p[2]);
      loop.push_back(it->second);
    } else if (tok == "endloop") {
      if (!in_loop) throw Error("STL: endloop without outer loop");
      if (loop.size() != 3) {
        throw Error("STL: non-triangle face with " + std::to_string(loop.size()) + " vertices");
      }
      faces.push_back({loop[0], loop[1], loop[2]});
      in_loop = false;
    }
  }
  return SurfaceMesh(std::move(verts), std::move(faces));
}

}  // namespace

SurfaceMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mesh file " + path.string());
  std::string ext = lower(path.extension().string());
  std::string head(5, '\0');
  in.read(head.data(), 5);
  head.resize(static_cast<std::size_t>(in.gcount()));
  in.clear();
  in.seekg(0);

  if (ext == ".stl" || lower(head) == "solid") {
    // ASCII keywords required.
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bool ascii = lower(head) == "solid" && lower(body).find("facet") != std::string::npos &&
                 std::none_of(body.begin(), body.end(), [](char c) {
                   return c == '\0';
                 });
    if (!ascii) throw Error(path.string() + ": binary STL is not supported");
    std::istringstream ss(body);
    return parse_ascii_stl(ss);
  }
  return parse_obj(in);
}

void save_obj(const SurfaceMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "# surfipp mesh, " << mesh.num_facets() << " facets\n";
  for (const auto& v : mesh.vertices()) {
    out << "v " << fmt_exact(v.x()) << ' ' << fmt_exact(v.y()) << ' ' << fmt_exact(v.z()) << '\n';
  }
  for (const auto& f : mesh.facets()) {
    out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Generators

namespace {

struct MeshBuilder {
  std::vector<Vec3> verts;
  std::vector<SurfaceMesh::Facet> faces;

  int add(const Vec3& p) {
    verts.push_back(p);
    return static_cast<int>(verts.size()) - 1;
  }
  // Band between two rings of equal size; ring index wraps.
  void band(const std::vector<int>& a, const std::vector<int>& b) {
    const std::size_t k = a.size();
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = (i + 1) % k;
      faces.push_back({a[i], b[i], b[j]});
      faces.push_back({a[i], b[j], a[j]});
    }
  }
  void fan(int center, const std::vector<int>& ring) {
    const std::size_t k = ring.size();
    for (std::size_t i = 0; i < k; ++i) faces.push_back({center, ring[i], ring[(i + 1) % k]});
  }
};

struct TankGrid {
  int angular = 3;      // K
  int wall_rings = 1;   // M
  int dome_rings = 1;   // J
  int bottom_rings = 0; // Jb, 0 = polygon without center vertex

  int facet_count() const {
    const int bottom = bottom_rings == 0 ? angular - 2 : angular * (2 * bottom_rings - 1);
    return 2 * angular * wall_rings + bottom + angular * (2 * dome_rings - 1);
  }
};

}  // namespace

SurfaceMesh generate_cylinder_tank(double radius, double height, double dome_height,
                                   int target_facets) {
  if (!(radius > 0)) throw ConfigError("cylinder radius must be > 0");
  if (!(height > 0)) throw ConfigError("cylinder height must be > 0");
  if (!(dome_height > 0)) throw ConfigError("cylinder dome_height must be > 0");
  if (target_facets < 8) throw ConfigError("cylinder target_facets must be >= 8");

  // Sphere through the rim and the apex.
  const double rho = (radius * radius + dome_height * dome_height) / (2.0 * dome_height);
  const double theta_max = std::atan2(radius, rho - dome_height);
  const double cap_arc = rho * theta_max;

  // Scan a square-ish cell size and keep the grid whose count is closest.
  TankGrid best;
  int best_err = std::numeric_limits<int>::max();
  const double s_hi = 4.0 * std::max({radius, height, cap_arc});
  const double s_lo = std::min({radius, height, cap_arc}) / 400.0;
  const int steps = 4000;
  for (int i = 0; i <= steps; ++i) {
    double s = s_hi * std::pow(s_lo / s_hi, static_cast<double>(i) / steps);
    TankGrid g;
    g.angular = std::max(3, static_cast<int>(std::lround(2.0 * std::numbers::pi * radius / s)));
    g.wall_rings = std::max(1, static_cast<int>(std::lround(height / s)));
    g.dome_rings = std::max(1, static_cast<int>(std::lround(cap_arc / s)));
    g.bottom_rings = static_cast<int>(std::lround(radius / s));
    int err = std::abs(g.facet_count() - target_facets);
    if (err < best_err) {
      best_err = err;
      best = g;
    }
    if (g.facet_count() > 4 * target_facets) break;
  }

  const int K = best.angular;
  MeshBuilder mb;
  auto ring_at = [&](double r, double z) {
    std::vector<int> ring(K);
    for (int k = 0; k < K; ++k) {
      double a = 2.0 * std::numbers::pi * k / K;
      ring[k] = mb.add(Vec3(r * std::cos(a), r * std::sin(a), z));
    }
    return ring;
  };

  std::vector<std::vector<int>> wall;
  for (int m = 0; m <= best.wall_rings; ++m) {
    wall.push_back(ring_at(radius, height * m / best.wall_rings));
  }
  for (int m = 0; m < best.wall_rings; ++m) mb.band(wall[m], wall[m + 1]);

  // Bottom disk, outermost ring shared with the wall.
  if (best.bottom_rings == 0) {
    const auto& rim = wall.front();
    for (int k = 1; k + 1 < K; ++k) mb.faces.push_back({rim[0], rim[k + 1], rim[k]});
  } else {
    std::vector<int> inner;
    int center = mb.add(Vec3(0, 0, 0));
    for (int j = 1; j <= best.bottom_rings; ++j) {
      auto ring = j == best.bottom_rings ? wall.front()
                                         : ring_at(radius * j / best.bottom_rings, 0.0);
      if (j == 1) mb.fan(center, ring);
      else mb.band(inner, ring);
      inner = ring;
    }
  }

  // Dome cap, outermost ring shared with the wall top.
  {
    const double zc = height + dome_height - rho;
    int apex = mb.add(Vec3(0, 0, height + dome_height));
    std::vector<int> inner;
    for (int j = 1; j <= best.dome_rings; ++j) {
      double th = theta_max * j / best.dome_rings;
      auto ring = j == best.dome_rings ? wall.back()
                                       : ring_at(rho * std::sin(th), zc + rho * std::cos(th));
      if (j == 1) mb.fan(apex, ring);
      else mb.band(inner, ring);
      inner = ring;
    }
  }
  return SurfaceMesh(std::move(mb.verts), std::move(mb.faces));
}

SurfaceMesh generate_airplane(const AirplaneShape& s) {
  if (s.fuselage_sides < 4 || s.fuselage_sides % 2 != 0) {
    throw ConfigError("airplane fuselage_sides must be even and >= 4");
  }
  if (s.fuselage_segments < 2 || s.wing_chord_segments < 1 || s.wing_span_segments < 1) {
    throw ConfigError("airplane segment counts must be positive");
  }
  if (!(s.fuselage_length > 0 && s.fuselage_radius > 0 && s.wing_span > 0)) {
    throw ConfigError("airplane dimensions must be > 0");
  }
  const int N = s.fuselage_sides;
  const int M = s.fuselage_segments;
  const double dx = s.fuselage_length / M;
  const int m0 = static_cast<int>(std::lround(s.wing_root_start / dx));
  const int nc = s.wing_chord_segments;
  if (m0 < 0 || m0 + nc > M) throw ConfigError("airplane wing does not fit on the fuselage");

  // Quads are emitted as corner coordinates and welded afterwards.
  std::vector<std::array<Vec3, 3>> tris;
  auto quad = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    tris.push_back({a, b, c});
    tris.push_back({a, c, d});
  };

  auto ring_pt = [&](int i, double x) {
    double phi = 2.0 * std::numbers::pi * (i + 0.5) / N;
    return Vec3(x, s.fuselage_radius * std::cos(phi), s.fuselage_radius * std::sin(phi));
  };
  // Side face i spans ring vertices i and i+1; faces N-1 and N/2-1 are the flat
  // vertical faces at +y and -y.
  const int plus_y_face = N - 1;
  const int minus_y_face = N / 2 - 1;
  for (int m = 0; m < M; ++m) {
    double x0 = m * dx, x1 = (m + 1) * dx;
    for (int i = 0; i < N; ++i) {
      bool wing_root = (i == plus_y_face || i == minus_y_face) && m >= m0 && m < m0 + nc;
      if (wing_root) continue;
      int j = (i + 1) % N;
      quad(ring_pt(i, x0), ring_pt(i, x1), ring_pt(j, x1), ring_pt(j, x0));
    }
  }
  const Vec3 nose(-0.8 * s.fuselage_radius, 0, 0);
  const Vec3 tail(s.fuselage_length + 0.5 * s.fuselage_radius, 0, 0);
  for (int i = 0; i < N; ++i) {
    int j = (i + 1) % N;
    tris.push_back({nose, ring_pt(j, 0.0), ring_pt(i, 0.0)});
    tris.push_back({tail, ring_pt(i, s.fuselage_length), ring_pt(j, s.fuselage_length)});
  }

  const double apothem = s.fuselage_radius * std::cos(std::numbers::pi / N);
  const double half_h = s.fuselage_radius * std::sin(std::numbers::pi / N);
  const int ns = s.wing_span_segments;
  for (double side : {1.0, -1.0}) {
    auto xg = [&](int i) { return (m0 + i) * dx; };
    auto yg = [&](int j) { return side * (apothem + s.wing_span * j / ns); };
    for (int i = 0; i < nc; ++i) {
      for (int j = 0; j < ns; ++j) {
        quad(Vec3(xg(i), yg(j), half_h), Vec3(xg(i + 1), yg(j), half_h),
             Vec3(xg(i + 1), yg(j + 1), half_h), Vec3(xg(i), yg(j + 1), half_h));
        quad(Vec3(xg(i), yg(j), -half_h), Vec3(xg(i), yg(j + 1), -half_h),
             Vec3(xg(i + 1), yg(j + 1), -half_h), Vec3(xg(i + 1), yg(j), -half_h));
      }
    }
    for (int j = 0; j < ns; ++j) {
      for (double x : {xg(0), xg(nc)}) {
        quad(Vec3(x, yg(j), -half_h), Vec3(x, yg(j + 1), -half_h), Vec3(x, yg(j + 1), half_h),
             Vec3(x, yg(j), half_h));
      }
    }
    for (int i = 0; i < nc; ++i) {
      quad(Vec3(xg(i), yg(ns), -half_h), Vec3(xg(i + 1), yg(ns), -half_h),
           Vec3(xg(i + 1), yg(ns), half_h), Vec3(xg(i), yg(ns), half_h));
    }
  }

  std::map<std::array<long long, 3>, int> weld;
  std::vector<Vec3> verts;
  std::vector<SurfaceMesh::Facet> faces;
  auto vid = [&](const Vec3& p) {
    std::array<long long, 3> key{std::llround(p.x() * 1e7), std::llround(p.y() * 1e7),
                                 std::llround(p.z() * 1e7)};
    auto [it, inserted] = weld.emplace(key, static_cast<int>(verts.size()));
    if (inserted) verts.push_back(p);
    return it->second;
  };
  for (const auto& t : tris) faces.push_back({vid(t[0]), vid(t[1]), vid(t[2])});
  return SurfaceMesh(std::move(verts), std::move(faces));
}

// ---------------------------------------------------------------------------
// Geodesics

GeodesicField geodesics_from_graph(std::span<const Vec3> centers,
                                   const std::vector<std::vector<int>>& adjacency) {
  const int n = static_cast<int>(centers.size());
  if (static_cast<int>(adjacency.size()) != n) throw Error("adjacency size mismatch");
  GeodesicField geo;
  geo.dist.resize(n, n);
  const double inf = std::numeric_limits<double>::infinity();
  using Item = std::pair<double, int>;
  std::vector<double> d(n);
  for (int src = 0; src < n; ++src) {
    std::fill(d.begin(), d.end(), inf);
    d[src] = 0.0;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.emplace(0.0, src);
    while (!pq.empty()) {
      auto [du, u] = pq.top();
      pq.pop();
      if (du > d[u]) continue;
      for (int v : adjacency[u]) {
        double nd = du + (centers[u] - centers[v]).norm();
        if (nd < d[v]) {
          d[v] = nd;
          pq.emplace(nd, v);
        }
      }
    }
    for (int j = 0; j < n; ++j) {
      if (d[j] == inf) {
        throw Error("geodesic distance undefined: facets " + std::to_string(src) + " and " +
                    std::to_string(j) + " are not connected");
      }
      geo.dist(src, j) = d[j];
    }
  }
  // Mirror the upper triangle.
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < i; ++j) geo.dist(i, j) = geo.dist(j, i);
  }
  return geo;
}

GeodesicField compute_geodesics(const SurfaceMesh& mesh) {
  return geodesics_from_graph(mesh.centers(), mesh.adjacency());
}

GeodesicField compute_geodesics_cached(const SurfaceMesh& mesh,
                                       const std::filesystem::path& cache_dir) {
  char name[64];
  std::snprintf(name, sizeof(name), "geodesic_%016llx.bin",
                static_cast<unsigned long long>(mesh.content_hash()));
  const auto path = cache_dir / name;
  if (std::filesystem::exists(path)) {
    try {
      GeodesicField geo{load_matrix_binary(path)};
      if (geo.size() == mesh.num_facets()) return geo;
      log().warn("geodesic cache {} has wrong size; recomputing", path.string());
    } catch (const Error& e) {
      log().warn("ignoring unreadable geodesic cache: {}", e.what());
    }
  }
  GeodesicField geo = compute_geodesics(mesh);
  std::filesystem::create_directories(cache_dir);
  save_matrix_binary(geo.dist, path);
  return geo;
}

namespace {
constexpr char kMatrixMagic[8] = {'S', 'F', 'I', 'P', 'M', 'A', 'T', '1'};

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}
}  // namespace

void save_matrix_binary(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  if (m.rows() != m.cols()) throw Error("matrix sidecar requires a square matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kMatrixMagic, sizeof(kMatrixMagic));
  std::uint64_t n = to_le(static_cast<std::uint64_t>(m.rows()));
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(m(i, j)));
      out.write(reinterpret_cast<const char*>(&bits), sizeof(bits));
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

Eigen::MatrixXd load_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  std::uint64_t n = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (!in || std::memcmp(magic, kMatrixMagic, sizeof(magic)) != 0) {
    throw Error(path.string() + ": not a matrix sidecar file");
  }
  n = to_le(n);
  if (n > (1ULL << 20)) throw Error(path.string() + ": implausible matrix size");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::uint64_t bits = 0;
      in.read(reinterpret_cast<char*>(&bits), sizeof(bits));
      m(i, j) = std::bit_cast<double>(to_le(bits));
    }
  }
  if (!in) throw Error(path.string() + ": truncated matrix sidecar");
  return m;
}

}  // namespace surfipp
