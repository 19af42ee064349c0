#include "surfipp/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>

#include "surfipp/log.hpp"

namespace surfipp {

LibraryGraph build_library_graph(const ViewpointLibrary& lib, const WorldModel& world,
                                 const LosParams& los) {
  const std::size_t n = lib.size();
  LibraryGraph g;
  g.los.assign(n, std::vector<char>(n, 0));
  g.adjacency.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.los[i][i] = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3& a = lib.viewpoints[i].position;
      const Vec3& b = lib.viewpoints[j].position;
      if (!line_of_sight(world, a, b, los.clearance, los.step)) continue;
      g.los[i][j] = g.los[j][i] = 1;
      const double d = (a - b).norm();
      g.adjacency[i].emplace_back(static_cast<int>(j), d);
      g.adjacency[j].emplace_back(static_cast<int>(i), d);
    }
  }
  return g;
}

std::vector<int> shortest_route(const LibraryGraph& graph, const ViewpointLibrary& lib, int from,
                                int to) {
  const auto n = static_cast<int>(lib.size());
  if (from < 0 || from >= n || to < 0 || to >= n) throw Error("route endpoint out of range");
  if (from == to) return {from};
  std::vector<double> dist(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<int> prev(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(from)] = 0.0;
  pq.emplace(0.0, from);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    if (u == to) break;
    for (const auto& [v, w] : graph.adjacency[static_cast<std::size_t>(u)]) {
      if (d + w < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = d + w;
        prev[static_cast<std::size_t>(v)] = u;
        pq.emplace(d + w, v);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(to)])) return {};
  std::vector<int> path;
  for (int v = to; v != -1; v = prev[static_cast<std::size_t>(v)]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

CoveragePlan plan_coverage(const ViewpointLibrary& lib, const LibraryGraph& graph,
                           const Vec3& axis_point) {
  CoveragePlan plan;
  if (lib.size() == 0) return plan;
  int max_facet = -1;
  for (const auto& o : lib.observations) {
    for (int f : o.facets) max_facet = std::max(max_facet, f);
  }
  std::vector<char> coverable(static_cast<std::size_t>(max_facet + 1), 0), covered = coverable;
  for (const auto& o : lib.observations) {
    for (int f : o.facets) coverable[static_cast<std::size_t>(f)] = 1;
  }

  // Greedy set cover: most newly covered facets, then lowest index.
  std::vector<int> selected;
  std::vector<char> used(lib.size(), 0);
  for (;;) {
    int best = -1, best_new = 0;
    for (std::size_t i = 0; i < lib.size(); ++i) {
      if (used[i]) continue;
      int fresh = 0;
      for (int f : lib.observations[i].facets) fresh += covered[static_cast<std::size_t>(f)] ? 0 : 1;
      if (fresh > best_new) {
        best_new = fresh;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    used[static_cast<std::size_t>(best)] = 1;
    selected.push_back(best);
    for (int f : lib.observations[static_cast<std::size_t>(best)].facets) {
      covered[static_cast<std::size_t>(f)] = 1;
    }
  }

  // Spiral sweep: levels bottom-up, angular direction alternating per level.
  auto angle = [&](int i) {
    const Vec3 d = lib.viewpoints[static_cast<std::size_t>(i)].position - axis_point;
    return std::atan2(d.y(), d.x());
  };
  std::vector<int> levels_seen;
  for (int i : selected) levels_seen.push_back(lib.levels[static_cast<std::size_t>(i)]);
  std::sort(levels_seen.begin(), levels_seen.end());
  levels_seen.erase(std::unique(levels_seen.begin(), levels_seen.end()), levels_seen.end());
  std::sort(selected.begin(), selected.end(), [&](int a, int b) {
    const int la = lib.levels[static_cast<std::size_t>(a)], lb = lib.levels[static_cast<std::size_t>(b)];
    if (la != lb) return la < lb;
    const auto rank = std::lower_bound(levels_seen.begin(), levels_seen.end(), la) - levels_seen.begin();
    const double aa = angle(a), ab = angle(b);
    if (aa != ab) return rank % 2 == 0 ? aa < ab : aa > ab;
    return a < b;
  });
  plan.order = selected;
  for (int i : selected) plan.covered.push_back(lib.observations[static_cast<std::size_t>(i)].facets);

  if (selected.empty()) return plan;
  plan.route.push_back(selected.front());
  auto connect = [&](int from, int to, bool include_target) {
    if (graph.visible(from, to)) {
      if (include_target) plan.route.push_back(to);
      return true;
    }
    const auto path = shortest_route(graph, lib, from, to);
    if (path.empty()) return false;
    for (std::size_t k = 1; k + 1 < path.size(); ++k) plan.route.push_back(path[k]);
    if (include_target) plan.route.push_back(to);
    return true;
  };
  for (std::size_t k = 1; k < selected.size(); ++k) {
    if (!connect(plan.route.back(), selected[k], true)) {
      log().warn("coverage: viewpoint {} unreachable from the sweep, skipped", selected[k]);
    }
  }
  if (plan.route.size() > 1 && !connect(plan.route.back(), plan.route.front(), false)) {
    log().warn("coverage: sweep cannot close its loop");
  }
  return plan;
}

std::vector<int> plan_random(const ViewpointLibrary& lib, int n, std::uint64_t seed,
                             const LibraryGraph* graph, int start) {
  if (n < 1) throw ConfigError("random planner needs N >= 1");
  std::vector<int> pool;
  for (int i = 0; i < static_cast<int>(lib.size()); ++i) {
    if (i != start) pool.push_back(i);
  }
  std::vector<int> out;
  if (pool.empty()) {
    log().warn("random planner: library has no viewpoint besides the current pose");
    return out;
  }
  const bool replace = static_cast<int>(pool.size()) < n;
  std::mt19937_64 rng(seed);
  int prev = start;
  for (int k = 0; k < n; ++k) {
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t slot = pick(rng);
      const int cand = pool[slot];
      if (cand == prev) continue;
      if (graph && prev >= 0 && !graph->visible(prev, cand)) continue;
      out.push_back(cand);
      if (!replace) pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(slot));
      prev = cand;
      ok = true;
    }
    if (!ok || pool.empty()) {
      if (!ok) log().warn("random planner: gave up after 100 draws at pick {}", k + 1);
      break;
    }
  }
  return out;
}

Eigen::MatrixXd alt_covariance(const std::string& kind, int n, double target_trace,
                               std::uint64_t seed) {
  if (n < 1) throw Error("alt_covariance needs n >= 1");
  if (!(target_trace > 0)) throw Error("alt_covariance needs a positive target trace");
  if (kind == "identity") {
    return Eigen::MatrixXd::Identity(n, n) * (target_trace / n);
  }
  if (kind == "random_spd") {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd a(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) a(i, j) = normal(rng);
    }
    Eigen::MatrixXd p = a.transpose() * a;
    p = 0.5 * (p + p.transpose()).eval();
    p *= target_trace / p.trace();
    return p;
  }
  throw ConfigError("ablation prior must be 'identity' or 'random_spd', got '" + kind + "'");
}

}  // namespace surfipp
