#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "surfipp/planner.hpp"

namespace surfipp {

/// Pairwise line of sight between library viewpoints, with Euclidean edge
/// lengths for detour routing.
struct LibraryGraph {
  std::vector<std::vector<char>> los;
  std::vector<std::vector<std::pair<int, double>>> adjacency;

  bool visible(int a, int b) const { return a == b || los[a][b] != 0; }
};
LibraryGraph build_library_graph(const ViewpointLibrary& lib, const WorldModel& world,
                                 const LosParams& los);

/// Dijkstra over the graph: library indices from `from` to `to` inclusive;
/// empty if unreachable.
std::vector<int> shortest_route(const LibraryGraph& graph, const ViewpointLibrary& lib, int from,
                                int to);

struct CoveragePlan {
  std::vector<int> order;                // selected viewpoints in sweep order
  std::vector<std::vector<int>> covered;  // facets each selected viewpoint sees
  std::vector<int> route;                // order with detours, closed back to its start
};

/// Greedy set cover of every facet some library viewpoint sees, ordered as
/// a level sweep that alternates angular direction per level. Consecutive
/// viewpoints without line of sight are joined through shortest detours.
CoveragePlan plan_coverage(const ViewpointLibrary& lib, const LibraryGraph& graph,
                           const Vec3& axis_point);

/// n viewpoint draws without replacement (with replacement if the library
/// is too small), each in line of sight of the previous one (graph given),
/// resampling at most 100 times. `start` (a library index or -1) is the
/// current pose; it is never drawn.
std::vector<int> plan_random(const ViewpointLibrary& lib, int n, std::uint64_t seed,
                             const LibraryGraph* graph = nullptr, int start = -1);

/// Alternative prior covariances scaled to a target trace.
Eigen::MatrixXd alt_covariance(const std::string& kind, int n, double target_trace,
                               std::uint64_t seed);

}  // namespace surfipp
