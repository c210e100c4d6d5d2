#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "spectube/mesh.hpp"

namespace spectube {

/// Dijkstra over the mesh edge graph with Euclidean edge lengths.
struct ShortestPaths {
    std::vector<double> distance; ///< +inf where unreachable
    std::vector<int> parent;      ///< -1 for sources and unreachable vertices
};

/// `sources` carry an initial distance. `allowed` (may be empty) masks out vertices.
/// Ties are broken by vertex index so the result is deterministic.
ShortestPaths dijkstra(const TriMesh& mesh, const std::vector<std::pair<int, double>>& sources,
                       const std::vector<char>& allowed = {});

/// Walks parents back from `target`; empty if unreachable.
std::vector<int> extract_path(const ShortestPaths& sp, int target);

/// Hop count from every vertex to the nearest vertex in `sources` (BFS).
std::vector<int> hop_distance(const TriMesh& mesh, const std::vector<int>& sources);

} // namespace spectube
