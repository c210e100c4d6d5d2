#include "spectube/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace spectube {

ShortestPaths dijkstra(const TriMesh& mesh, const std::vector<std::pair<int, double>>& sources,
                       const std::vector<char>& allowed) {
    const auto n = mesh.vertex_count();
    ShortestPaths sp;
    sp.distance.assign(n, std::numeric_limits<double>::infinity());
    sp.parent.assign(n, -1);
    auto ok = [&](int v) { return allowed.empty() || allowed[static_cast<std::size_t>(v)]; };

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    for (auto [v, d] : sources) {
        if (!ok(v)) continue;
        if (d < sp.distance[static_cast<std::size_t>(v)]) {
            sp.distance[static_cast<std::size_t>(v)] = d;
            heap.emplace(d, v);
        }
    }
    std::vector<char> done(n, 0);
    while (!heap.empty()) {
        auto [d, v] = heap.top();
        heap.pop();
        if (done[static_cast<std::size_t>(v)]) continue;
        done[static_cast<std::size_t>(v)] = 1;
        for (int w : mesh.neighbors(v)) {
            if (!ok(w) || done[static_cast<std::size_t>(w)]) continue;
            const double nd = d + (mesh.position(w) - mesh.position(v)).norm();
            auto& cur = sp.distance[static_cast<std::size_t>(w)];
            auto& par = sp.parent[static_cast<std::size_t>(w)];
            if (nd < cur || (nd == cur && v < par)) {
                cur = nd;
                par = v;
                heap.emplace(nd, w);
            }
        }
    }
    return sp;
}

std::vector<int> extract_path(const ShortestPaths& sp, int target) {
    std::vector<int> path;
    if (target < 0 || !std::isfinite(sp.distance[static_cast<std::size_t>(target)])) return path;
    for (int v = target; v >= 0; v = sp.parent[static_cast<std::size_t>(v)]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<int> hop_distance(const TriMesh& mesh, const std::vector<int>& sources) {
    std::vector<int> hops(mesh.vertex_count(), std::numeric_limits<int>::max());
    std::deque<int> queue;
    for (int s : sources) {
        hops[static_cast<std::size_t>(s)] = 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        for (int w : mesh.neighbors(v)) {
            auto& h = hops[static_cast<std::size_t>(w)];
            if (h == std::numeric_limits<int>::max()) {
                h = hops[static_cast<std::size_t>(v)] + 1;
                queue.push_back(w);
            }
        }
    }
    return hops;
}

} // namespace spectube
