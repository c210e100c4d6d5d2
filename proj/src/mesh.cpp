#include "spectube/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>

#include "spectube/error.hpp"
#include "spectube/graph.hpp"

namespace spectube {

namespace {

std::uint64_t edge_key(int a, int b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
           static_cast<std::uint32_t>(b);
}

// CSR adjacency builder.
void build_csr(std::size_t n, const std::vector<std::pair<int, int>>& pairs, std::vector<int>& offsets,
               std::vector<int>& list) {
    offsets.assign(n + 1, 0);
    for (auto [a, b] : pairs) {
        (void)b;
        ++offsets[static_cast<std::size_t>(a) + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    list.assign(pairs.size(), 0);
    std::vector<int> fill(offsets.begin(), offsets.end() - 1);
    for (auto [a, b] : pairs) list[static_cast<std::size_t>(fill[static_cast<std::size_t>(a)]++)] = b;
    for (std::size_t v = 0; v < n; ++v)
        std::sort(list.begin() + offsets[v], list.begin() + offsets[v + 1]);
}

} // namespace

TriMesh::TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    const int nv = static_cast<int>(vertices_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const auto& fc = faces_[f];
        for (int v : fc)
            if (v < 0 || v >= nv)
                throw ParseError("face " + std::to_string(f) + " references vertex " + std::to_string(v) +
                                 " but the mesh has " + std::to_string(nv) + " vertices");
        if (fc[0] == fc[1] || fc[1] == fc[2] || fc[0] == fc[2])
            throw DegenerateFaceError("face " + std::to_string(f) + " repeats a vertex");
        if (face_area(static_cast<int>(f)) < kDegenerateAreaTolerance)
            throw DegenerateFaceError("face " + std::to_string(f) + " has area below 1e-12 mm^2");
    }

    // Undirected edges.
    std::unordered_map<std::uint64_t, int> edge_of;
    edge_of.reserve(faces_.size() * 2);
    face_edges_.resize(faces_.size());
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        for (int i = 0; i < 3; ++i) {
            int a = faces_[f][static_cast<std::size_t>(i)];
            int b = faces_[f][static_cast<std::size_t>((i + 1) % 3)];
            if (a > b) std::swap(a, b);
            auto [it, inserted] = edge_of.try_emplace(edge_key(a, b), static_cast<int>(edges_.size()));
            if (inserted) {
                edges_.push_back({a, b, static_cast<int>(f), -1});
            } else {
                auto& e = edges_[static_cast<std::size_t>(it->second)];
                if (e.f1 >= 0)
                    throw NonManifoldError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                                           ") is shared by more than two faces");
                e.f1 = static_cast<int>(f);
            }
            face_edges_[f][static_cast<std::size_t>(i)] = it->second;
        }
    }

    std::vector<std::pair<int, int>> nb;
    nb.reserve(edges_.size() * 2);
    for (const auto& e : edges_) {
        nb.emplace_back(e.v0, e.v1);
        nb.emplace_back(e.v1, e.v0);
    }
    build_csr(vertices_.size(), nb, neighbor_offsets_, neighbor_list_);

    std::vector<std::pair<int, int>> vf;
    vf.reserve(faces_.size() * 3);
    for (std::size_t f = 0; f < faces_.size(); ++f)
        for (int v : faces_[f]) vf.emplace_back(v, static_cast<int>(f));
    build_csr(vertices_.size(), vf, vface_offsets_, vface_list_);

    // Boundary loops, oriented as the faces induce them.
    std::unordered_map<int, std::vector<int>> next_on_boundary;
    for (const auto& e : edges_) {
        if (!e.is_boundary()) continue;
        const auto& fc = faces_[static_cast<std::size_t>(e.f0)];
        for (int i = 0; i < 3; ++i) {
            int a = fc[static_cast<std::size_t>(i)], b = fc[static_cast<std::size_t>((i + 1) % 3)];
            if ((a == e.v0 && b == e.v1) || (a == e.v1 && b == e.v0)) {
                next_on_boundary[a].push_back(b);
                break;
            }
        }
    }
    vertex_loop_.assign(vertices_.size(), -1);
    std::vector<int> starts;
    for (auto& [v, nexts] : next_on_boundary) {
        std::sort(nexts.begin(), nexts.end());
        starts.push_back(v);
    }
    std::sort(starts.begin(), starts.end());
    std::unordered_map<std::uint64_t, bool> used;
    for (int s : starts) {
        if (vertex_loop_[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> loop;
        int cur = s;
        while (true) {
            loop.push_back(cur);
            vertex_loop_[static_cast<std::size_t>(cur)] = static_cast<int>(loops_.size());
            int nxt = -1;
            for (int cand : next_on_boundary[cur]) {
                if (!used[edge_key(cur, cand)]) {
                    nxt = cand;
                    break;
                }
            }
            if (nxt < 0) break;
            used[edge_key(cur, nxt)] = true;
            if (nxt == s) break;
            cur = nxt;
            if (loop.size() > vertices_.size()) break;
        }
        loops_.push_back(std::move(loop));
    }
}

std::span<const int> TriMesh::neighbors(int v) const {
    const auto b = static_cast<std::size_t>(neighbor_offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(neighbor_offsets_[static_cast<std::size_t>(v) + 1]);
    return {neighbor_list_.data() + b, e - b};
}

std::span<const int> TriMesh::vertex_faces(int v) const {
    const auto b = static_cast<std::size_t>(vface_offsets_[static_cast<std::size_t>(v)]);
    const auto e = static_cast<std::size_t>(vface_offsets_[static_cast<std::size_t>(v) + 1]);
    return {vface_list_.data() + b, e - b};
}

int TriMesh::edge_index(int a, int b) const {
    for (int f : vertex_faces(a)) {
        const auto& fc = face(f);
        for (int i = 0; i < 3; ++i) {
            int x = fc[static_cast<std::size_t>(i)], y = fc[static_cast<std::size_t>((i + 1) % 3)];
            if ((x == a && y == b) || (x == b && y == a)) return face_edges(f)[static_cast<std::size_t>(i)];
        }
    }
    return -1;
}

int TriMesh::face_with_directed_edge(int a, int b) const {
    for (int f : vertex_faces(a)) {
        const auto& fc = face(f);
        for (int i = 0; i < 3; ++i)
            if (fc[static_cast<std::size_t>(i)] == a && fc[static_cast<std::size_t>((i + 1) % 3)] == b) return f;
    }
    return -1;
}

int TriMesh::adjacent_face(int f, int local_edge) const {
    const auto& e = edges_[static_cast<std::size_t>(face_edges(f)[static_cast<std::size_t>(local_edge)])];
    return e.other_face(f);
}

double TriMesh::face_area(int f) const {
    const auto& fc = face(f);
    return 0.5 * (position(fc[1]) - position(fc[0])).cross(position(fc[2]) - position(fc[0])).norm();
}

Vec3 TriMesh::face_normal(int f) const {
    const auto& fc = face(f);
    return (position(fc[1]) - position(fc[0])).cross(position(fc[2]) - position(fc[0])).normalized();
}

std::vector<Vec3> TriMesh::vertex_normals() const {
    std::vector<Vec3> n(vertex_count(), Vec3::Zero());
    for (std::size_t f = 0; f < face_count(); ++f) {
        const auto& fc = faces_[f];
        // Unnormalised cross product is area-weighted.
        const Vec3 w = (position(fc[1]) - position(fc[0])).cross(position(fc[2]) - position(fc[0]));
        for (int v : fc) n[static_cast<std::size_t>(v)] += w;
    }
    for (auto& x : n) {
        const double len = x.norm();
        if (len > 0) x /= len;
    }
    return n;
}

double TriMesh::mean_edge_length() const {
    if (edges_.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& e : edges_) sum += (position(e.v1) - position(e.v0)).norm();
    return sum / static_cast<double>(edges_.size());
}

double TriMesh::total_area() const {
    double a = 0.0;
    for (std::size_t f = 0; f < face_count(); ++f) a += face_area(static_cast<int>(f));
    return a;
}

int TriMesh::component_count() const {
    std::vector<int> comp(vertex_count(), -1);
    int count = 0;
    std::vector<int> stack;
    for (std::size_t s = 0; s < vertex_count(); ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = count;
        stack.push_back(static_cast<int>(s));
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : neighbors(v))
                if (comp[static_cast<std::size_t>(w)] < 0) {
                    comp[static_cast<std::size_t>(w)] = count;
                    stack.push_back(w);
                }
        }
        ++count;
    }
    return count;
}

TopologyReport validate_cylinder_topology(const TriMesh& mesh) {
    TopologyReport r;
    r.vertices = static_cast<int>(mesh.vertex_count());
    r.edges = static_cast<int>(mesh.edge_count());
    r.faces = static_cast<int>(mesh.face_count());
    r.euler_characteristic = r.vertices - r.edges + r.faces;
    r.components = mesh.component_count();
    r.boundary_count = static_cast<int>(mesh.boundary_loops().size());
    r.genus = (2 * r.components - r.boundary_count - r.euler_characteristic) / 2;
    r.is_cylinder = r.components == 1 && r.genus == 0 && r.boundary_count == 2;
    return r;
}

LoopParameterization boundary_arc_length_parameterization(const TriMesh& mesh, int loop_index,
                                                          int base_vertex, LoopOrientation orientation) {
    const auto& loops = mesh.boundary_loops();
    if (loop_index < 0 || loop_index >= static_cast<int>(loops.size()))
        throw VertexNotOnLoopError("boundary loop " + std::to_string(loop_index) + " does not exist");
    const auto& loop = loops[static_cast<std::size_t>(loop_index)];
    const auto it = std::find(loop.begin(), loop.end(), base_vertex);
    if (it == loop.end())
        throw VertexNotOnLoopError("vertex " + std::to_string(base_vertex) + " is not on boundary loop " +
                                   std::to_string(loop_index));

    LoopParameterization p;
    const std::size_t n = loop.size();
    const auto start = static_cast<std::size_t>(it - loop.begin());
    p.vertices.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t idx = orientation == LoopOrientation::Ccw ? (start + k) % n : (start + n - k) % n;
        p.vertices.push_back(loop[idx]);
    }
    std::vector<double> cumulative(n, 0.0);
    for (std::size_t k = 1; k < n; ++k)
        cumulative[k] = cumulative[k - 1] + (mesh.position(p.vertices[k]) - mesh.position(p.vertices[k - 1])).norm();
    p.length = cumulative[n - 1] + (mesh.position(p.vertices[0]) - mesh.position(p.vertices[n - 1])).norm();
    p.theta.resize(n);
    for (std::size_t k = 0; k < n; ++k) p.theta[k] = 2.0 * std::numbers::pi * cumulative[k] / p.length;
    return p;
}

TriMesh remove_caps(const TriMesh& mesh, int seed_a, int seed_b, double radius) {
    const auto sp = dijkstra(mesh, {{seed_a, 0.0}, {seed_b, 0.0}});
    std::vector<Face> kept;
    for (const auto& fc : mesh.faces()) {
        const bool inside = std::all_of(fc.begin(), fc.end(), [&](int v) {
            return sp.distance[static_cast<std::size_t>(v)] <= radius;
        });
        if (!inside) kept.push_back(fc);
    }
    std::vector<int> remap(mesh.vertex_count(), -1);
    for (const auto& fc : kept)
        for (int v : fc) remap[static_cast<std::size_t>(v)] = 0;
    std::vector<Vec3> verts;
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v)
        if (remap[v] == 0) {
            remap[v] = static_cast<int>(verts.size());
            verts.push_back(mesh.position(static_cast<int>(v)));
        }
    for (auto& fc : kept)
        for (int& v : fc) v = remap[static_cast<std::size_t>(v)];
    return TriMesh(std::move(verts), std::move(kept));
}

TriMesh transformed(const TriMesh& mesh, const Eigen::Affine3d& xf) {
    std::vector<Vec3> v;
    v.reserve(mesh.vertex_count());
    for (const auto& p : mesh.vertices()) v.push_back(xf * p);
    return TriMesh(std::move(v), mesh.faces());
}

TriMesh flipped_orientation(const TriMesh& mesh) {
    auto faces = mesh.faces();
    for (auto& f : faces) std::swap(f[1], f[2]);
    return TriMesh(mesh.vertices(), std::move(faces));
}

Vec3 surface_position(const TriMesh& mesh, const SurfacePoint& p) {
    const auto& fc = mesh.face(p.face);
    return p.bary[0] * mesh.position(fc[0]) + p.bary[1] * mesh.position(fc[1]) + p.bary[2] * mesh.position(fc[2]);
}

namespace {

// Closest point on triangle (Ericson, Real-Time Collision Detection 5.1.5), returned as barycentrics.
Vec3 closest_bary(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) return {1, 0, 0};
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) return {0, 1, 0};
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double v = d1 / (d1 - d3);
        return {1 - v, v, 0};
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) return {0, 0, 1};
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double w = d2 / (d2 - d6);
        return {1 - w, 0, w};
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return {0, 1 - w, w};
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return {1 - v - w, v, w};
}

} // namespace

SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& query, const std::vector<int>& faces) {
    SurfacePoint best;
    double best_d = std::numeric_limits<double>::infinity();
    for (int f : faces) {
        const auto& fc = mesh.face(f);
        const Vec3 b = closest_bary(query, mesh.position(fc[0]), mesh.position(fc[1]), mesh.position(fc[2]));
        const Vec3 x = b[0] * mesh.position(fc[0]) + b[1] * mesh.position(fc[1]) + b[2] * mesh.position(fc[2]);
        const double d = (x - query).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = {f, b};
        }
    }
    return best;
}

SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& query) {
    SurfacePoint best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const auto& fc = mesh.faces()[f];
        const Vec3 b = closest_bary(query, mesh.position(fc[0]), mesh.position(fc[1]), mesh.position(fc[2]));
        const Vec3 x = b[0] * mesh.position(fc[0]) + b[1] * mesh.position(fc[1]) + b[2] * mesh.position(fc[2]);
        const double d = (x - query).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = {static_cast<int>(f), b};
        }
    }
    return best;
}

} // namespace spectube
