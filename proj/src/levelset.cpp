#include "spectube/levelset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "spectube/error.hpp"
#include "spectube/log.hpp"
#include "spectube/parallel.hpp"

namespace spectube {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kBaryEps = 1e-12;

double value(const ScalarField& f, int v) { return f.values[static_cast<std::size_t>(v)]; }

// Gradients of the three barycentric coordinates of face f.
std::array<Vec3, 3> bary_gradients(const TriMesh& mesh, int f) {
    const auto& fc = mesh.face(f);
    const Vec3& p0 = mesh.position(fc[0]);
    const Vec3& p1 = mesh.position(fc[1]);
    const Vec3& p2 = mesh.position(fc[2]);
    const Vec3 cross = (p1 - p0).cross(p2 - p0);
    const double twice_area = cross.norm();
    const Vec3 n = cross / twice_area;
    return {n.cross(p2 - p1) / twice_area, n.cross(p0 - p2) / twice_area, n.cross(p1 - p0) / twice_area};
}

int corner_of(const Face& f, int v) {
    for (int i = 0; i < 3; ++i)
        if (f[i] == v) return i;
    return -1;
}

int opposite_corner(const Face& f, int a, int b) {
    for (int i = 0; i < 3; ++i)
        if (f[i] != a && f[i] != b) return i;
    return -1;
}

} // namespace

Vec3 face_gradient(const TriMesh& mesh, const ScalarField& field, int face) {
    const auto g = bary_gradients(mesh, face);
    const auto& fc = mesh.face(face);
    return value(field, fc[0]) * g[0] + value(field, fc[1]) * g[1] + value(field, fc[2]) * g[2];
}

std::vector<Vec3> LevelSet::points() const {
    std::vector<Vec3> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.point);
    return out;
}

std::vector<Vec3> LevelSet::polyline() const {
    auto out = points();
    if (closed && !out.empty()) out.push_back(out.front());
    return out;
}

Vec3 LevelSet::centroid() const {
    const auto pts = polyline();
    Vec3 acc = Vec3::Zero();
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double len = (pts[i + 1] - pts[i]).norm();
        acc += len * 0.5 * (pts[i] + pts[i + 1]);
        total += len;
    }
    if (total <= 0.0) {
        for (const auto& p : pts) acc += p;
        return pts.empty() ? acc : Vec3(acc / static_cast<double>(pts.size()));
    }
    return acc / total;
}

std::vector<LevelSet> extract_level_set(const TriMesh& mesh, const ScalarField& field, double t) {
    double iso = t;
    for (bool hit = true; hit;) {
        hit = std::any_of(field.values.begin(), field.values.end(), [&](double x) { return x == iso; });
        if (hit) iso += 1e-12;
    }

    const auto& edges = mesh.edges();
    std::vector<double> alpha(edges.size(), -1.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
        const double a = value(field, edges[e].v0) - iso, b = value(field, edges[e].v1) - iso;
        if ((a < 0) != (b < 0)) alpha[e] = a / (a - b);
    }

    // Directed segment per face: from crossing edge `from` to crossing edge `to`.
    std::map<int, std::pair<int, int>> next; // edge -> (next edge, face)
    std::map<int, int> has_prev;
    for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
        const auto& fe = mesh.face_edges(f);
        const auto& fc = mesh.face(f);
        int lone = -1;
        for (int c = 0; c < 3; ++c) {
            // The lone corner is the one whose two incident edges (c and c+2) both cross.
            if (alpha[static_cast<std::size_t>(fe[c])] >= 0 && alpha[static_cast<std::size_t>(fe[(c + 2) % 3])] >= 0) lone = c;
        }
        if (lone < 0) continue;
        const bool lone_high = value(field, fc[lone]) > iso;
        const int from = lone_high ? fe[(lone + 2) % 3] : fe[lone];
        const int to = lone_high ? fe[lone] : fe[(lone + 2) % 3];
        next[from] = {to, f};
        has_prev[to] = 1;
    }
    if (next.empty() && has_prev.empty())
        throw EmptyLevelSetError("level t=" + std::to_string(t) + " does not intersect the mesh");

    auto make_sample = [&](int e, int face) {
        LevelSetSample s;
        const auto& ed = edges[static_cast<std::size_t>(e)];
        s.edge = e;
        s.alpha = alpha[static_cast<std::size_t>(e)];
        s.point = (1.0 - s.alpha) * mesh.position(ed.v0) + s.alpha * mesh.position(ed.v1);
        s.anchor.face = face;
        const auto& fc = mesh.face(face);
        s.anchor.bary = Vec3::Zero();
        s.anchor.bary[corner_of(fc, ed.v0)] = 1.0 - s.alpha;
        s.anchor.bary[corner_of(fc, ed.v1)] = s.alpha;
        return s;
    };

    std::vector<char> visited(edges.size(), 0);
    std::vector<std::pair<int, LevelSet>> loops; // keyed by smallest edge index
    auto walk = [&](int start, bool closed) {
        LevelSet ls;
        ls.t = t;
        ls.closed = closed;
        int e = start, last_face = -1, key = start;
        while (e >= 0 && !visited[static_cast<std::size_t>(e)]) {
            visited[static_cast<std::size_t>(e)] = 1;
            key = std::min(key, e);
            auto it = next.find(e);
            const int face = it != next.end() ? it->second.second : last_face;
            ls.samples.push_back(make_sample(e, face));
            if (it == next.end()) break;
            last_face = face;
            e = it->second.first;
        }
        if (closed) {
            const auto pos = std::find_if(ls.samples.begin(), ls.samples.end(), [&](const auto& s) { return s.edge == key; });
            std::rotate(ls.samples.begin(), pos, ls.samples.end());
        }
        // Contours through a nudged vertex produce near-coincident samples; keep one.
        std::vector<LevelSetSample> kept;
        for (const auto& s : ls.samples)
            if (kept.empty() || (s.point - kept.back().point).norm() > 1e-9 * (1.0 + s.point.norm())) kept.push_back(s);
        if (closed && kept.size() > 1 && (kept.back().point - kept.front().point).norm() <= 1e-9 * (1.0 + kept.front().point.norm()))
            kept.pop_back();
        ls.samples = std::move(kept);
        const auto pts = ls.polyline();
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) ls.total_length += (pts[i + 1] - pts[i]).norm();
        loops.emplace_back(key, std::move(ls));
    };
    for (const auto& [e, nx] : next)
        if (!has_prev.count(e)) walk(e, false);
    for (const auto& [e, nx] : next)
        if (!visited[static_cast<std::size_t>(e)]) walk(e, true);
    std::sort(loops.begin(), loops.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<LevelSet> out;
    for (auto& [k, ls] : loops) out.push_back(std::move(ls));
    return out;
}

std::vector<LevelSet> uniform_level_sets(const TriMesh& mesh, const ScalarField& field, int n) {
    std::vector<std::vector<LevelSet>> per_level(static_cast<std::size_t>(std::max(n, 0)));
    std::vector<std::string> failures(per_level.size());
    parallel_for(n, [&](int i) {
        const double t = static_cast<double>(i + 1) / (n + 1);
        try {
            per_level[static_cast<std::size_t>(i)] = extract_level_set(mesh, field, t);
        } catch (const EmptyLevelSetError&) {
            failures[static_cast<std::size_t>(i)] = "level t=" + std::to_string(t) + " is empty; skipped";
        }
    });
    std::vector<LevelSet> out;
    for (int i = 0; i < n; ++i) {
        auto& loops = per_level[static_cast<std::size_t>(i)];
        if (!failures[static_cast<std::size_t>(i)].empty()) {
            notice(failures[static_cast<std::size_t>(i)]);
            continue;
        }
        const LevelSet* best = nullptr;
        for (const auto& l : loops)
            if (l.closed && (!best || l.total_length > best->total_length)) best = &l;
        if (!best) {
            notice("level t=" + std::to_string(static_cast<double>(i + 1) / (n + 1)) + " has no closed contour; skipped");
            continue;
        }
        if (loops.size() > 1)
            notice("level t=" + std::to_string(best->t) + " has " + std::to_string(loops.size()) +
                   " contours; kept the longest closed one");
        out.push_back(*best);
    }
    return out;
}

Vec3 IntegrationCurve::point_at(double value) const {
    if (points.empty()) return Vec3::Zero();
    if (value <= t.front()) return points.front();
    if (value >= t.back()) return points.back();
    const auto it = std::upper_bound(t.begin(), t.end(), value);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double a = (value - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - a) * points[i - 1] + a * points[i];
}

double IntegrationCurve::length() const {
    double len = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) len += (points[i] - points[i - 1]).norm();
    return len;
}

IntegrationCurve trace_integration_curve(const TriMesh& mesh, const ScalarField& field, const SurfacePoint& start,
                                         double theta, const TraceOptions& options) {
    int start_loop = -1;
    for (int c = 0; c < 3; ++c)
        if (start.bary[c] > kBaryEps && mesh.is_boundary_vertex(mesh.face(start.face)[c]))
            start_loop = mesh.loop_of_vertex(mesh.face(start.face)[c]);
    if (start_loop < 0) throw VertexNotOnLoopError("integration curve must start on a boundary loop");

    int face = start.face;
    Vec3 bary = start.bary;
    IntegrationCurve curve;
    curve.theta = theta;

    auto field_at = [&] {
        const auto& fc = mesh.face(face);
        return bary[0] * value(field, fc[0]) + bary[1] * value(field, fc[1]) + bary[2] * value(field, fc[2]);
    };
    auto record = [&] {
        const double tv = field_at();
        if (!curve.t.empty() && !(tv > curve.t.back())) return false;
        curve.points.push_back(surface_position(mesh, {face, bary}));
        curve.t.push_back(tv);
        curve.anchors.push_back({face, bary});
        return true;
    };
    auto where = [&] { return "face " + std::to_string(face) + " at t=" + std::to_string(field_at()); };
    auto on_target = [&](int v) { return mesh.is_boundary_vertex(v) && mesh.loop_of_vertex(v) != start_loop; };
    auto move_to_vertex = [&](int v) {
        const int f = mesh.vertex_faces(v)[0];
        face = f;
        bary = Vec3::Zero();
        bary[corner_of(mesh.face(f), v)] = 1.0;
    };
    // Walks along the face gradient until the point leaves the face.
    auto step_in_face = [&](int f, const Vec3& b) {
        const Vec3 g = face_gradient(mesh, field, f);
        if (g.norm() < options.min_gradient)
            throw StagnationError("gradient vanishes in face " + std::to_string(f));
        const auto G = bary_gradients(mesh, f);
        Vec3 db(G[0].dot(g), G[1].dot(g), G[2].dot(g));
        double s = std::numeric_limits<double>::infinity();
        int hit = -1;
        for (int i = 0; i < 3; ++i)
            if (db[i] < 0 && b[i] > kBaryEps && -b[i] / db[i] < s) {
                s = -b[i] / db[i];
                hit = i;
            }
        if (hit < 0) throw StagnationError("no exit from face " + std::to_string(f));
        face = f;
        bary = b + s * db;
        bary[hit] = 0.0;
        for (int i = 0; i < 3; ++i) bary[i] = std::max(0.0, bary[i]);
        bary /= bary.sum();
    };
    auto enters = [&](int f, int corner) {
        // True if the gradient of f points into f across the edge opposite `corner`.
        const auto G = bary_gradients(mesh, f);
        return G[corner].dot(face_gradient(mesh, field, f)) > 0.0;
    };

    record();
    int stall = 0;
    const long max_steps = 20L * static_cast<long>(mesh.face_count()) + 1000;
    for (long step = 0;; ++step) {
        if (step > max_steps) throw StagnationError("trace did not terminate near " + where());
        const auto& fc = mesh.face(face);
        int zeros = 0, zero_corner = -1, one_corner = -1;
        for (int i = 0; i < 3; ++i) {
            if (bary[i] <= kBaryEps) {
                ++zeros;
                zero_corner = i;
            }
            if (bary[i] >= 1.0 - kBaryEps) one_corner = i;
        }

        if (zeros >= 2 && one_corner >= 0) {
            const int v = fc[one_corner];
            if (on_target(v)) break;
            int best = -1;
            double best_mag = 0.0;
            for (int F : mesh.vertex_faces(v)) {
                const int c = corner_of(mesh.face(F), v);
                const Vec3 g = face_gradient(mesh, field, F);
                const auto G = bary_gradients(mesh, F);
                const double d0 = G[c].dot(g), d1 = G[(c + 1) % 3].dot(g), d2 = G[(c + 2) % 3].dot(g);
                const double tol = 1e-12 * g.norm() * std::max(G[c].norm(), 1.0);
                if (d0 < 0 && d1 >= -tol && d2 >= -tol && g.norm() > best_mag) {
                    best = F;
                    best_mag = g.norm();
                }
            }
            if (best >= 0 && best_mag >= options.min_gradient) {
                Vec3 b = Vec3::Zero();
                b[corner_of(mesh.face(best), v)] = 1.0;
                step_in_face(best, b);
            } else {
                int up = -1;
                double slope = 0.0;
                for (int u : mesh.neighbors(v)) {
                    const double s = (value(field, u) - value(field, v)) / (mesh.position(u) - mesh.position(v)).norm();
                    if (s > slope) {
                        slope = s;
                        up = u;
                    }
                }
                if (up < 0) throw StagnationError("local maximum at vertex " + std::to_string(v) + " (t=" +
                                                  std::to_string(value(field, v)) + ")");
                move_to_vertex(up);
            }
        } else if (zeros == 1) {
            const int a = fc[(zero_corner + 1) % 3], b = fc[(zero_corner + 2) % 3];
            const int e = mesh.edge_index(a, b);
            if (mesh.edges()[static_cast<std::size_t>(e)].is_boundary() && on_target(a) && on_target(b)) break;
            const int other = mesh.adjacent_face(face, (zero_corner + 1) % 3);
            if (enters(face, zero_corner)) {
                step_in_face(face, bary);
            } else if (other >= 0 && enters(other, opposite_corner(mesh.face(other), a, b))) {
                const auto& oc = mesh.face(other);
                Vec3 ob = Vec3::Zero();
                ob[corner_of(oc, a)] = bary[(zero_corner + 1) % 3];
                ob[corner_of(oc, b)] = bary[(zero_corner + 2) % 3];
                step_in_face(other, ob);
            } else {
                // Both sides push back onto the edge: slide toward the larger endpoint.
                const int up = value(field, a) > value(field, b) || (value(field, a) == value(field, b) && a > b) ? a : b;
                move_to_vertex(up);
            }
        } else {
            step_in_face(face, bary);
        }
        stall = record() ? 0 : stall + 1;
        if (stall > options.stagnation_steps) throw StagnationError("no progress for " + std::to_string(stall) +
                                                                    " steps near " + where());
    }
    // Make sure the arrival point is the last sample even if it did not raise t.
    if (curve.anchors.empty() || curve.anchors.back().face != face || curve.anchors.back().bary != bary) {
        const double tv = field_at();
        if (tv > curve.t.back()) {
            curve.points.push_back(surface_position(mesh, {face, bary}));
            curve.t.push_back(tv);
            curve.anchors.push_back({face, bary});
        }
    }
    return curve;
}

TubeParameterization parameterize_tube(const TriMesh& mesh, const ScalarField& field, int base_vertex,
                                       const ParameterizationOptions& options) {
    const int loop = mesh.loop_of_vertex(base_vertex);
    if (loop < 0) throw VertexNotOnLoopError("base vertex " + std::to_string(base_vertex) + " is not on a boundary loop");
    if (mesh.boundary_loops().size() != 2) throw TopologyError("parameterisation needs exactly two boundary loops");
    TubeParameterization P;
    P.base_vertex = base_vertex;
    P.base_loop = loop;
    P.orientation = options.orientation;
    P.boundary = boundary_arc_length_parameterization(mesh, loop, base_vertex, options.orientation);
    P.t = field.values;

    const int K = options.n_curves;
    const auto& lv = P.boundary.vertices;
    const int m = static_cast<int>(lv.size());
    P.curves.resize(static_cast<std::size_t>(K));
    parallel_for(K, [&](int k) {
        const double th = kTwoPi * k / K;
        int i = static_cast<int>(std::upper_bound(P.boundary.theta.begin(), P.boundary.theta.end(), th) -
                                 P.boundary.theta.begin()) - 1;
        i = std::clamp(i, 0, m - 1);
        const double th0 = P.boundary.theta[static_cast<std::size_t>(i)];
        const double th1 = i + 1 < m ? P.boundary.theta[static_cast<std::size_t>(i + 1)] : kTwoPi;
        const double a = (th - th0) / (th1 - th0);
        const int u = lv[static_cast<std::size_t>(i)], w = lv[static_cast<std::size_t>((i + 1) % m)];
        const int e = mesh.edge_index(u, w);
        const int f = mesh.edges()[static_cast<std::size_t>(e)].f0;
        SurfacePoint sp{f, Vec3::Zero()};
        sp.bary[corner_of(mesh.face(f), u)] = 1.0 - a;
        sp.bary[corner_of(mesh.face(f), w)] += a;
        P.curves[static_cast<std::size_t>(k)] = trace_integration_curve(mesh, field, sp, th, options.trace);
    });

    const int n = static_cast<int>(mesh.vertex_count());
    P.theta.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < m; ++i) P.theta[static_cast<std::size_t>(lv[static_cast<std::size_t>(i)])] = P.boundary.theta[static_cast<std::size_t>(i)];
    parallel_for(n, [&](int v) {
        if (mesh.loop_of_vertex(v) == loop) return;
        const double tv = value(field, v);
        const Vec3& p = mesh.position(v);
        std::vector<Vec3> q(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) q[static_cast<std::size_t>(k)] = P.curves[static_cast<std::size_t>(k)].point_at(tv);
        double best = std::numeric_limits<double>::infinity(), theta = 0.0;
        for (int k = 0; k < K; ++k) {
            const Vec3& a = q[static_cast<std::size_t>(k)];
            const Vec3& b = q[static_cast<std::size_t>((k + 1) % K)];
            const Vec3 ab = b - a;
            const double len2 = ab.squaredNorm();
            const double s = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
            const double d = (a + s * ab - p).squaredNorm();
            if (d < best) {
                best = d;
                theta = kTwoPi * (k + s) / K;
            }
        }
        P.theta[static_cast<std::size_t>(v)] = std::fmod(theta, kTwoPi);
    });
    return P;
}

Centerline centerline(const TriMesh& mesh, const ScalarField& field, int n_levels) {
    Centerline c;
    for (const auto& ls : uniform_level_sets(mesh, field, n_levels)) {
        c.points.push_back(ls.centroid());
        c.t.push_back(ls.t);
    }
    return c;
}

Vec3 corresponding_point(const Centerline& src, const Centerline& dst, const Vec3& query) {
    if (src.points.empty() || dst.points.empty()) throw EmptyCenterlineError("centerline has no points");
    if (src.points.size() != dst.points.size())
        throw EmptyCenterlineError("centerlines have different point counts (" + std::to_string(src.points.size()) +
                                   " vs " + std::to_string(dst.points.size()) + ")");
    std::size_t best = 0;
    for (std::size_t i = 1; i < src.points.size(); ++i)
        if ((src.points[i] - query).squaredNorm() < (src.points[best] - query).squaredNorm()) best = i;
    return dst.points[best];
}

} // namespace spectube
