#include "spectube/flatten.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>
#include <string>

#include <Eigen/SparseCholesky>

#include "spectube/error.hpp"
#include "spectube/graph.hpp"
#include "spectube/laplacian.hpp"

namespace spectube {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0 ? a + kTwoPi : a;
}

// Boundary vertices at the smallest positive hop distance from v.
std::vector<int> boundary_endpoints(const TriMesh& mesh, int v) {
    const auto hops = hop_distance(mesh, {v});
    int best = std::numeric_limits<int>::max();
    for (int u = 0; u < static_cast<int>(mesh.vertex_count()); ++u)
        if (u != v && mesh.is_boundary_vertex(u) && hops[static_cast<std::size_t>(u)] >= 0)
            best = std::min(best, hops[static_cast<std::size_t>(u)]);
    std::vector<int> out;
    for (int u = 0; u < static_cast<int>(mesh.vertex_count()); ++u)
        if (u != v && mesh.is_boundary_vertex(u) && hops[static_cast<std::size_t>(u)] == best) out.push_back(u);
    if (out.empty()) throw TopologyError("no boundary vertex is reachable from vertex " + std::to_string(v));
    return out;
}

std::vector<char> interior_mask(const TriMesh& mesh, const FiedlerField& field) {
    std::vector<char> allowed(mesh.vertex_count(), 0);
    for (int v = 0; v < static_cast<int>(mesh.vertex_count()); ++v)
        allowed[static_cast<std::size_t>(v)] = !mesh.is_boundary_vertex(v);
    allowed[static_cast<std::size_t>(field.min_vertex)] = 0;
    allowed[static_cast<std::size_t>(field.max_vertex)] = 0;
    return allowed;
}

// Mean |grad f| over the faces around each vertex, area weighted.
std::vector<double> vertex_gradient_norm(const TriMesh& mesh, const std::vector<double>& f) {
    std::vector<double> g(mesh.vertex_count(), 0.0), w(mesh.vertex_count(), 0.0);
    for (int fi = 0; fi < static_cast<int>(mesh.face_count()); ++fi) {
        const auto& c = mesh.face(fi);
        const Vec3 p0 = mesh.position(c[0]), e1 = mesh.position(c[1]) - p0, e2 = mesh.position(c[2]) - p0;
        const Vec3 n = e1.cross(e2);
        const double a2 = n.squaredNorm();
        if (!(a2 > 0)) continue;
        const double d1 = f[static_cast<std::size_t>(c[1])] - f[static_cast<std::size_t>(c[0])];
        const double d2 = f[static_cast<std::size_t>(c[2])] - f[static_cast<std::size_t>(c[0])];
        const double norm = ((d1 * e2.cross(n) + d2 * n.cross(e1)) / a2).norm();
        const double area = 0.5 * std::sqrt(a2);
        for (int v : c) {
            g[static_cast<std::size_t>(v)] += area * norm;
            w[static_cast<std::size_t>(v)] += area;
        }
    }
    for (std::size_t v = 0; v < g.size(); ++v)
        if (w[v] > 0) g[v] /= w[v];
    return g;
}

// Dijkstra over edges that climb the field at a slope of at least kMinRise of its local gradient.
// The seam then maps to a vertical segment of positive height per edge; a level edge on the
// cut would collapse its faces in the flattening.
constexpr double kMinRise = 0.3;

ShortestPaths ascending_paths(const TriMesh& mesh, const std::vector<double>& f, const std::vector<double>& grad,
                              const std::vector<std::pair<int, double>>& sources, const std::vector<char>& allowed) {
    const auto n = mesh.vertex_count();
    ShortestPaths sp{std::vector<double>(n, std::numeric_limits<double>::infinity()), std::vector<int>(n, -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    for (const auto& [v, d] : sources) {
        if (d < sp.distance[static_cast<std::size_t>(v)]) sp.distance[static_cast<std::size_t>(v)] = d;
        queue.emplace(d, v);
    }
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > sp.distance[static_cast<std::size_t>(v)]) continue;
        for (int w : mesh.neighbors(v)) {
            if (!allowed[static_cast<std::size_t>(w)]) continue;
            const double len = (mesh.position(w) - mesh.position(v)).norm();
            const double rise = f[static_cast<std::size_t>(w)] - f[static_cast<std::size_t>(v)];
            const double slope = 0.5 * (grad[static_cast<std::size_t>(v)] + grad[static_cast<std::size_t>(w)]);
            if (!(rise > 0.0) || rise < kMinRise * slope * len) continue;
            const double nd = d + len;
            auto& cur = sp.distance[static_cast<std::size_t>(w)];
            if (nd < cur || (nd == cur && v < sp.parent[static_cast<std::size_t>(w)])) {
                cur = nd;
                sp.parent[static_cast<std::size_t>(w)] = v;
                queue.emplace(nd, w);
            }
        }
    }
    return sp;
}

// Nearest target by path length, ties to the lower index.
int closest_target(const ShortestPaths& sp, const std::vector<int>& targets) {
    int best = -1;
    for (int t : targets)
        if (best < 0 || sp.distance[static_cast<std::size_t>(t)] < sp.distance[static_cast<std::size_t>(best)])
            best = t;
    if (best < 0 || !std::isfinite(sp.distance[static_cast<std::size_t>(best)])) return -1;
    return best;
}

struct FoldEnds {
    int fold = -1;
    double lo = 0.0; ///< theta of the low end, unwrapped around the centre
    double hi = 0.0;
    int lo_vertex = -1;
    int hi_vertex = -1;
};

FoldEnds fold_ends(const TriMesh& mesh, const TubeParameterization& param, const FoldSegment& fold, int index,
                   double t_ref) {
    FoldEnds e;
    e.fold = index;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    auto better = [&](int cand, int cur, double d, double dcur) {
        if (cur < 0 || d != dcur) return true;
        return std::abs(param.t[static_cast<std::size_t>(cand)] - t_ref) <
               std::abs(param.t[static_cast<std::size_t>(cur)] - t_ref);
    };
    for (int f : fold.faces)
        for (int v : mesh.face(f)) {
            const double d = std::remainder(param.theta[static_cast<std::size_t>(v)] - fold.theta_center, kTwoPi);
            if (d < lo || (d == lo && better(v, e.lo_vertex, d, lo))) {
                lo = d;
                e.lo_vertex = v;
            }
            if (d > hi || (d == hi && better(v, e.hi_vertex, d, hi))) {
                hi = d;
                e.hi_vertex = v;
            }
        }
    e.lo = fold.theta_center + lo;
    e.hi = fold.theta_center + hi;
    return e;
}

// Contour length of the level tau and area of {f <= tau}, summed over faces.
struct LevelMeasure {
    double length = 0.0;
    double area_below = 0.0;
};

LevelMeasure level_measure(const TriMesh& mesh, const std::vector<double>& f, double tau) {
    LevelMeasure m;
    for (int fi = 0; fi < static_cast<int>(mesh.face_count()); ++fi) {
        const auto& fc = mesh.face(fi);
        std::array<int, 3> c = fc;
        std::sort(c.begin(), c.end(), [&](int a, int b) {
            return f[static_cast<std::size_t>(a)] < f[static_cast<std::size_t>(b)] ||
                   (f[static_cast<std::size_t>(a)] == f[static_cast<std::size_t>(b)] && a < b);
        });
        const double f0 = f[static_cast<std::size_t>(c[0])], f1 = f[static_cast<std::size_t>(c[1])],
                     f2 = f[static_cast<std::size_t>(c[2])];
        const double area = mesh.face_area(fi);
        if (tau >= f2) m.area_below += area;
        else if (tau <= f0) {
        } else if (tau <= f1) m.area_below += area * (tau - f0) * (tau - f0) / ((f1 - f0) * (f2 - f0));
        else m.area_below += area * (1.0 - (f2 - tau) * (f2 - tau) / ((f2 - f0) * (f2 - f1)));

        Vec3 pts[2];
        int n = 0;
        for (int k = 0; k < 3; ++k) {
            const int a = fc[static_cast<std::size_t>(k)], b = fc[static_cast<std::size_t>((k + 1) % 3)];
            const double fa = f[static_cast<std::size_t>(a)], fb = f[static_cast<std::size_t>(b)];
            if ((fa < tau) != (fb < tau) && n < 2) {
                const double s = (tau - fa) / (fb - fa);
                pts[n++] = mesh.position(a) + s * (mesh.position(b) - mesh.position(a));
            }
        }
        if (n == 2) m.length += (pts[1] - pts[0]).norm();
    }
    return m;
}

} // namespace

const char* to_string(CutKind kind) { return kind == CutKind::Consistent ? "consistent" : "geodesic"; }

double CutPath::length(const TriMesh& mesh) const {
    double len = 0.0;
    for (std::size_t i = 1; i < vertices.size(); ++i) len += (mesh.position(vertices[i]) - mesh.position(vertices[i - 1])).norm();
    return len;
}

CutPath geodesic_cut(const TriMesh& mesh, const FiedlerField& field) {
    CutPath cut;
    cut.kind = CutKind::Geodesic;
    cut.min_extreme = field.min_vertex;
    cut.max_extreme = field.max_vertex;
    const auto S = boundary_endpoints(mesh, field.min_vertex), T = boundary_endpoints(mesh, field.max_vertex);
    auto allowed = interior_mask(mesh, field);
    std::vector<std::pair<int, double>> sources;
    for (int s : S) {
        allowed[static_cast<std::size_t>(s)] = 1;
        sources.emplace_back(s, 0.0);
    }
    for (int t : T) allowed[static_cast<std::size_t>(t)] = 1;
    const auto sp = ascending_paths(mesh, field.field.values, vertex_gradient_norm(mesh, field.field.values), sources,
                                    allowed);
    const int target = closest_target(sp, T);
    if (target < 0) throw DisconnectedCorridorError("no path joins the two extremes");
    cut.vertices = extract_path(sp, target);
    return cut;
}

CutPath extract_consistent_cut(const TriMesh& mesh, const FiedlerField& field, const TubeParameterization& param,
                               const std::vector<FoldSegment>& folds, const std::vector<LevelSetBundle>& bundles) {
    if (field.min_vertex == field.max_vertex) throw ConfigError("Fiedler extremes coincide");
    CutPath cut;
    cut.kind = CutKind::Consistent;
    cut.min_extreme = field.min_vertex;
    cut.max_extreme = field.max_vertex;

    std::vector<char> on_fold(mesh.vertex_count(), 0);
    for (const auto& fold : folds)
        for (int f : fold.faces)
            for (int v : mesh.face(f)) on_fold[static_cast<std::size_t>(v)] = 1;
    auto allowed = interior_mask(mesh, field);
    for (std::size_t v = 0; v < allowed.size(); ++v)
        if (on_fold[v]) allowed[v] = 0;

    // Bundles in order of t; each fold goes to the bundle whose range holds its t-midpoint.
    std::vector<int> order(bundles.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return bundles[static_cast<std::size_t>(a)].t1 < bundles[static_cast<std::size_t>(b)].t1;
    });
    std::vector<std::vector<int>> members(bundles.size());
    for (int i = 0; i < static_cast<int>(folds.size()); ++i) {
        const double tm = 0.5 * (folds[static_cast<std::size_t>(i)].t_min + folds[static_cast<std::size_t>(i)].t_max);
        int best = -1;
        double bd = std::numeric_limits<double>::infinity();
        for (int b = 0; b < static_cast<int>(bundles.size()); ++b) {
            const auto& B = bundles[static_cast<std::size_t>(b)];
            const double d = tm < B.t0 ? B.t0 - tm : (tm > B.t2 ? tm - B.t2 : 0.0);
            if (d < bd) {
                bd = d;
                best = b;
            }
        }
        if (best >= 0) members[static_cast<std::size_t>(best)].push_back(i);
    }

    const auto grad = vertex_gradient_norm(mesh, field.field.values);
    // Closeness to the previous gap is measured in theta; Euclidean distance across a bend would
    // favour the inner wall.
    double reference = param.theta[static_cast<std::size_t>(field.min_vertex)];
    std::vector<std::pair<int, double>> sources;
    for (int s : boundary_endpoints(mesh, field.min_vertex)) sources.emplace_back(s, 0.0);

    auto walk_to = [&](const std::vector<int>& targets) {
        auto mask = allowed;
        for (const auto& [s, d] : sources) mask[static_cast<std::size_t>(s)] = 1;
        for (int t : targets) mask[static_cast<std::size_t>(t)] = 1;
        const auto sp = ascending_paths(mesh, field.field.values, grad, sources, mask);
        const int target = closest_target(sp, targets);
        if (target < 0) return false;
        auto seg = extract_path(sp, target);
        if (!cut.vertices.empty() && cut.vertices.back() == seg.front()) seg.erase(seg.begin());
        for (int v : seg) {
            cut.vertices.push_back(v);
            allowed[static_cast<std::size_t>(v)] = 0;
        }
        sources = {{target, 0.0}};
        return true;
    };

    for (int b : order) {
        const auto& B = bundles[static_cast<std::size_t>(b)];
        auto& mem = members[static_cast<std::size_t>(b)];
        if (mem.empty()) continue;
        std::sort(mem.begin(), mem.end(), [&](int x, int y) {
            return folds[static_cast<std::size_t>(x)].theta_center < folds[static_cast<std::size_t>(y)].theta_center;
        });
        std::vector<FoldEnds> ends;
        for (int i : mem) ends.push_back(fold_ends(mesh, param, folds[static_cast<std::size_t>(i)], i, B.t1));

        // Gap k runs from fold k's high end to fold k+1's low end.
        struct Gap {
            double start, width, score;
            Vec3 mean;
        };
        std::vector<Gap> gaps;
        const int n = static_cast<int>(ends.size());
        for (int k = 0; k < n; ++k) {
            const auto& A = ends[static_cast<std::size_t>(k)];
            const auto& C = ends[static_cast<std::size_t>((k + 1) % n)];
            const auto& fa = folds[static_cast<std::size_t>(A.fold)];
            const auto& fc = folds[static_cast<std::size_t>(C.fold)];
            double span = wrap_2pi(fc.theta_center - fa.theta_center);
            if (n == 1 || span == 0.0) span = kTwoPi;
            const double width = span - (A.hi - fa.theta_center) - (fc.theta_center - C.lo);
            if (width <= 0.0) continue;
            const double start = wrap_2pi(A.hi);
            gaps.push_back({start, width, std::abs(std::remainder(start + 0.5 * width - reference, kTwoPi)),
                            0.5 * (mesh.position(A.hi_vertex) + mesh.position(C.lo_vertex))});
        }
        if (gaps.empty()) throw NoGapError("folds of bundle " + std::to_string(b) + " cover every theta");
        std::stable_sort(gaps.begin(), gaps.end(), [](const Gap& x, const Gap& y) { return x.score < y.score; });

        // Nearest gap first; a gap the cut cannot climb into falls through to the next one.
        bool reached = false;
        for (const auto& g : gaps) {
            int waypoint = -1;
            double wd = std::numeric_limits<double>::infinity();
            for (int v = 0; v < static_cast<int>(mesh.vertex_count()); ++v) {
                if (!allowed[static_cast<std::size_t>(v)]) continue;
                const double t = field.field.values[static_cast<std::size_t>(v)];
                if (t < B.t0 || t > B.t2) continue;
                const double off = wrap_2pi(param.theta[static_cast<std::size_t>(v)] - g.start);
                if (off <= 0.0 || off >= g.width) continue;
                const double d = (mesh.position(v) - g.mean).norm();
                if (d < wd) {
                    wd = d;
                    waypoint = v;
                }
            }
            if (waypoint < 0 || !walk_to({waypoint})) continue;
            reference = g.start + 0.5 * g.width;
            reached = true;
            break;
        }
        if (!reached) throw DisconnectedCorridorError("no fold-free path reaches a gap of bundle " + std::to_string(b));
    }
    if (!walk_to(boundary_endpoints(mesh, field.max_vertex))) {
        // A rotationally symmetric end ties its whole ring for the maximum; any tied vertex is an
        // equally valid extreme, and climbing edges may only reach some of them.
        std::vector<int> targets, owner;
        for (int v = 0; v < static_cast<int>(mesh.vertex_count()); ++v) {
            if (v == field.max_vertex || field.field.values[static_cast<std::size_t>(v)] < 1.0 - 1e-9) continue;
            for (int t : boundary_endpoints(mesh, v))
                if (t != field.max_vertex) {
                    targets.push_back(t);
                    owner.push_back(v);
                }
        }
        if (targets.empty() || !walk_to(targets))
            throw DisconnectedCorridorError("no fold-free path reaches the Fiedler maximum");
        for (std::size_t i = 0; i < targets.size(); ++i)
            if (targets[i] == cut.vertices.back()) {
                cut.max_extreme = owner[i];
                break;
            }
    }
    validate_cut(mesh, cut, folds);
    return cut;
}

void validate_cut(const TriMesh& mesh, const CutPath& cut, const std::vector<FoldSegment>& folds) {
    const auto& p = cut.vertices;
    if (p.size() < 2) throw TopologyError("cut has fewer than two vertices");
    std::vector<char> seen(mesh.vertex_count(), 0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (seen[static_cast<std::size_t>(p[i])]) throw TopologyError("cut repeats vertex " + std::to_string(p[i]));
        seen[static_cast<std::size_t>(p[i])] = 1;
        if (i > 0 && mesh.edge_index(p[i - 1], p[i]) < 0)
            throw TopologyError("cut vertices " + std::to_string(p[i - 1]) + " and " + std::to_string(p[i]) +
                                " share no edge");
    }
    if (cut.kind != CutKind::Consistent) return;
    std::vector<char> on_fold(mesh.vertex_count(), 0);
    for (const auto& fold : folds)
        for (int f : fold.faces)
            for (int v : mesh.face(f)) on_fold[static_cast<std::size_t>(v)] = 1;
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
        if (on_fold[static_cast<std::size_t>(p[i])])
            throw TopologyError("consistent cut touches a fold at vertex " + std::to_string(p[i]));
}

int FlatMesh::euler_characteristic() const {
    std::vector<std::pair<int, int>> edges;
    for (const auto& f : faces)
        for (int k = 0; k < 3; ++k) edges.emplace_back(std::minmax(f[static_cast<std::size_t>(k)], f[static_cast<std::size_t>((k + 1) % 3)]));
    std::sort(edges.begin(), edges.end());
    const auto ne = std::unique(edges.begin(), edges.end()) - edges.begin();
    return static_cast<int>(uv.size()) - static_cast<int>(ne) + static_cast<int>(faces.size());
}

std::vector<double> axial_coordinate(const TriMesh& mesh, const ScalarField& field, int knots) {
    const auto& f = field.values;
    std::vector<double> vals = f;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.size() < 2) throw ConfigError("axial coordinate needs a non-constant field");
    const int K = std::max(2, std::min(knots, static_cast<int>(vals.size())));
    std::vector<double> tau(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
        tau[static_cast<std::size_t>(k)] =
            vals[static_cast<std::size_t>(std::lround(static_cast<double>(k) * (vals.size() - 1) / (K - 1)))];

    std::vector<LevelMeasure> m(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) m[static_cast<std::size_t>(k)] = level_measure(mesh, f, tau[static_cast<std::size_t>(k)]);
    std::vector<double> lengths;
    for (const auto& x : m)
        if (x.length > 0) lengths.push_back(x.length);
    std::nth_element(lengths.begin(), lengths.begin() + static_cast<std::ptrdiff_t>(lengths.size() / 2), lengths.end());
    // Near a point-like extreme the level length vanishes; the floor keeps the spacing finite.
    const double floor = lengths.empty() ? 1.0 : 0.5 * lengths[lengths.size() / 2];

    std::vector<double> s(static_cast<std::size_t>(K), 0.0);
    for (int k = 1; k < K; ++k) {
        const auto& a = m[static_cast<std::size_t>(k - 1)];
        const auto& b = m[static_cast<std::size_t>(k)];
        s[static_cast<std::size_t>(k)] = s[static_cast<std::size_t>(k - 1)] +
                                         (b.area_below - a.area_below) / std::max(0.5 * (a.length + b.length), floor);
    }
    std::vector<double> out(f.size());
    for (std::size_t v = 0; v < f.size(); ++v) {
        const auto it = std::lower_bound(tau.begin(), tau.end(), f[v]);
        const auto hi = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - tau.begin(), 1, K - 1));
        const double w = (f[v] - tau[hi - 1]) / (tau[hi] - tau[hi - 1]);
        out[v] = s[hi - 1] + std::clamp(w, 0.0, 1.0) * (s[hi] - s[hi - 1]);
    }
    return out;
}

Eigen::Matrix2d face_jacobian(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec2& q0, const Vec2& q1,
                              const Vec2& q2) {
    const Vec3 a = p1 - p0, b = p2 - p0;
    const Vec3 e1 = a.normalized();
    const Vec3 e2 = (a.cross(b)).cross(a).normalized();
    Eigen::Matrix2d P, Q;
    P << a.dot(e1), b.dot(e1), a.dot(e2), b.dot(e2);
    Q.col(0) = q1 - q0;
    Q.col(1) = q2 - q0;
    return Q * P.inverse();
}

double angle_distortion(const FlatMesh& flat) {
    double sum = 0.0, area = 0.0;
    for (std::size_t i = 0; i < flat.faces.size(); ++i) {
        const auto& f = flat.faces[i];
        const Vec3& p0 = flat.positions[static_cast<std::size_t>(f[0])];
        const Vec3& p1 = flat.positions[static_cast<std::size_t>(f[1])];
        const Vec3& p2 = flat.positions[static_cast<std::size_t>(f[2])];
        const double a = 0.5 * (p1 - p0).cross(p2 - p0).norm();
        if (!(a > kDegenerateAreaTolerance)) throw DegenerateFaceError("face " + std::to_string(i) + " has zero area");
        const Eigen::Matrix2d J =
            i < flat.jacobians.size()
                ? flat.jacobians[i]
                : face_jacobian(p0, p1, p2, flat.uv[static_cast<std::size_t>(f[0])], flat.uv[static_cast<std::size_t>(f[1])],
                                flat.uv[static_cast<std::size_t>(f[2])]);
        const double det = std::abs(J.determinant());
        if (!(det > 0.0)) throw DegenerateFaceError("face " + std::to_string(i) + " collapses in the plane");
        // s1/s2 + s2/s1 = (s1^2 + s2^2) / (s1 s2) = |J|_F^2 / |det J|.
        sum += a * J.squaredNorm() / det;
        area += a;
    }
    if (!(area > 0.0)) throw DegenerateFaceError("flat mesh has no area");
    return sum / area;
}

FlatMesh flatten(const TriMesh& mesh, const CutPath& cut, const FiedlerField& field) {
    validate_cut(mesh, cut);
    const auto& p = cut.vertices;
    const int la = mesh.loop_of_vertex(p.front()), lb = mesh.loop_of_vertex(p.back());
    if (la < 0 || lb < 0 || la == lb) throw TopologyError("cut must join the two boundary loops");
    for (std::size_t i = 1; i + 1 < p.size(); ++i)
        if (mesh.is_boundary_vertex(p[i])) throw TopologyError("cut interior touches the boundary");

    std::vector<char> cut_edge(mesh.edge_count(), 0);
    for (std::size_t i = 1; i < p.size(); ++i) cut_edge[static_cast<std::size_t>(mesh.edge_index(p[i - 1], p[i]))] = 1;

    FlatMesh flat;
    flat.kind = cut.kind;
    flat.faces = mesh.faces();
    flat.positions = mesh.vertices();
    flat.source_vertex.resize(mesh.vertex_count());
    std::iota(flat.source_vertex.begin(), flat.source_vertex.end(), 0);

    // Split the face fan of every cut vertex at the cut edges; the side left of the cut keeps
    // the vertex, the right side gets a copy.
    std::vector<int> dup(mesh.vertex_count(), -1);
    int left_start_neighbor = -1, left_end_neighbor = -1;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const int v = p[i];
        const auto fan = mesh.vertex_faces(v);
        std::vector<int> parent(fan.size());
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
            return x;
        };
        for (std::size_t a = 0; a < fan.size(); ++a)
            for (std::size_t b = a + 1; b < fan.size(); ++b) {
                // Faces sharing a non-cut edge at v stay together.
                const auto& fa = mesh.face(fan[a]);
                for (int w : mesh.face(fan[b])) {
                    if (w == v || std::find(fa.begin(), fa.end(), w) == fa.end()) continue;
                    if (!cut_edge[static_cast<std::size_t>(mesh.edge_index(v, w))])
                        parent[static_cast<std::size_t>(find(static_cast<int>(a)))] = find(static_cast<int>(b));
                }
            }
        const int left_face = i + 1 < p.size() ? mesh.face_with_directed_edge(v, p[i + 1])
                                                : mesh.face_with_directed_edge(p[i - 1], v);
        if (left_face < 0) throw TopologyError("cut edge at vertex " + std::to_string(v) + " has no left face");
        int left_group = -1;
        for (std::size_t a = 0; a < fan.size(); ++a)
            if (fan[a] == left_face) left_group = find(static_cast<int>(a));
        const int copy = static_cast<int>(flat.positions.size());
        dup[static_cast<std::size_t>(v)] = copy;
        flat.positions.push_back(mesh.position(v));
        flat.source_vertex.push_back(v);
        for (std::size_t a = 0; a < fan.size(); ++a) {
            if (find(static_cast<int>(a)) == left_group) continue;
            for (int& w : flat.faces[static_cast<std::size_t>(fan[a])])
                if (w == v) w = copy;
        }
        // The boundary neighbour on the left side fixes which way theta runs along each loop.
        if (i == 0 || i + 1 == p.size()) {
            const auto& loop = mesh.boundary_loops()[static_cast<std::size_t>(mesh.loop_of_vertex(v))];
            const auto pos = static_cast<std::size_t>(std::find(loop.begin(), loop.end(), v) - loop.begin());
            for (int nb : {loop[(pos + 1) % loop.size()], loop[(pos + loop.size() - 1) % loop.size()]}) {
                int bf = mesh.face_with_directed_edge(v, nb);
                if (bf < 0) bf = mesh.face_with_directed_edge(nb, v);
                for (std::size_t a = 0; a < fan.size(); ++a)
                    if (fan[a] == bf && find(static_cast<int>(a)) == left_group) (i == 0 ? left_start_neighbor : left_end_neighbor) = nb;
            }
        }
    }
    if (left_start_neighbor < 0 || left_end_neighbor < 0) throw TopologyError("cannot orient the boundary loops");

    const TriMesh opened(flat.positions, flat.faces);
    const int nv = static_cast<int>(opened.vertex_count());
    const auto ploop = [&](int loop, int base, int left_nb) {
        auto lp = boundary_arc_length_parameterization(mesh, loop, base, LoopOrientation::Ccw);
        if (lp.vertices.size() > 1 && lp.vertices[1] != left_nb)
            lp = boundary_arc_length_parameterization(mesh, loop, base, LoopOrientation::Cw);
        return lp;
    };
    const auto pa = ploop(la, p.front(), left_start_neighbor), pb = ploop(lb, p.back(), left_end_neighbor);
    flat.width = 0.5 * (pa.length + pb.length);

    std::vector<double> u(static_cast<std::size_t>(nv), 0.0);
    std::vector<char> fixed(static_cast<std::size_t>(nv), 0);
    for (const auto* lp : {&pa, &pb})
        for (std::size_t k = 0; k < lp->vertices.size(); ++k) {
            u[static_cast<std::size_t>(lp->vertices[k])] = lp->theta[k] / kTwoPi * flat.width;
            fixed[static_cast<std::size_t>(lp->vertices[k])] = 1;
        }
    for (int v : p) {
        u[static_cast<std::size_t>(v)] = 0.0;
        u[static_cast<std::size_t>(dup[static_cast<std::size_t>(v)])] = flat.width;
        fixed[static_cast<std::size_t>(v)] = fixed[static_cast<std::size_t>(dup[static_cast<std::size_t>(v)])] = 1;
    }

    const auto L = cotangent_laplacian(opened).matrix;
    std::vector<int> slot(static_cast<std::size_t>(nv), -1);
    int ni = 0;
    for (int v = 0; v < nv; ++v)
        if (!fixed[static_cast<std::size_t>(v)]) slot[static_cast<std::size_t>(v)] = ni++;
    if (ni > 0) {
        std::vector<Eigen::Triplet<double>> trip;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(ni);
        for (int c = 0; c < L.outerSize(); ++c)
            for (SparseMatrix::InnerIterator it(L, c); it; ++it) {
                const int r = static_cast<int>(it.row());
                const int sr = slot[static_cast<std::size_t>(r)];
                if (sr < 0) continue;
                const int sc = slot[static_cast<std::size_t>(c)];
                if (sc >= 0) trip.emplace_back(sr, sc, it.value());
                else rhs[sr] -= it.value() * u[static_cast<std::size_t>(c)];
            }
        SparseMatrix A(ni, ni);
        A.setFromTriplets(trip.begin(), trip.end());
        Eigen::SimplicialLDLT<SparseMatrix> solver(A);
        if (solver.info() != Eigen::Success) throw FlipError("harmonic system could not be factored");
        const Eigen::VectorXd x = solver.solve(rhs);
        for (int v = 0; v < nv; ++v)
            if (slot[static_cast<std::size_t>(v)] >= 0) u[static_cast<std::size_t>(v)] = x[slot[static_cast<std::size_t>(v)]];
    }

    const auto axial = axial_coordinate(mesh, field.field);
    flat.height = *std::max_element(axial.begin(), axial.end());
    flat.uv.resize(static_cast<std::size_t>(nv));
    for (int v = 0; v < nv; ++v)
        flat.uv[static_cast<std::size_t>(v)] = {u[static_cast<std::size_t>(v)],
                                                axial[static_cast<std::size_t>(flat.source_vertex[static_cast<std::size_t>(v)])]};

    auto signed_area = [&](const Face& f) {
        const Vec2 a = flat.uv[static_cast<std::size_t>(f[1])] - flat.uv[static_cast<std::size_t>(f[0])];
        const Vec2 b = flat.uv[static_cast<std::size_t>(f[2])] - flat.uv[static_cast<std::size_t>(f[0])];
        return a.x() * b.y() - a.y() * b.x();
    };
    double total = 0.0;
    for (const auto& f : flat.faces) total += signed_area(f);
    if (total < 0)
        for (auto& q : flat.uv) q.x() = flat.width - q.x();

    int flips = 0, first_flip = -1;
    flat.jacobians.reserve(flat.faces.size());
    for (const auto& f : flat.faces) {
        if (signed_area(f) <= 0.0 && flips++ == 0) first_flip = static_cast<int>(&f - flat.faces.data());
        flat.jacobians.push_back(face_jacobian(flat.positions[static_cast<std::size_t>(f[0])],
                                               flat.positions[static_cast<std::size_t>(f[1])],
                                               flat.positions[static_cast<std::size_t>(f[2])],
                                               flat.uv[static_cast<std::size_t>(f[0])], flat.uv[static_cast<std::size_t>(f[1])],
                                               flat.uv[static_cast<std::size_t>(f[2])]));
    }
    if (flips > 0)
        throw FlipError(std::to_string(flips) + " faces flipped after flattening, first is face " +
                        std::to_string(first_flip));
    flat.distortion = angle_distortion(flat);
    return flat;
}

} // namespace spectube
