#include "spectube/folds.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <Eigen/Eigenvalues>

#include "spectube/error.hpp"
#include "spectube/log.hpp"

namespace spectube {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0 ? a + kTwoPi : a;
}

double lerp_at(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto i = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const double a = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    return (1 - a) * ys[i - 1] + a * ys[i];
}

Vec3 interpolated_normal(const TriMesh& mesh, const std::vector<Vec3>& normals, const SurfacePoint& sp) {
    const auto& fc = mesh.face(sp.face);
    return sp.bary[0] * normals[static_cast<std::size_t>(fc[0])] + sp.bary[1] * normals[static_cast<std::size_t>(fc[1])] +
           sp.bary[2] * normals[static_cast<std::size_t>(fc[2])];
}

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= v.size()) return v.back();
    return v[i] + (pos - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

LevelSet longest_closed(std::vector<LevelSet> loops) {
    LevelSet best;
    best.samples.clear();
    double len = -1;
    for (auto& l : loops)
        if (l.closed && l.total_length > len) {
            len = l.total_length;
            best = std::move(l);
        }
    return best;
}

} // namespace

double CurvatureProfile::kappa_at(double value) const { return lerp_at(t, kappa, value); }

CurvatureProfile normal_curvature_profile(const TriMesh& mesh, const IntegrationCurve& curve,
                                          const CurvatureOptions& options) {
    return normal_curvature_profile(mesh, mesh.vertex_normals(), curve, options);
}

CurvatureProfile normal_curvature_profile(const TriMesh& mesh, const std::vector<Vec3>& normals,
                                          const IntegrationCurve& curve, const CurvatureOptions& options) {
    if (curve.points.size() < 3) throw TooFewSamplesError("integration curve has fewer than 3 samples");
    const double h = options.spacing > 0 ? options.spacing : 2.0 * mesh.mean_edge_length();

    std::vector<double> arc(curve.points.size(), 0.0);
    for (std::size_t i = 1; i < arc.size(); ++i) arc[i] = arc[i - 1] + (curve.points[i] - curve.points[i - 1]).norm();
    const int m = static_cast<int>(std::floor(arc.back() / h)) + 1;
    if (m < 3) throw TooFewSamplesError("integration curve is shorter than two curvature steps");

    std::vector<Vec3> p(static_cast<std::size_t>(m)), n(static_cast<std::size_t>(m));
    std::vector<double> tv(static_cast<std::size_t>(m));
    std::size_t seg = 1;
    for (int k = 0; k < m; ++k) {
        const double s = k * h;
        while (seg + 1 < arc.size() && arc[seg] < s) ++seg;
        const double len = arc[seg] - arc[seg - 1];
        const double a = len > 0 ? std::clamp((s - arc[seg - 1]) / len, 0.0, 1.0) : 0.0;
        p[static_cast<std::size_t>(k)] = (1 - a) * curve.points[seg - 1] + a * curve.points[seg];
        tv[static_cast<std::size_t>(k)] = (1 - a) * curve.t[seg - 1] + a * curve.t[seg];
        const Vec3 na = interpolated_normal(mesh, normals, curve.anchors[seg - 1]);
        const Vec3 nb = interpolated_normal(mesh, normals, curve.anchors[seg]);
        n[static_cast<std::size_t>(k)] = ((1 - a) * na + a * nb).normalized() * options.normal_sign;
    }

    CurvatureProfile prof;
    prof.curve_theta = curve.theta;
    for (int k = 1; k + 1 < m; ++k) {
        const auto i = static_cast<std::size_t>(k);
        prof.t.push_back(tv[i]);
        prof.kappa.push_back((p[i + 1] - 2.0 * p[i] + p[i - 1]).dot(n[i]) / (h * h));
    }

    const auto& K = prof.kappa;
    const auto& T = prof.t;
    std::vector<int> crossing_after; // index i: sign change between i and i+1
    for (std::size_t i = 0; i + 1 < K.size(); ++i) {
        if ((K[i] < 0) != (K[i + 1] < 0)) {
            const double a = K[i] / (K[i] - K[i + 1]);
            prof.inflections.push_back(T[i] + a * (T[i + 1] - T[i]));
            crossing_after.push_back(static_cast<int>(i));
        }
    }
    // Negative lobes strictly between two inflections.
    for (std::size_t c = 0; c + 1 < crossing_after.size(); ++c) {
        const int lo = crossing_after[c] + 1, hi = crossing_after[c + 1];
        if (K[static_cast<std::size_t>(lo)] >= 0) continue;
        int j = lo;
        for (int i = lo; i <= hi; ++i)
            if (K[static_cast<std::size_t>(i)] < K[static_cast<std::size_t>(j)]) j = i;
        const auto J = static_cast<std::size_t>(j);
        if (!(K[J] < -options.min_curvature)) continue;
        double tj = T[J], kj = K[J];
        if (j > 0 && J + 1 < K.size()) {
            const double denom = K[J - 1] - 2.0 * K[J] + K[J + 1];
            if (denom > 0) {
                const double d = std::clamp(0.5 * (K[J - 1] - K[J + 1]) / denom, -0.5, 0.5);
                tj = d >= 0 ? T[J] + d * (T[J + 1] - T[J]) : T[J] + d * (T[J] - T[J - 1]);
                kj = K[J] - 0.25 * (K[J - 1] - K[J + 1]) * d;
            }
        }
        prof.min_points.push_back(tj);
        prof.min_values.push_back(kj);
    }
    return prof;
}

FittingPlane fit_plane(const std::vector<Vec3>& samples) {
    if (samples.size() < 3) throw DegenerateGeometryError("plane fit needs at least 3 samples");
    Vec3 c = Vec3::Zero();
    for (const auto& p : samples) c += p;
    c /= static_cast<double>(samples.size());
    Eigen::Matrix3d A = Eigen::Matrix3d::Zero();
    for (const auto& p : samples) A += (p - c) * (p - c).transpose();
    A /= static_cast<double>(samples.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(A);
    const Vec3 ev = es.eigenvalues(); // ascending
    if (!(ev[1] > 1e-12 * std::max(ev[2], 1e-300)) || !(ev[2] > 0))
        throw DegenerateGeometryError("samples are collinear");
    FittingPlane P;
    P.center = c;
    P.e1 = es.eigenvectors().col(2);
    P.e2 = es.eigenvectors().col(1);
    P.normal = P.e1.cross(P.e2).normalized();
    P.eigenvalues = Vec3(ev[2], ev[1], ev[0]);
    return P;
}

FittingPlane fit_plane(const LevelSet& level_set) { return fit_plane(level_set.points()); }

std::vector<LevelSetBundle> build_bundles(const TriMesh& mesh, const ScalarField& field,
                                          const std::vector<CurvatureProfile>& profiles,
                                          const std::vector<LevelSet>& initial_levels, const BundleOptions& options,
                                          std::vector<LevelSet>* retained) {
    struct Vote {
        double t0, t1, t2;
        int curve;
    };
    std::vector<Vote> votes;
    for (std::size_t c = 0; c < profiles.size(); ++c) {
        const auto& pr = profiles[c];
        for (double tm : pr.min_points) {
            const auto up = std::upper_bound(pr.inflections.begin(), pr.inflections.end(), tm);
            if (up == pr.inflections.begin() || up == pr.inflections.end()) continue;
            votes.push_back({*(up - 1), tm, *up, static_cast<int>(c)});
        }
    }
    std::sort(votes.begin(), votes.end(), [](const Vote& a, const Vote& b) {
        return a.t1 != b.t1 ? a.t1 < b.t1 : a.curve < b.curve;
    });

    const double gap = 0.5 / std::max(options.n_levels, 1);
    std::vector<std::vector<Vote>> clusters;
    for (const auto& v : votes) {
        if (clusters.empty() || v.t1 - clusters.back().back().t1 > gap) clusters.emplace_back();
        clusters.back().push_back(v);
    }

    struct Candidate {
        double t0, t1, t2;
        std::set<int> curves;
    };
    std::vector<Candidate> cands;
    const double needed = options.quorum * static_cast<double>(profiles.size());
    for (auto& cl : clusters) {
        std::set<int> curves;
        for (const auto& v : cl) curves.insert(v.curve);
        if (static_cast<double>(curves.size()) < needed) continue;
        std::vector<double> w, t1s;
        for (const auto& v : cl) w.push_back(v.t2 - v.t0);
        const double wmed = quantile(w, 0.5);
        Candidate c{1e300, 0, -1e300, curves};
        for (const auto& v : cl) {
            // Shallow lobes at the ends of a fold can be much wider than its body.
            if (v.t2 - v.t0 > 3.0 * wmed) continue;
            c.t0 = std::min(c.t0, v.t0);
            c.t2 = std::max(c.t2, v.t2);
            t1s.push_back(v.t1);
        }
        c.t1 = quantile(t1s, 0.5);
        if (!cands.empty() && c.t0 <= cands.back().t2) {
            auto& prev = cands.back();
            prev.t0 = std::min(prev.t0, c.t0);
            prev.t2 = std::max(prev.t2, c.t2);
            prev.curves.insert(c.curves.begin(), c.curves.end());
            prev.t1 = 0.5 * (prev.t1 + c.t1);
        } else {
            cands.push_back(std::move(c));
        }
    }

    std::vector<LevelSetBundle> bundles;
    const int n_dense = std::max(8, options.dense_levels);
    for (const auto& c : cands) {
        LevelSetBundle b;
        b.t0 = c.t0;
        b.t1 = c.t1;
        b.t2 = c.t2;
        b.votes = static_cast<int>(c.curves.size());
        for (int k = 0; k < n_dense; ++k) {
            const double t = c.t0 + (c.t2 - c.t0) * (k + 1) / (n_dense + 1);
            try {
                LevelSet ls = longest_closed(extract_level_set(mesh, field, t));
                if (ls.samples.size() >= 3) b.level_sets.push_back(std::move(ls));
            } catch (const EmptyLevelSetError&) {
            }
        }
        if (b.level_sets.size() < 2) {
            notice("bundle at t=" + std::to_string(c.t1) + " has fewer than 2 closed level sets; dropped");
            continue;
        }
        try {
            b.fitting_plane = fit_plane(b.level_sets[b.level_sets.size() / 2]);
        } catch (const DegenerateGeometryError&) {
            notice("bundle at t=" + std::to_string(c.t1) + " has a degenerate middle level; dropped");
            continue;
        }
        bundles.push_back(std::move(b));
    }
    if (retained) {
        retained->clear();
        for (const auto& l : initial_levels)
            for (const auto& b : bundles)
                if (l.t >= b.t0 && l.t <= b.t2) {
                    retained->push_back(l);
                    break;
                }
    }
    return bundles;
}

Vec2 LevelAlignment::map(const Vec3& p, const FittingPlane& reference) const {
    Vec3 q = p - plane.center;
    q -= q.dot(plane.normal) * plane.normal;
    q = rotation * q;
    return {q.dot(reference.e1), q.dot(reference.e2)};
}

AlignedBundle project_and_align(const LevelSetBundle& bundle, bool orient_normals) {
    if (bundle.level_sets.size() < 2) throw DegenerateGeometryError("bundle needs at least 2 level sets");
    AlignedBundle out;
    out.reference = bundle.fitting_plane;
    const Vec3 ns = out.reference.normal;
    for (const auto& ls : bundle.level_sets) {
        LevelAlignment a;
        a.t = ls.t;
        a.plane = fit_plane(ls);
        if (orient_normals && a.plane.normal.dot(ns) < 0) {
            a.plane.normal = -a.plane.normal;
            a.plane.e2 = -a.plane.e2;
        }
        const Vec3 axis = a.plane.normal.cross(ns);
        const double s = axis.norm(), c = a.plane.normal.dot(ns);
        if (s > 1e-12) {
            a.rotation = Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
        } else if (c < 0) {
            // Antiparallel: any axis orthogonal to the reference normal turns one onto the other.
            a.rotation = Eigen::AngleAxisd(std::numbers::pi, out.reference.e1).toRotationMatrix();
            out.used_fallback_axis = true;
        }
        std::vector<Vec2> curve;
        for (const auto& p : ls.points()) curve.push_back(a.map(p, out.reference));
        out.curves.push_back(std::move(curve));
        out.levels.push_back(std::move(a));
    }
    return out;
}

std::vector<double> projected_lengths(const AlignedBundle& aligned, const TubeParameterization& param) {
    std::vector<double> out;
    for (const auto& curve : param.curves) {
        double len = 0.0;
        Vec2 prev;
        for (std::size_t j = 0; j < aligned.levels.size(); ++j) {
            const auto& lv = aligned.levels[j];
            const Vec2 q = lv.map(curve.point_at(lv.t), aligned.reference);
            if (j > 0) len += (q - prev).norm();
            prev = q;
        }
        out.push_back(len);
    }
    return out;
}

namespace {

struct Extremum {
    double index; ///< fractional index (plateau midpoint)
    double value;
};

// Circular peaks with plateau collapse and a prominence floor.
std::vector<Extremum> circular_peaks(const std::vector<double>& y, double min_prominence, std::vector<int>* peak_runs,
                                     std::vector<std::pair<int, int>>* runs_out) {
    const int K = static_cast<int>(y.size());
    // Runs of equal values, rotated so the sequence starts at a run boundary.
    int start = 0;
    while (start < K && y[static_cast<std::size_t>(start)] == y[static_cast<std::size_t>((start + K - 1) % K)]) ++start;
    std::vector<std::pair<int, int>> runs; // (first index, length)
    if (start == K) return {};
    for (int i = 0; i < K;) {
        const int idx = (start + i) % K;
        int len = 1;
        while (i + len < K && y[static_cast<std::size_t>((start + i + len) % K)] == y[static_cast<std::size_t>(idx)]) ++len;
        runs.emplace_back(idx, len);
        i += len;
    }
    const int R = static_cast<int>(runs.size());
    auto val = [&](int r) { return y[static_cast<std::size_t>(runs[static_cast<std::size_t>(((r % R) + R) % R)].first)]; };
    std::vector<Extremum> peaks;
    for (int r = 0; r < R; ++r) {
        const double v = val(r);
        if (!(v > val(r - 1) && v > val(r + 1))) continue;
        // Prominence: lowest point on the way to a higher peak on each side.
        double left_min = v, right_min = v;
        bool left_higher = false, right_higher = false;
        for (int k = 1; k < R; ++k) {
            const double w = val(r - k);
            if (w > v) {
                left_higher = true;
                break;
            }
            left_min = std::min(left_min, w);
        }
        for (int k = 1; k < R; ++k) {
            const double w = val(r + k);
            if (w > v) {
                right_higher = true;
                break;
            }
            right_min = std::min(right_min, w);
        }
        double base;
        if (left_higher && right_higher) base = std::max(left_min, right_min);
        else if (left_higher) base = left_min;
        else if (right_higher) base = right_min;
        else base = std::min(left_min, right_min);
        if (v - base < min_prominence) continue;
        const auto& run = runs[static_cast<std::size_t>(r)];
        peaks.push_back({run.first + 0.5 * (run.second - 1), v});
        if (peak_runs) peak_runs->push_back(r);
    }
    if (runs_out) *runs_out = runs;
    std::sort(peaks.begin(), peaks.end(), [&](const Extremum& a, const Extremum& b) {
        return std::fmod(a.index, K) < std::fmod(b.index, K);
    });
    return peaks;
}

// Lowest point strictly between two fractional indices going forward around the circle.
Extremum circular_min_between(const std::vector<double>& y, double from, double to) {
    const int K = static_cast<int>(y.size());
    double span = to - from;
    if (span <= 0) span += K;
    const int first = static_cast<int>(std::floor(from)) + 1;
    const int last = static_cast<int>(std::ceil(from + span)) - 1;
    double best = 1e300;
    int lo = -1, hi = -1;
    for (int i = first; i <= last; ++i) {
        const double v = y[static_cast<std::size_t>(((i % K) + K) % K)];
        if (v < best) {
            best = v;
            lo = hi = i;
        } else if (v == best && hi == i - 1) {
            hi = i;
        }
    }
    if (lo < 0) return {from + 0.5 * span, y[static_cast<std::size_t>(static_cast<int>(std::floor(from)) % K)]};
    return {0.5 * (lo + hi), best};
}

// Centroid (in fractional index) of the length above the higher bounding minimum.
double length_centroid(const std::vector<double>& y, double from, double to) {
    const int K = static_cast<int>(y.size());
    double span = to - from;
    if (span <= 0) span += K;
    const auto at = [&](double i) { return y[static_cast<std::size_t>(((static_cast<int>(std::lround(i)) % K) + K) % K)]; };
    const double floor = std::max(at(from), at(from + span));
    double w = 0.0, acc = 0.0;
    for (int i = static_cast<int>(std::floor(from)) + 1; i < from + span; ++i) {
        const double h = std::max(0.0, at(i) - floor);
        w += h;
        acc += h * i;
    }
    return w > 0 ? acc / w : from + 0.5 * span;
}

std::vector<int> largest_component(const TriMesh& mesh, const std::vector<int>& faces) {
    std::set<int> in(faces.begin(), faces.end());
    std::set<int> seen;
    std::vector<int> best;
    for (int f0 : faces) {
        if (seen.count(f0)) continue;
        std::vector<int> comp, stack{f0};
        seen.insert(f0);
        while (!stack.empty()) {
            const int f = stack.back();
            stack.pop_back();
            comp.push_back(f);
            for (int e = 0; e < 3; ++e) {
                const int g = mesh.adjacent_face(f, e);
                if (g >= 0 && in.count(g) && !seen.count(g)) {
                    seen.insert(g);
                    stack.push_back(g);
                }
            }
        }
        if (comp.size() > best.size()) best = std::move(comp);
    }
    std::sort(best.begin(), best.end());
    return best;
}

} // namespace

std::vector<FoldSegment> segment_folds(const TriMesh& mesh, const LevelSetBundle& bundle, const AlignedBundle& aligned,
                                       const TubeParameterization& param, const std::vector<CurvatureProfile>& profiles,
                                       const SegmentOptions& options) {
    const std::vector<double> L = projected_lengths(aligned, param);
    const int K = static_cast<int>(L.size());
    const double mx = *std::max_element(L.begin(), L.end());
    const double mn = *std::min_element(L.begin(), L.end());
    if (!(mx > 0) || mx - mn < options.flat_tolerance * mx)
        throw NoExtremaError("projected curve length is flat in theta for bundle t=[" + std::to_string(bundle.t0) + ", " +
                             std::to_string(bundle.t2) + "]");
    const auto peaks = circular_peaks(L, options.prominence * mx, nullptr, nullptr);
    if (peaks.empty()) throw NoExtremaError("no prominent maximum of projected curve length");

    const int P = static_cast<int>(peaks.size());
    std::vector<double> bound(static_cast<std::size_t>(P)); // boundary before peak p
    for (int p = 0; p < P; ++p) {
        const auto& prev = peaks[static_cast<std::size_t>((p + P - 1) % P)];
        const auto& cur = peaks[static_cast<std::size_t>(p)];
        bound[static_cast<std::size_t>(p)] = circular_min_between(L, P == 1 ? cur.index : prev.index, cur.index).index;
    }
    const double dth = kTwoPi / K;
    auto idx_theta = [&](double idx) { return wrap_2pi(idx * dth); };

    // Fold index for a theta: the peak whose [bound_p, bound_{p+1}) interval contains it.
    auto fold_of = [&](double th) {
        if (P == 1) return 0;
        for (int p = 0; p < P; ++p) {
            const double a = idx_theta(bound[static_cast<std::size_t>(p)]);
            const double b = idx_theta(bound[static_cast<std::size_t>((p + 1) % P)]);
            const double x = wrap_2pi(th - a), span = wrap_2pi(b - a);
            if (x < span) return p;
        }
        return P - 1;
    };

    // Negative lobes of the nearest traced curve; blending neighbours would smear the fold sides.
    // Only lobes deep enough to carry a curvature minimum count, which keeps out the gentle
    // negative curvature of a bend's inner wall.
    auto in_lobe = [&](double th, double t) {
        const auto& pr = profiles[static_cast<std::size_t>(static_cast<int>(std::lround(th / dth)) % K)];
        for (double tm : pr.min_points) {
            const auto up = std::upper_bound(pr.inflections.begin(), pr.inflections.end(), tm);
            if (up == pr.inflections.begin() || up == pr.inflections.end()) continue;
            if (t > *(up - 1) && t < *up) return true;
        }
        return false;
    };
    std::vector<std::vector<int>> members(static_cast<std::size_t>(P));
    for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
        const auto& fc = mesh.face(f);
        const double tc = (param.t[static_cast<std::size_t>(fc[0])] + param.t[static_cast<std::size_t>(fc[1])] +
                           param.t[static_cast<std::size_t>(fc[2])]) / 3.0;
        if (tc < bundle.t0 || tc > bundle.t2) continue;
        const double th0 = param.theta[static_cast<std::size_t>(fc[0])];
        double acc = 0;
        for (int v : fc) acc += std::remainder(param.theta[static_cast<std::size_t>(v)] - th0, kTwoPi);
        const double th = wrap_2pi(th0 + acc / 3.0);
        if (in_lobe(th, tc)) members[static_cast<std::size_t>(fold_of(th))].push_back(f);
    }

    std::vector<FoldSegment> out;
    for (int p = 0; p < P; ++p) {
        auto faces = largest_component(mesh, members[static_cast<std::size_t>(p)]);
        if (faces.empty()) continue;
        FoldSegment s;
        s.faces = std::move(faces);
        s.theta_min = idx_theta(bound[static_cast<std::size_t>(p)]);
        s.theta_max = idx_theta(bound[static_cast<std::size_t>((p + 1) % P)]);
        s.theta_center = idx_theta(length_centroid(L, bound[static_cast<std::size_t>(p)],
                                                   bound[static_cast<std::size_t>((p + 1) % P)]));
        s.t_min = 1e300;
        s.t_max = -1e300;
        Vec3 centroid = Vec3::Zero();
        for (int f : s.faces) {
            const double A = mesh.face_area(f);
            s.area += A;
            Vec3 c = Vec3::Zero();
            for (int v : mesh.face(f)) {
                c += mesh.position(v) / 3.0;
                s.t_min = std::min(s.t_min, param.t[static_cast<std::size_t>(v)]);
                s.t_max = std::max(s.t_max, param.t[static_cast<std::size_t>(v)]);
            }
            centroid += A * c;
        }
        centroid /= s.area;
        s.center = surface_position(mesh, closest_surface_point(mesh, centroid, s.faces));
        const auto loops = face_set_boundary(mesh, s.faces);
        if (!loops.empty())
            for (int v : loops.front()) s.contour.push_back(mesh.position(v));

        double ksum = 0;
        int kcount = 0;
        for (int k = 0; k < K; ++k) {
            const double th = idx_theta(k);
            if (fold_of(th) != p) continue;
            const auto& pr = profiles[static_cast<std::size_t>(k)];
            for (std::size_t i = 0; i < pr.t.size(); ++i)
                if (pr.t[i] >= s.t_min && pr.t[i] <= s.t_max) {
                    ksum += pr.kappa[i];
                    ++kcount;
                }
        }
        s.mean_curvature = kcount ? ksum / kcount : 0.0;
        out.push_back(std::move(s));
    }
    return out;
}

double min_enclosing_radius(const std::vector<Vec2>& input) {
    if (input.empty()) return 0.0;
    std::vector<Vec2> pts = input;
    std::mt19937 rng(7);
    std::shuffle(pts.begin(), pts.end(), rng);
    struct Circle {
        Vec2 c;
        double r;
    };
    auto contains = [](const Circle& c, const Vec2& p) { return (p - c.c).norm() <= c.r * (1 + 1e-12) + 1e-15; };
    auto from2 = [](const Vec2& a, const Vec2& b) { return Circle{0.5 * (a + b), 0.5 * (a - b).norm()}; };
    auto from3 = [&](const Vec2& a, const Vec2& b, const Vec2& c) {
        const Vec2 ab = b - a, ac = c - a;
        const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
        if (std::abs(d) < 1e-300) {
            Circle best = from2(a, b);
            for (const auto& cand : {from2(a, c), from2(b, c)})
                if (cand.r > best.r) best = cand;
            return best;
        }
        const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
        const Vec2 off((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
        return Circle{a + off, off.norm()};
    };
    Circle c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (contains(c, pts[i])) continue;
        c = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (contains(c, pts[j])) continue;
            c = from2(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k)
                if (!contains(c, pts[k])) c = from3(pts[i], pts[j], pts[k]);
        }
    }
    return c.r;
}

double encompassing_radius(const LevelSet& level_set) {
    const auto pts = level_set.points();
    const FittingPlane P = fit_plane(pts);
    std::vector<Vec2> q;
    for (const auto& p : pts) q.emplace_back((p - P.center).dot(P.e1), (p - P.center).dot(P.e2));
    return min_enclosing_radius(q);
}

double median_encompassing_radius(const std::vector<LevelSet>& levels) {
    std::vector<double> r;
    for (const auto& l : levels) {
        try {
            r.push_back(encompassing_radius(l));
        } catch (const DegenerateGeometryError&) {
        }
    }
    if (r.empty()) return 0.0;
    return quantile(r, 0.5);
}

bool detect_collapsed(LevelSetBundle& bundle, double median_radius, double threshold) {
    double rmin = 1e300;
    for (const auto& l : bundle.level_sets) {
        try {
            rmin = std::min(rmin, encompassing_radius(l));
        } catch (const DegenerateGeometryError&) {
            rmin = 0.0;
        }
    }
    bundle.min_encompassing_radius = median_radius > 0 ? rmin / median_radius : 0.0;
    bundle.collapsed = bundle.min_encompassing_radius < threshold;
    return bundle.collapsed;
}

std::vector<std::vector<int>> face_set_boundary(const TriMesh& mesh, const std::vector<int>& faces) {
    std::set<int> in(faces.begin(), faces.end());
    std::multimap<int, int> next;
    for (int f : faces) {
        const auto& fc = mesh.face(f);
        for (int e = 0; e < 3; ++e) {
            const int g = mesh.adjacent_face(f, e);
            if (g < 0 || !in.count(g)) next.emplace(fc[e], fc[(e + 1) % 3]);
        }
    }
    std::vector<std::vector<int>> loops;
    while (!next.empty()) {
        auto it = next.begin();
        const int start = it->first;
        std::vector<int> loop{start};
        int cur = it->second;
        next.erase(it);
        while (cur != start) {
            loop.push_back(cur);
            auto nx = next.find(cur);
            if (nx == next.end()) break;
            cur = nx->second;
            next.erase(nx);
        }
        loops.push_back(std::move(loop));
    }
    std::stable_sort(loops.begin(), loops.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    return loops;
}

} // namespace spectube
