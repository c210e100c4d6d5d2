#include <algorithm>
#include <cmath>
#include <numbers>

#include <doctest.h>

#include "spectube/error.hpp"
#include "spectube/folds.hpp"
#include "spectube/levelset.hpp"
#include "spectube/spectral.hpp"
#include "spectube/synth.hpp"

using namespace spectube;

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_diff(double a, double b) {
    double d = std::fmod(a - b, 2 * kPi);
    if (d > kPi) d -= 2 * kPi;
    if (d < -kPi) d += 2 * kPi;
    return d;
}

double azimuth(const Vec3& p) {
    double a = std::atan2(p[1], p[0]);
    return a < 0 ? a + 2 * kPi : a;
}

double hull_perimeter(std::vector<Vec2> p) {
    std::sort(p.begin(), p.end(), [](const Vec2& a, const Vec2& b) { return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]); });
    auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    };
    std::vector<Vec2> h(2 * p.size());
    std::size_t k = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    for (std::size_t i = p.size() - 1, t = k + 1; i-- > 0;) {
        while (k >= t && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
        h[k++] = p[i];
    }
    h.resize(k - 1);
    double per = 0;
    for (std::size_t i = 0; i < h.size(); ++i) per += (h[(i + 1) % h.size()] - h[i]).norm();
    return per;
}

double distance_to_polyline(const Vec3& q, const std::vector<Vec3>& line) {
    double best = 1e300;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const Vec3 d = line[i + 1] - line[i];
        const double s = std::clamp((q - line[i]).dot(d) / d.squaredNorm(), 0.0, 1.0);
        best = std::min(best, (line[i] + s * d - q).norm());
    }
    return best;
}

} // namespace

TEST_CASE("mid level set of a cylinder is a circle of the right length") {
    const auto m = make_cylinder(10.0, 1.0, 80, 32);
    const auto F = compute_fiedler(m);
    const auto sets = extract_level_set(m, F.field, 0.5);
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].closed);
    // The inscribed 32-gon is 0.16 % shorter than the circle.
    CHECK(sets[0].total_length == doctest::Approx(2 * kPi).epsilon(0.01));
    for (const auto& p : sets[0].points()) CHECK(p[2] == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("contour through a vertex is not duplicated") {
    const auto m = make_cylinder(2.0, 1.0, 2, 8);
    ScalarField f;
    for (const auto& p : m.vertices()) f.values.push_back(p[2] / 2.0);
    f.values[8] = 0.5; // already 0.5: every middle ring vertex sits on the level
    const auto sets = extract_level_set(m, f, 0.5);
    REQUIRE(sets.size() == 1);
    const auto pts = sets[0].points();
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j) CHECK((pts[i] - pts[j]).norm() > 1e-6);
    CHECK(sets[0].total_length == doctest::Approx(8 * 2 * std::sin(kPi / 8)).epsilon(1e-6));
}

TEST_CASE("level sets outside the field range are empty") {
    const auto m = make_cylinder(2.0, 1.0, 4, 8);
    const auto F = compute_fiedler(m);
    CHECK_THROWS_AS(extract_level_set(m, F.field, 1.5), EmptyLevelSetError);
}

TEST_CASE("level inside a fold ring is concave") {
    const auto tube = generate_tube(corpus_spec("bent"));
    const auto F = compute_fiedler(tube.mesh);
    // Field value at the crest of the first truth fold.
    const auto& fold = tube.truth.folds.front();
    const auto p = closest_surface_point(tube.mesh, fold.center);
    const auto& face = tube.mesh.face(p.face);
    double t = 0;
    for (int k = 0; k < 3; ++k) t += p.bary[k] * F.field[static_cast<std::size_t>(face[static_cast<std::size_t>(k)])];
    const auto sets = extract_level_set(tube.mesh, F.field, t);
    REQUIRE(sets.size() == 1);
    const auto plane = fit_plane(sets[0]);
    std::vector<Vec2> flat;
    for (const auto& q : sets[0].points()) flat.emplace_back((q - plane.center).dot(plane.e1), (q - plane.center).dot(plane.e2));
    CHECK(sets[0].total_length > hull_perimeter(flat));
}

TEST_CASE("uniform level sets") {
    const auto m = make_cylinder(10.0, 1.0, 40, 16);
    const auto F = compute_fiedler(m);
    auto ts = [&](int n) {
        std::vector<double> out;
        for (const auto& l : uniform_level_sets(m, F.field, n)) out.push_back(l.t);
        return out;
    };
    const auto three = ts(3);
    REQUIRE(three.size() == 3);
    CHECK(three[0] == doctest::Approx(0.25));
    CHECK(three[1] == doctest::Approx(0.5));
    CHECK(three[2] == doctest::Approx(0.75));
    const auto one = ts(1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == doctest::Approx(0.5));
}

TEST_CASE("400 levels on a corpus tube are closed single loops") {
    const auto tube = generate_tube(corpus_spec("straight_sparse"));
    const auto F = compute_fiedler(tube.mesh);
    const auto levels = uniform_level_sets(tube.mesh, F.field, 400);
    CHECK(levels.size() == 400);
    for (const auto& l : levels) {
        CHECK(l.closed);
        CHECK(extract_level_set(tube.mesh, F.field, l.t).size() == 1);
    }
}

TEST_CASE("integration curves on a cylinder are straight rules") {
    const auto m = make_cylinder(10.0, 1.0, 40, 32);
    const auto F = compute_fiedler(m);
    const int start_loop = m.loop_of_vertex(F.min_vertex);
    const auto& loop = m.boundary_loops()[static_cast<std::size_t>(start_loop)];
    std::vector<IntegrationCurve> curves;
    for (int v : {loop[0], loop[loop.size() / 2]}) {
        SurfacePoint s;
        s.face = m.vertex_faces(v)[0];
        for (int k = 0; k < 3; ++k) s.bary[k] = m.face(s.face)[static_cast<std::size_t>(k)] == v ? 1.0 : 0.0;
        const double th = azimuth(m.position(v));
        const auto c = trace_integration_curve(m, F.field, s, th);
        CHECK(c.points.back()[2] == doctest::Approx(10.0));
        for (const auto& p : c.points) CHECK(std::abs(wrap_diff(azimuth(p), th)) < 1e-3);
        for (std::size_t i = 1; i < c.t.size(); ++i) CHECK(c.t[i] > c.t[i - 1]);
        curves.push_back(c);
    }
    // Antipodal curves stay apart.
    for (const auto& p : curves[0].points)
        for (const auto& q : curves[1].points)
            if (std::abs(p[2] - q[2]) < 0.5) CHECK((p - q).norm() > 1.9);
}

TEST_CASE("trace through a saddle-like bump is deterministic") {
    const auto m = make_cylinder(10.0, 1.0, 40, 32);
    ScalarField f;
    const Vec3 bump(1, 0, 5);
    for (const auto& p : m.vertices()) f.values.push_back(p[2] / 10.0 + 0.6 * std::exp(-(p - bump).squaredNorm()));
    SurfacePoint s;
    s.face = m.vertex_faces(0)[0];
    for (int k = 0; k < 3; ++k) s.bary[k] = m.face(s.face)[static_cast<std::size_t>(k)] == 0 ? 1.0 : 0.0;
    auto run = [&]() -> std::pair<bool, std::vector<Vec3>> {
        try {
            return {true, trace_integration_curve(m, f, s, 0.0).points};
        } catch (const StagnationError&) {
            return {false, {}};
        }
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
}

TEST_CASE("cylinder parameterization") {
    const auto m = make_cylinder(10.0, 1.0, 40, 32);
    const auto F = compute_fiedler(m);
    const int base = m.boundary_loops()[static_cast<std::size_t>(m.loop_of_vertex(F.min_vertex))][0];
    ParameterizationOptions o;
    o.n_curves = 32;
    const auto P = parameterize_tube(m, F.field, base, o);
    const double th0 = azimuth(m.position(base));
    // Which way theta runs depends on the loop orientation; take the matching direction.
    const double dir = wrap_diff(P.theta[static_cast<std::size_t>(base + 1 < 32 ? base + 1 : base - 1)], 0) *
                                   wrap_diff(azimuth(m.position(base + 1 < 32 ? base + 1 : base - 1)), th0) >
                               0
                           ? 1.0
                           : -1.0;
    double worst_theta = 0, worst_t = 0, worst_field = 0;
    for (int v = 0; v < static_cast<int>(m.vertex_count()); ++v) {
        const auto& p = m.position(v);
        worst_theta = std::max(worst_theta, std::abs(wrap_diff(P.theta[static_cast<std::size_t>(v)], dir * (azimuth(p) - th0))));
        // t is the Fiedler value itself, which follows the axial cosine mode rather than the height.
        const double mode = 0.5 * (1 - std::cos(kPi * p[2] / 10.0));
        worst_t = std::max(worst_t, std::abs(P.t[static_cast<std::size_t>(v)] - mode));
        worst_field = std::max(worst_field, std::abs(P.t[static_cast<std::size_t>(v)] - F.field[static_cast<std::size_t>(v)]));
    }
    CHECK(worst_theta < 1e-2);
    CHECK(worst_t < 1e-2);
    CHECK(worst_field < 1e-9);

    SUBCASE("antipodal base rotates theta by pi") {
        const auto& loop = m.boundary_loops()[static_cast<std::size_t>(m.loop_of_vertex(base))];
        const int anti = loop[(std::find(loop.begin(), loop.end(), base) - loop.begin() + 16) % 32];
        const auto Q = parameterize_tube(m, F.field, anti, o);
        double worst = 0;
        for (std::size_t v = 0; v < m.vertex_count(); ++v)
            worst = std::max(worst, std::abs(wrap_diff(Q.theta[v], P.theta[v] + kPi)));
        CHECK(worst < 1e-2);
    }
}

TEST_CASE("centerline") {
    SUBCASE("straight cylinder") {
        const auto m = make_cylinder(10.0, 1.0, 40, 32);
        const auto F = compute_fiedler(m);
        const auto c = centerline(m, F.field, 20);
        for (const auto& p : c.points) CHECK(std::hypot(p[0], p[1]) < 1e-3);
        const auto one = centerline(m, F.field, 1);
        REQUIRE(one.points.size() == 1);
        const auto mid = extract_level_set(m, F.field, 0.5);
        CHECK((one.points[0] - mid[0].centroid()).norm() < 1e-12);
    }
    SUBCASE("90 degree bend follows the spine") {
        TubeSpec spec;
        spec.spine = {SpineKind::Bend, 90.0, 80.0};
        const auto tube = generate_tube(spec);
        const auto F = compute_fiedler(tube.mesh);
        std::vector<Vec3> spine;
        for (const auto& [a, b] : tube.truth.spine_correspondence) spine.push_back(a);
        const auto c = centerline(tube.mesh, F.field, 50);
        for (const auto& p : c.points) CHECK(distance_to_polyline(p, spine) < spec.radius / 5);
    }
}

TEST_CASE("corresponding_point") {
    Centerline a, b;
    for (int i = 0; i < 10; ++i) {
        a.points.emplace_back(i, 0, 0);
        b.points.emplace_back(0, 2 * i, 1);
        a.t.push_back(i / 9.0);
        b.t.push_back(i / 9.0);
    }
    CHECK(corresponding_point(a, b, a.points[4]) == b.points[4]);
    CHECK(corresponding_point(a, a, Vec3(3.2, 1, 0)) == a.points[3]);
    CHECK_THROWS_AS(corresponding_point(a, Centerline{}, Vec3::Zero()), EmptyCenterlineError);

    SUBCASE("deformed pair") {
        // Uniform stretch: index matching of level centroids cannot follow a non-uniform one.
        DeformationSpec d = corpus_pairs()[0].deformation;
        d.stretch_wobble = 0.0;
        const auto pair = deform_pair(corpus_spec("straight_sparse"), d);
        const int n = 100;
        const auto cs = centerline(pair.src, compute_fiedler(pair.src).field, n);
        const auto cd = centerline(pair.dst, compute_fiedler(pair.dst).field, n);
        double dst_len = 0;
        for (std::size_t i = 1; i < cd.points.size(); ++i) dst_len += (cd.points[i] - cd.points[i - 1]).norm();
        const double spacing = dst_len / (n - 1);
        const auto& corr = pair.src_truth.spine_correspondence;
        for (std::size_t k = 2; k + 2 < corr.size(); ++k)
            CHECK((corresponding_point(cs, cd, corr[k].first) - corr[k].second).norm() < 2 * spacing);
    }
}
