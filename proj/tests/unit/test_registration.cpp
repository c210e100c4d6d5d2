#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include <doctest.h>

#include "spectube/error.hpp"
#include "spectube/pipeline.hpp"
#include "spectube/registration.hpp"
#include "spectube/synth.hpp"

using namespace spectube;

namespace {

constexpr double kPi = std::numbers::pi;

struct Setup {
    TriMesh mesh;
    FiedlerField field;
    TubeParameterization param;
};

Setup setup(TriMesh mesh, int base = 0) {
    Setup s{std::move(mesh), {}, {}};
    s.field = compute_fiedler(s.mesh);
    ParameterizationOptions o;
    o.orientation = LoopOrientation::Cw;
    o.n_curves = 32;
    s.param = parameterize_tube(s.mesh, s.field.field, base, o);
    return s;
}

CharacteristicField raw_field(const GridSpec& g, const std::vector<double>& v) {
    CharacteristicField c;
    c.grid = g;
    c.raw = v;
    c.values = v;
    c.update_gradients();
    return c;
}

// Periodic Gaussian blob centred on column c0, row r0.
std::vector<double> blob(const GridSpec& g, double c0, double r0, double s) {
    std::vector<double> v(g.size());
    for (int j = 0; j < g.n_t; ++j)
        for (int i = 0; i < g.n_theta; ++i) {
            double dc = std::abs(i - c0);
            dc = std::min(dc, g.n_theta - dc);
            v[g.index(i, j)] = std::exp(-(dc * dc + (j - r0) * (j - r0)) / (2 * s * s));
        }
    return v;
}

} // namespace

TEST_CASE("boundary pairing") {
    const auto a = setup(make_cylinder(10, 1, 20, 32));
    SUBCASE("self pairing is the identity") {
        const auto p = match_boundaries(a.mesh, a.field, a.mesh, a.field, 0, 0, false);
        CHECK(p.src.vertices == p.dst.vertices);
        CHECK(p.theta_offset == doctest::Approx(0.0));
    }
    SUBCASE("reversed winding is undone by the flip") {
        const auto b = setup(flipped_orientation(a.mesh));
        const auto plain = match_boundaries(a.mesh, a.field, b.mesh, b.field, 0, 0, false);
        CHECK(plain.src.vertices != plain.dst.vertices);
        CHECK(loop_handedness(a.mesh, plain.src.vertices) != loop_handedness(b.mesh, plain.dst.vertices));
        const auto fixed = match_boundaries(a.mesh, a.field, b.mesh, b.field, 0, 0, true);
        CHECK(fixed.src.vertices == fixed.dst.vertices);
        CHECK(loop_handedness(a.mesh, fixed.src.vertices) == loop_handedness(b.mesh, fixed.dst.vertices));
    }
    SUBCASE("base vertex on the far loop is rejected") {
        const int top = static_cast<int>(a.mesh.vertex_count()) - 1;
        CHECK_THROWS_AS(match_boundaries(a.mesh, a.field, a.mesh, a.field, top, 0, false), OrientationMismatchError);
    }
}

TEST_CASE("global registration") {
    const auto a = setup(make_cylinder(10, 1, 20, 32));
    const GridSpec g{32, 16};
    SUBCASE("self map has no displacement") {
        const auto p = match_boundaries(a.mesh, a.field, a.mesh, a.field, 0, 0, false);
        const auto m = global_register(a.param, a.param, p, g);
        for (std::size_t n = 0; n < g.size(); ++n) {
            CHECK(m.d_theta[n] == doctest::Approx(0.0));
            CHECK(m.d_t[n] == doctest::Approx(0.0));
        }
        CHECK(m.min_jacobian() == doctest::Approx(1.0));
    }
    SUBCASE("bases are paired and a pi/4 offset gives a constant rotation") {
        const auto b = setup(make_cylinder(10, 1, 20, 32), 4); // 4 of 32 around the loop
        auto p = match_boundaries(a.mesh, a.field, b.mesh, b.field, 0, 4, false);
        CHECK(p.src.vertices.front() == 0);
        CHECK(p.dst.vertices.front() == 4);
        CHECK(p.theta_offset == 0.0);
        p.theta_offset = kPi / 4;
        const auto m = global_register(a.param, b.param, p, g);
        for (std::size_t n = 0; n < g.size(); ++n) {
            CHECK(m.d_theta[n] == doctest::Approx(g.n_theta / 8.0));
            CHECK(m.d_t[n] == 0.0);
        }
        const Vec2 q = m.apply(1.0, 0.3);
        CHECK(q[0] == doctest::Approx(1.0 + kPi / 4));
        CHECK(q[1] == doctest::Approx(0.3));
    }
    SUBCASE("parameterization base must match the pairing") {
        const auto p = match_boundaries(a.mesh, a.field, a.mesh, a.field, 0, 3, false);
        CHECK_THROWS_AS(global_register(a.param, a.param, p, g), OrientationMismatchError);
    }
}

TEST_CASE("characteristic field") {
    const auto a = setup(make_cylinder(10, 1, 20, 32));
    const GridSpec g{64, 32};
    SUBCASE("no folds") {
        const auto c = build_characteristic(a.mesh, {}, a.param, g);
        for (double x : c.values) CHECK(x == 0.0);
    }
    SUBCASE("half of the theta range") {
        FoldSegment f;
        for (int i = 0; i < static_cast<int>(a.mesh.face_count()); ++i) {
            const auto& fc = a.mesh.face(i);
            // Skip faces straddling the seam; their unwrapped angles span the whole range.
            double lo = 10, hi = -10;
            for (int v : fc) {
                lo = std::min(lo, a.param.theta[static_cast<std::size_t>(v)]);
                hi = std::max(hi, a.param.theta[static_cast<std::size_t>(v)]);
            }
            if (hi - lo < kPi && hi <= kPi + 1e-9) f.faces.push_back(i);
        }
        const auto c = build_characteristic(a.mesh, {f}, a.param, g);
        double raw = 0, smooth = 0;
        for (std::size_t n = 0; n < g.size(); ++n) {
            raw += c.raw[n];
            smooth += c.values[n];
        }
        CHECK(raw / static_cast<double>(g.size()) == doctest::Approx(0.5).epsilon(0.05));
        CHECK(smooth == doctest::Approx(raw).epsilon(1e-9));
    }
}

TEST_CASE("gaussian smoothing preserves mass with wrap and reflection") {
    const GridSpec g{24, 12};
    std::vector<double> v(g.size(), 0.0);
    v[g.index(0, 0)] = 1.0;
    v[g.index(23, 11)] = 2.0;
    double total = 0;
    for (double x : gaussian_smooth(g, v, 2.0, 1.5)) total += x;
    CHECK(total == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("registration energy") {
    const GridSpec g{16, 16};
    SUBCASE("identical fields under the identity") {
        const auto c = raw_field(g, blob(g, 5, 7, 2));
        const auto e = energy(RegistrationMap(g), c, c);
        CHECK(e.data == 0.0);
        CHECK(e.smooth == 0.0);
    }
    SUBCASE("disjoint indicators cost their combined area") {
        std::vector<double> a(g.size(), 0.0), b(g.size(), 0.0);
        for (int j = 0; j < g.n_t; ++j)
            for (int i = 0; i < 4; ++i) {
                a[g.index(i, j)] = 1.0;
                b[g.index(i + 8, j)] = 1.0;
            }
        CHECK(energy(RegistrationMap(g), raw_field(g, a), raw_field(g, b)).data == doctest::Approx(2 * 4 * 16));
    }
    SUBCASE("matches a brute-force evaluation") {
        const auto c1 = raw_field(g, blob(g, 5, 7, 2));
        const auto c2 = raw_field(g, blob(g, 8, 6, 3));
        RegistrationMap m(g);
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> U(-0.4, 0.4);
        for (std::size_t n = 0; n < g.size(); ++n) {
            m.d_theta[n] = U(rng);
            m.d_t[n] = U(rng);
        }
        const double beta = 0.7;
        double data = 0, smooth = 0;
        for (int j = 0; j < g.n_t; ++j)
            for (int i = 0; i < g.n_theta; ++i) {
                const auto n = g.index(i, j);
                const double r = c1.values[n] - c2.sample(i + m.d_theta[n], j + m.d_t[n]);
                data += r * r;
                const auto e = g.index((i + 1) % g.n_theta, j), w = g.index((i + g.n_theta - 1) % g.n_theta, j);
                const int jn = std::min(j + 1, g.n_t - 1), js = std::max(j - 1, 0);
                const auto no = g.index(i, jn), so = g.index(i, js);
                for (const auto* d : {&m.d_theta, &m.d_t}) {
                    const double dc = ((*d)[e] - (*d)[w]) / 2;
                    const double dr = ((*d)[no] - (*d)[so]) / (jn - js);
                    smooth += dc * dc + dr * dr;
                }
            }
        const auto got = energy(m, c1, c2, beta);
        CHECK(got.data == doctest::Approx(data).epsilon(1e-10));
        CHECK(got.smooth == doctest::Approx(beta * smooth).epsilon(1e-10));
    }
}

TEST_CASE("refinement") {
    SUBCASE("identical fields are stationary") {
        const GridSpec g{32, 16};
        const auto c = raw_field(g, blob(g, 10, 8, 3));
        const auto r = refine_registration(RegistrationMap(g), c, c);
        CHECK(r.converged);
        for (std::size_t n = 0; n < g.size(); ++n) CHECK(std::abs(r.map.d_theta[n]) < 1e-12);
        CHECK(r.trace.front().energy == 0.0);
    }
    SUBCASE("a three-cell theta shift is recovered") {
        const GridSpec g{64, 32};
        const auto c1 = raw_field(g, blob(g, 20, 16, 4));
        const auto c2 = raw_field(g, blob(g, 23, 16, 4));
        RefineOptions o;
        o.step = 0.5;
        o.max_iters = 6000;
        o.beta = 0.01;
        const auto r = refine_registration(RegistrationMap(g), c1, c2, o);
        CHECK(r.map.d_theta[g.index(20, 16)] == doctest::Approx(3.0).epsilon(0.5 / 3));
        CHECK(r.trace.back().energy < 0.1 * r.trace.front().energy);
        for (std::size_t k = 1; k < r.trace.size(); ++k) CHECK(r.trace[k].energy <= r.trace[k - 1].energy);
        CHECK(r.map.min_jacobian() > 0);
        // d_t stays pinned on the end rows.
        for (int i = 0; i < g.n_theta; ++i) {
            CHECK(r.map.d_t[g.index(i, 0)] == 0.0);
            CHECK(r.map.d_t[g.index(i, g.n_t - 1)] == 0.0);
        }
    }
}

TEST_CASE("map_point") {
    const auto a = setup(make_cylinder(10, 1, 20, 32));
    const double edge = 2 * std::sin(kPi / 32);
    const GridSpec g{64, 64};
    SUBCASE("identity") {
        const auto p = match_boundaries(a.mesh, a.field, a.mesh, a.field, 0, 0, false);
        const auto m = global_register(a.param, a.param, p, g);
        const ParamLocator loc(a.mesh, a.param);
        for (int v = 0; v < static_cast<int>(a.mesh.vertex_count()); v += 7)
            CHECK((map_point(m, a.mesh, a.param, loc, a.mesh, a.mesh.position(v)) - a.mesh.position(v)).norm() < edge);
    }
    SUBCASE("rigid rotation by pi/4 about the axis") {
        const Eigen::Affine3d R(Eigen::AngleAxisd(kPi / 4, Vec3::UnitZ()));
        const auto b = setup(transformed(a.mesh, R));
        const auto p = match_boundaries(a.mesh, a.field, b.mesh, b.field, 0, 0, false);
        const auto m = global_register(a.param, b.param, p, g);
        const ParamLocator loc(b.mesh, b.param);
        for (int v = 0; v < static_cast<int>(a.mesh.vertex_count()); v += 7) {
            const Vec3 x = a.mesh.position(v);
            CHECK((map_point(m, a.mesh, a.param, loc, b.mesh, x) - R * x).norm() < edge);
        }
    }
    SUBCASE("t = 0 boundary stays on the boundary") {
        const auto b = setup(make_cylinder(12, 1, 24, 32), 4);
        const auto p = match_boundaries(a.mesh, a.field, b.mesh, b.field, 0, 4, false);
        const auto m = global_register(a.param, b.param, p, g);
        const ParamLocator loc(b.mesh, b.param);
        for (int v = 0; v < 32; ++v) CHECK(std::abs(map_point(m, a.mesh, a.param, loc, b.mesh, a.mesh.position(v))[2]) < 1e-6);
    }
}

TEST_CASE("grid serialization") {
    const GridSpec g{4, 3};
    RegistrationMap m(g);
    m.d_theta[5] = 1.5;
    const auto bytes = registration_grid_bytes(m);
    CHECK(bytes.size() == 2 * g.size() * sizeof(double));
    double x;
    std::memcpy(&x, bytes.data() + 5 * sizeof(double), sizeof(double));
    CHECK(x == 1.5);
    CHECK(trace_csv({{0, 1.0, 0.5, 0.5, 0.0}}).rfind("iter", 0) == 0);
}
