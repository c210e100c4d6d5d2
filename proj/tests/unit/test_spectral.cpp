#include <cmath>
#include <numbers>
#include <random>

#include <doctest.h>
#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "spectube/error.hpp"
#include "spectube/laplacian.hpp"
#include "spectube/spectral.hpp"
#include "spectube/synth.hpp"

using namespace spectube;

namespace {

std::vector<double> heights(const TriMesh& m) {
    std::vector<double> z;
    for (const auto& p : m.vertices()) z.push_back(p[2]);
    return z;
}

// Dense exp(-t M^-1 L) applied to u0: the heat flow without any spectral truncation.
Eigen::VectorXd dense_heat(const TriMesh& m, const Eigen::VectorXd& u0, double t) {
    const Eigen::MatrixXd L = Eigen::MatrixXd(cotangent_laplacian(m).matrix);
    const Eigen::VectorXd M = mass_diagonal(m, MassWeighting::BarycentricArea);
    const Eigen::MatrixXd A = -t * (M.cwiseInverse().asDiagonal() * L);
    return A.exp() * u0;
}

} // namespace

TEST_CASE("cylinder Fiedler vector follows the analytic axial cosine mode") {
    const double H = 10.0;
    const auto m = make_cylinder(H, 1.0, 80, 32);
    const auto F = compute_fiedler(m);
    const auto z = heights(m);
    // The lowest non-constant Neumann mode of a long cylinder is cos(pi z / H), whose Pearson
    // correlation with z is 2 sqrt(24) / pi^2.
    const double analytic = 2 * std::sqrt(24.0) / (std::numbers::pi * std::numbers::pi);
    CHECK(pearson(F.field.values, z) == doctest::Approx(analytic).epsilon(1e-3));
    double worst = 0;
    for (std::size_t v = 0; v < z.size(); ++v) {
        const double mode = 0.5 * (1 - std::cos(std::numbers::pi * z[v] / H));
        worst = std::max(worst, std::abs(F.field.values[v] - mode));
    }
    CHECK(worst < 2e-3);
    CHECK(F.field.values[0] <= 0.5);
    CHECK(F.lambda1 == doctest::Approx(2 * std::pow(std::numbers::pi / H, 2)).epsilon(0.01));
}

TEST_CASE("Fiedler field is scale invariant") {
    const auto m = make_cylinder(10.0, 1.0, 40, 16);
    Eigen::Affine3d s = Eigen::Affine3d::Identity();
    s.scale(2.0);
    const auto a = compute_fiedler(m);
    const auto b = compute_fiedler(transformed(m, s));
    for (std::size_t v = 0; v < m.vertex_count(); ++v) CHECK(std::abs(a.field.values[v] - b.field.values[v]) < 1e-6);
}

TEST_CASE("Fiedler extremes sit on the boundary loops") {
    const auto m = make_cylinder(10.0, 1.0, 40, 16);
    const auto F = compute_fiedler(m);
    CHECK(m.loop_of_vertex(F.min_vertex) >= 0);
    CHECK(m.loop_of_vertex(F.max_vertex) >= 0);
    CHECK(m.loop_of_vertex(F.min_vertex) != m.loop_of_vertex(F.max_vertex));
    CHECK(F.residual < 1e-6);
}

TEST_CASE("disconnected meshes are rejected") {
    CHECK_THROWS_AS(compute_fiedler(make_two_cylinders(5, 1, 10, 12)), DisconnectedMeshError);
}

TEST_CASE("large-mesh eigenpairs are M-orthonormal with small residuals") {
    const auto m = generate_tube(corpus_spec("straight_sparse")).mesh;
    const auto S = compute_spectrum(m, 4, MassWeighting::BarycentricArea);
    const auto L = cotangent_laplacian(m);
    REQUIRE(S.count() == 4);
    CHECK(std::abs(S.eigenvalues[0]) < 1e-8);
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            CHECK(S.eigenvalues[static_cast<std::size_t>(i)] >= S.eigenvalues[static_cast<std::size_t>(i - 1)]);
            CHECK(eigen_residual(L, S.mass, S.eigenvalues[static_cast<std::size_t>(i)],
                                 S.eigenvectors[static_cast<std::size_t>(i)]) /
                      S.eigenvalues[static_cast<std::size_t>(i)] <
                  1e-6);
        }
        for (int j = 0; j < 4; ++j) {
            const Eigen::Map<const Eigen::VectorXd> a(S.eigenvectors[static_cast<std::size_t>(i)].values.data(),
                                                      static_cast<Eigen::Index>(m.vertex_count()));
            const Eigen::Map<const Eigen::VectorXd> b(S.eigenvectors[static_cast<std::size_t>(j)].values.data(),
                                                      static_cast<Eigen::Index>(m.vertex_count()));
            CHECK(a.dot(S.mass.asDiagonal() * b) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8).scale(1));
        }
    }
}

TEST_CASE("sparse and dense paths agree") {
    const auto m = make_cylinder(6.0, 1.0, 14, 12);
    EigenSolverOptions sparse;
    sparse.dense_limit = 0;
    const auto a = compute_spectrum(m, 4, MassWeighting::BarycentricArea);
    const auto b = compute_spectrum(m, 4, MassWeighting::BarycentricArea, sparse);
    for (int i = 1; i < 4; ++i)
        CHECK(a.eigenvalues[static_cast<std::size_t>(i)] ==
              doctest::Approx(b.eigenvalues[static_cast<std::size_t>(i)]).epsilon(1e-8));
}

TEST_CASE("heat_evolve") {
    const auto m = make_cylinder(2.0, 1.0, 1, 4); // 8 vertices
    REQUIRE(m.vertex_count() == 8);
    const auto S = compute_spectrum(m, 8, MassWeighting::BarycentricArea);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> U(0, 1);
    ScalarField u0;
    for (int i = 0; i < 8; ++i) u0.values.push_back(U(rng));

    SUBCASE("t = 0 with the full basis reproduces the input") {
        const auto u = heat_evolve(S, u0, 0.0, 8);
        for (int i = 0; i < 8; ++i) CHECK(u[static_cast<std::size_t>(i)] == doctest::Approx(u0[static_cast<std::size_t>(i)]).epsilon(1e-6));
    }
    SUBCASE("constant field is stationary") {
        ScalarField c;
        c.values.assign(8, 3.5);
        const auto u = heat_evolve(S, c, 5.0, 8);
        for (double x : u.values) CHECK(x == doctest::Approx(3.5).epsilon(1e-9));
    }
    SUBCASE("two modes at large t match the dense matrix exponential") {
        const double t = 10.0;
        const auto u = heat_evolve(S, u0, t, 2);
        const Eigen::VectorXd ref = dense_heat(m, Eigen::Map<const Eigen::VectorXd>(u0.values.data(), 8), t);
        const Eigen::VectorXd got = Eigen::Map<const Eigen::VectorXd>(u.values.data(), 8);
        CHECK((got - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff() < 1e-4);
        Eigen::Index a, b, c, d;
        got.maxCoeff(&a);
        ref.maxCoeff(&b);
        got.minCoeff(&c);
        ref.minCoeff(&d);
        CHECK(a == b);
        CHECK(c == d);
    }
    SUBCASE("full basis matches the exponential at any t") {
        const auto u = heat_evolve(S, u0, 0.05, 8);
        const Eigen::VectorXd ref = dense_heat(m, Eigen::Map<const Eigen::VectorXd>(u0.values.data(), 8), 0.05);
        for (int i = 0; i < 8; ++i) CHECK(u[static_cast<std::size_t>(i)] == doctest::Approx(ref[i]).epsilon(1e-9));
    }
    SUBCASE("too many modes") { CHECK_THROWS_AS(heat_evolve(S, u0, 1.0, 9), InsufficientModesError); }
}

TEST_CASE("harmonic_field") {
    const auto m = make_cylinder(10.0, 1.0, 30, 16);
    SUBCASE("tube coordinate is monotone in height with no interior extrema") {
        const auto u = harmonic_tube_coordinate(m, m.loop_of_vertex(0));
        const auto L = cotangent_laplacian(m);
        for (int v = 0; v < static_cast<int>(m.vertex_count()); ++v) {
            if (m.is_boundary_vertex(v)) continue;
            double lo = 1e300, hi = -1e300;
            for (int w : m.neighbors(v)) {
                lo = std::min(lo, u[static_cast<std::size_t>(w)]);
                hi = std::max(hi, u[static_cast<std::size_t>(w)]);
            }
            CHECK(u[static_cast<std::size_t>(v)] > lo);
            CHECK(u[static_cast<std::size_t>(v)] < hi);
            // Value equals the cotangent-weighted 1-ring average.
            double num = 0, den = 0;
            for (int w : m.neighbors(v)) {
                num += L.weight(v, w) * u[static_cast<std::size_t>(w)];
                den += L.weight(v, w);
            }
            CHECK(std::abs(num / den - u[static_cast<std::size_t>(v)]) < 1e-8);
        }
        // Rings are level: the field depends on height only.
        for (int v = 0; v < static_cast<int>(m.vertex_count()); ++v)
            CHECK(u[static_cast<std::size_t>(v)] == doctest::Approx(m.position(v)[2] / 10.0).epsilon(1e-6).scale(1));
    }
    SUBCASE("constant boundary data gives a constant field") {
        std::map<int, double> bc;
        for (const auto& loop : m.boundary_loops())
            for (int v : loop) bc[v] = 2.25;
        for (double x : harmonic_field(m, bc).values) CHECK(x == doctest::Approx(2.25).epsilon(1e-10));
    }
    SUBCASE("no boundary data is singular") { CHECK_THROWS_AS(harmonic_field(m, {}), SingularSystemError); }
}

TEST_CASE("pearson") {
    CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
}
