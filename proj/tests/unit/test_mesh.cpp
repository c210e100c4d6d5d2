#include <cmath>
#include <numbers>

#include <doctest.h>

#include "spectube/error.hpp"
#include "spectube/laplacian.hpp"
#include "spectube/mesh.hpp"
#include "spectube/mesh_io.hpp"
#include "spectube/synth.hpp"
#include "test_helpers.hpp"

using namespace spectube;
using namespace spectube::testing;

TEST_CASE("quad OBJ loads as two faces with one boundary loop") {
    const auto dir = scratch_dir("mesh_quad");
    write_file(dir / "quad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n");
    const auto m = load_mesh(dir / "quad.obj");
    CHECK(m.vertex_count() == 4);
    CHECK(m.face_count() == 2);
    REQUIRE(m.boundary_loops().size() == 1);
    CHECK(m.boundary_loops()[0].size() == 4);
}

TEST_CASE("OBJ polygon records are fan triangulated and slash tokens accepted") {
    const auto dir = scratch_dir("mesh_poly");
    write_file(dir / "p.obj", "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 3/1 4/1\n");
    const auto m = load_mesh(dir / "p.obj");
    CHECK(m.face_count() == 2);
}

TEST_CASE("generated cylinder survives a PLY round trip with two 32-vertex loops") {
    TubeSpec spec;
    spec.n_axial = 64;
    spec.n_circumferential = 32;
    const auto tube = generate_tube(spec);
    const auto dir = scratch_dir("mesh_ply");
    for (bool binary : {false, true}) {
        PlyWriteOptions o;
        o.binary = binary;
        save_ply(tube.mesh, dir / "c.ply", o);
        const auto m = load_mesh(dir / "c.ply");
        REQUIRE(m.boundary_loops().size() == 2);
        CHECK(m.boundary_loops()[0].size() == 32);
        CHECK(m.boundary_loops()[1].size() == 32);
        REQUIRE(m.vertex_count() == tube.mesh.vertex_count());
        for (std::size_t v = 0; v < m.vertex_count(); ++v) CHECK(m.vertices()[v] == tube.mesh.vertices()[v]);
    }
}

TEST_CASE("face index past the vertex count is a parse error") {
    const auto dir = scratch_dir("mesh_bad");
    write_file(dir / "bad.obj", "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 4\n");
    CHECK_THROWS_AS(load_mesh(dir / "bad.obj"), ParseError);
    write_file(dir / "bad.ply",
               "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
               "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n3 0 1 7\n");
    CHECK_THROWS_AS(load_mesh(dir / "bad.ply"), ParseError);
}

TEST_CASE("non-manifold edge and degenerate face are rejected") {
    std::vector<Vec3> v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}};
    CHECK_THROWS_AS(TriMesh(v, {{0, 1, 2}, {1, 0, 3}, {0, 1, 4}}), NonManifoldError);
    std::vector<Vec3> w = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    CHECK_THROWS_AS(TriMesh(w, {{0, 1, 2}}), DegenerateFaceError);
}

TEST_CASE("topology report") {
    SUBCASE("icosahedron is a sphere") {
        const auto r = validate_cylinder_topology(make_icosahedron());
        CHECK(r.genus == 0);
        CHECK(r.boundary_count == 0);
        CHECK_FALSE(r.is_cylinder);
    }
    SUBCASE("open cylinder") {
        const auto r = validate_cylinder_topology(make_cylinder(10, 1, 10, 16));
        CHECK(r.genus == 0);
        CHECK(r.boundary_count == 2);
        CHECK(r.euler_characteristic == 0);
        CHECK(r.is_cylinder);
    }
    SUBCASE("torus with one face removed") {
        const auto torus = make_torus(3, 1, 16, 8);
        auto faces = torus.faces();
        faces.erase(faces.begin());
        const auto r = validate_cylinder_topology(TriMesh(torus.vertices(), faces));
        CHECK(r.euler_characteristic == -1);
        CHECK(r.genus == 1);
        CHECK(r.boundary_count == 1);
        CHECK_FALSE(r.is_cylinder);
    }
    SUBCASE("two cylinders") {
        const auto r = validate_cylinder_topology(make_two_cylinders(5, 1, 5, 12));
        CHECK(r.components == 2);
        CHECK_FALSE(r.is_cylinder);
    }
}

TEST_CASE("cotangent weight of two equilateral triangles") {
    const double h = std::sqrt(3.0) / 2;
    const TriMesh m({{0, 0, 0}, {1, 0, 0}, {0.5, h, 0}, {0.5, -h, 0}}, {{0, 1, 2}, {1, 0, 3}});
    const auto L = cotangent_laplacian(m);
    CHECK(L.weight(0, 1) == doctest::Approx(2 / std::sqrt(3.0)).epsilon(1e-12));
    // Boundary edges carry one cotangent.
    CHECK(L.weight(0, 2) == doctest::Approx(1 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("cotangent Laplacian rows sum to zero") {
    for (const auto& m : {make_cylinder(10, 1, 20, 16), generate_tube(corpus_spec("bent")).mesh, make_icosahedron()}) {
        const auto L = cotangent_laplacian(m);
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(L.dimension());
        CHECK((L.matrix * ones).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((L.matrix - SparseMatrix(L.matrix.transpose())).norm() < 1e-12);
    }
}

TEST_CASE("right isosceles grid reproduces the five-point stencil") {
    const int n = 4;
    const auto m = planar_grid(n);
    const auto L = cotangent_laplacian(m);
    auto id = [](int i, int j) { return j * (n + 1) + i; };
    // Weights carry no 1/2 factor, so the operator is twice the stencil.
    const SparseMatrix S = 0.5 * L.matrix;
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            const int v = id(i, j);
            CHECK(S.coeff(v, v) == doctest::Approx(4.0));
            CHECK(S.coeff(v, id(i + 1, j)) == doctest::Approx(-1.0));
            CHECK(S.coeff(v, id(i - 1, j)) == doctest::Approx(-1.0));
            CHECK(S.coeff(v, id(i, j + 1)) == doctest::Approx(-1.0));
            CHECK(S.coeff(v, id(i, j - 1)) == doctest::Approx(-1.0));
            // The diagonal neighbours sit opposite two right angles.
            CHECK(std::abs(S.coeff(v, id(i + 1, j + 1))) < 1e-12);
        }
}

TEST_CASE("boundary arc-length parameterization") {
    SUBCASE("square loop") {
        const TriMesh m({{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
        const auto p = boundary_arc_length_parameterization(m, 0, 0, LoopOrientation::Ccw);
        REQUIRE(p.vertices == std::vector<int>{0, 1, 2, 3});
        const double pi = std::numbers::pi;
        CHECK(p.theta[1] == doctest::Approx(pi / 2));
        CHECK(p.theta[2] == doctest::Approx(pi));
        CHECK(p.theta[3] == doctest::Approx(3 * pi / 2));
        const auto q = boundary_arc_length_parameterization(m, 0, 0, LoopOrientation::Cw);
        CHECK(q.vertices == std::vector<int>{0, 3, 2, 1});
    }
    SUBCASE("theta proportional to cumulative length") {
        // Rectangle 1 x 2: edge lengths 1, 2, 1, 2.
        const TriMesh m({{0, 0, 0}, {1, 0, 0}, {1, 2, 0}, {0, 2, 0}}, {{0, 1, 2}, {0, 2, 3}});
        const auto p = boundary_arc_length_parameterization(m, 0, 0, LoopOrientation::Ccw);
        const double tau = 2 * std::numbers::pi;
        CHECK(p.length == doctest::Approx(6.0));
        CHECK(p.theta[1] == doctest::Approx(tau * 1 / 6));
        CHECK(p.theta[2] == doctest::Approx(tau * 3 / 6));
        CHECK(p.theta[3] == doctest::Approx(tau * 4 / 6));
    }
    SUBCASE("uniform cylinder circle") {
        const auto m = make_cylinder(10, 1, 10, 32);
        const auto p = boundary_arc_length_parameterization(m, m.loop_of_vertex(0), 0, LoopOrientation::Ccw);
        REQUIRE(p.vertices.size() == 32);
        double worst = 0;
        for (std::size_t i = 0; i < 32; ++i)
            worst = std::max(worst, std::abs(p.theta[i] - 2 * std::numbers::pi * static_cast<double>(i) / 32));
        CHECK(worst < 1e-9);
    }
    SUBCASE("interior base vertex") {
        const auto m = make_cylinder(10, 1, 10, 16);
        CHECK_THROWS_AS(boundary_arc_length_parameterization(m, 0, 16 * 5, LoopOrientation::Ccw), VertexNotOnLoopError);
    }
}

TEST_CASE("closest surface point recovers on-surface queries") {
    const auto m = make_cylinder(10, 1, 10, 16);
    for (int f = 0; f < static_cast<int>(m.face_count()); f += 17) {
        SurfacePoint p{f, Vec3(0.2, 0.3, 0.5)};
        const Vec3 x = surface_position(m, p);
        const auto q = closest_surface_point(m, x);
        CHECK((surface_position(m, q) - x).norm() < 1e-12);
    }
}

TEST_CASE("flipped orientation reverses normals") {
    const auto m = make_cylinder(10, 1, 10, 16);
    const auto f = flipped_orientation(m);
    for (int i = 0; i < static_cast<int>(m.face_count()); ++i)
        CHECK((m.face_normal(i) + f.face_normal(i)).norm() < 1e-12);
}
