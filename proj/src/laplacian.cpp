#include "spectube/laplacian.hpp"

#include <string>
#include <vector>

#include "spectube/error.hpp"

namespace spectube {

Eigen::Vector3d corner_cotangents(const TriMesh& mesh, int f) {
    const auto& fc = mesh.face(f);
    Eigen::Vector3d cot;
    for (int i = 0; i < 3; ++i) {
        const Vec3& p = mesh.position(fc[i]);
        const Vec3 a = mesh.position(fc[(i + 1) % 3]) - p;
        const Vec3 b = mesh.position(fc[(i + 2) % 3]) - p;
        const double cross = a.cross(b).norm();
        if (cross <= 0.0) throw DegenerateFaceError("face " + std::to_string(f) + " has zero area");
        cot[i] = a.dot(b) / cross;
    }
    return cot;
}

LaplacianMatrix cotangent_laplacian(const TriMesh& mesh) {
    const int n = static_cast<int>(mesh.vertex_count());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.face_count() * 12);
    for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
        const auto& fc = mesh.face(f);
        const Eigen::Vector3d cot = corner_cotangents(mesh, f);
        // The corner opposite edge (i, i+1) is i+2.
        for (int i = 0; i < 3; ++i) {
            const int a = fc[i], b = fc[(i + 1) % 3];
            const double w = cot[(i + 2) % 3];
            trips.emplace_back(a, b, -w);
            trips.emplace_back(b, a, -w);
            trips.emplace_back(a, a, w);
            trips.emplace_back(b, b, w);
        }
    }
    LaplacianMatrix L;
    L.matrix.resize(n, n);
    L.matrix.setFromTriplets(trips.begin(), trips.end());
    L.matrix.makeCompressed();
    return L;
}

Eigen::VectorXd mass_diagonal(const TriMesh& mesh, MassWeighting weighting) {
    const auto n = static_cast<Eigen::Index>(mesh.vertex_count());
    if (weighting == MassWeighting::Uniform) return Eigen::VectorXd::Ones(n);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(n);
    for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
        const double a = mesh.face_area(f) / 3.0;
        for (int v : mesh.face(f)) m[v] += a;
    }
    return m;
}

} // namespace spectube
