#pragma once

#include <Eigen/SparseCore>

#include "spectube/mesh.hpp"

namespace spectube {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Cotangent Laplacian with delta_ij = -w_ij for adjacent vertices and delta_ii = sum_k w_ik,
/// w_ij = cot(alpha) + cot(beta). Boundary edges take the single opposite-angle cotangent.
/// Weights of obtuse triangles are kept as they are (possibly negative).
struct LaplacianMatrix {
    SparseMatrix matrix;

    int dimension() const { return static_cast<int>(matrix.rows()); }
    /// Off-diagonal weight w_ij (0 if not adjacent).
    double weight(int i, int j) const { return -matrix.coeff(i, j); }
};

/// Throws DegenerateFaceError if a face has zero area.
LaplacianMatrix cotangent_laplacian(const TriMesh& mesh);

enum class MassWeighting { Uniform, BarycentricArea };

/// Diagonal mass matrix: identity, or one third of the incident face areas per vertex.
Eigen::VectorXd mass_diagonal(const TriMesh& mesh, MassWeighting weighting);

/// Cotangents of the three corner angles of face f, indexed by corner.
Eigen::Vector3d corner_cotangents(const TriMesh& mesh, int f);

} // namespace spectube
