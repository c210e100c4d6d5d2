#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "spectube/laplacian.hpp"
#include "spectube/mesh.hpp"

namespace spectube {

/// Lowest eigenpairs of L x = lambda M x, eigenvectors M-orthonormal.
struct SpectralResult {
    std::vector<double> eigenvalues; ///< ascending
    std::vector<ScalarField> eigenvectors;
    Eigen::VectorXd mass; ///< diagonal of M
    MassWeighting weighting = MassWeighting::BarycentricArea;
    int iterations = 0; ///< subspace iterations used (0 for the dense path)

    int count() const { return static_cast<int>(eigenvalues.size()); }
};

struct EigenSolverOptions {
    double tolerance = 1e-10;   ///< on the relative residual of every requested pair
    int max_iterations = 10000;
    /// Meshes up to this many vertices are solved densely.
    int dense_limit = 400;
};

/// Lowest `k` eigenpairs of the cotangent Laplacian. Shift-invert block subspace iteration
/// with Rayleigh-Ritz for large meshes, a dense symmetric solve for small ones.
/// Throws EigenSolveFailure if the iteration cap is hit.
SpectralResult compute_spectrum(const TriMesh& mesh, int k, MassWeighting weighting,
                                const EigenSolverOptions& options = {});

/// ||M^-1 L x - lambda x||_inf / ||x||_inf for one pair.
double eigen_residual(const LaplacianMatrix& laplacian, const Eigen::VectorXd& mass, double lambda,
                      const ScalarField& vector);

/// Fiedler vector rescaled to [0, 1].
struct FiedlerField {
    ScalarField field;
    double lambda1 = 0.0;
    int min_vertex = -1;
    int max_vertex = -1;
    /// Unscaled eigenvector and its residual, kept for validation.
    ScalarField raw;
    double residual = 0.0;
};

/// Second eigenvector scaled so min = 0 and max = 1. The sign is fixed by requiring the value at
/// the first vertex of boundary loop 0 to be <= 0.5. Extremes tied within 1e-9 of the range
/// resolve to the lowest-index minimum and the maximum nearest it.
/// Throws DisconnectedMeshError for meshes with more than one component.
FiedlerField compute_fiedler(const TriMesh& mesh, MassWeighting weighting = MassWeighting::BarycentricArea,
                             const EigenSolverOptions& options = {});

/// Rescales an arbitrary non-constant field the same way compute_fiedler does.
FiedlerField normalize_fiedler(const TriMesh& mesh, const ScalarField& eigenvector, double lambda1);

/// Same field with f -> 1 - f (extremal vertices swapped).
FiedlerField flipped(const FiedlerField& fiedler);

/// Truncated spectral heat solution u(t) = sum_k tau_k exp(-lambda_k t) phi_k with
/// tau_k = <phi_k, u0>_M. Throws InsufficientModesError if k_modes exceeds the spectrum.
ScalarField heat_evolve(const SpectralResult& spectrum, const ScalarField& initial, double t, int k_modes);

/// Solves L xi = 0 at every vertex not listed in `boundary_values`.
/// Throws SingularSystemError if the system has no unique solution.
ScalarField harmonic_field(const TriMesh& mesh, const std::map<int, double>& boundary_values);

/// Harmonic field with 0 on loop `zero_loop` and 1 on the other boundary loop.
ScalarField harmonic_tube_coordinate(const TriMesh& mesh, int zero_loop = 0);

/// Pearson correlation coefficient.
double pearson(const std::vector<double>& a, const std::vector<double>& b);

} // namespace spectube
