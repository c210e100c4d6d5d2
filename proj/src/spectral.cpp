#include "spectube/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "spectube/error.hpp"

namespace spectube {

namespace {

ScalarField to_field(const Eigen::VectorXd& v) {
    return ScalarField{std::vector<double>(v.data(), v.data() + v.size())};
}

Eigen::Map<const Eigen::VectorXd> as_vector(const ScalarField& f) {
    return {f.values.data(), static_cast<Eigen::Index>(f.values.size())};
}

SpectralResult dense_spectrum(const LaplacianMatrix& L, const Eigen::VectorXd& mass, int k) {
    const Eigen::VectorXd inv_sqrt = mass.cwiseSqrt().cwiseInverse();
    const Eigen::MatrixXd A = inv_sqrt.asDiagonal() * Eigen::MatrixXd(L.matrix) * inv_sqrt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    if (es.info() != Eigen::Success) throw EigenSolveFailure("dense eigensolver failed");
    SpectralResult r;
    r.mass = mass;
    for (int i = 0; i < k; ++i) {
        r.eigenvalues.push_back(std::max(0.0, es.eigenvalues()[i]));
        r.eigenvectors.push_back(to_field(inv_sqrt.asDiagonal() * es.eigenvectors().col(i)));
    }
    return r;
}

// M-orthonormalises the columns of Y in place (two passes of modified Gram-Schmidt).
// Returns false if the block became rank deficient.
bool m_orthonormalize(Eigen::MatrixXd& Y, const Eigen::VectorXd& mass) {
    for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            for (Eigen::Index i = 0; i < j; ++i) {
                const double c = Y.col(i).dot(mass.asDiagonal() * Y.col(j));
                Y.col(j) -= c * Y.col(i);
            }
            const double nrm = std::sqrt(Y.col(j).dot(mass.asDiagonal() * Y.col(j)));
            if (!(nrm > 1e-300)) return false;
            Y.col(j) /= nrm;
        }
    }
    return true;
}

} // namespace

double eigen_residual(const LaplacianMatrix& laplacian, const Eigen::VectorXd& mass, double lambda,
                      const ScalarField& vector) {
    const auto x = as_vector(vector);
    const Eigen::VectorXd r = (laplacian.matrix * x).cwiseQuotient(mass) - lambda * x;
    const double scale = x.cwiseAbs().maxCoeff();
    return scale > 0 ? r.cwiseAbs().maxCoeff() / scale : 0.0;
}

SpectralResult compute_spectrum(const TriMesh& mesh, int k, MassWeighting weighting,
                                const EigenSolverOptions& options) {
    const int n = static_cast<int>(mesh.vertex_count());
    if (k < 1 || k > n) throw InsufficientModesError("requested " + std::to_string(k) + " modes of a " +
                                                     std::to_string(n) + "-vertex mesh");
    const LaplacianMatrix L = cotangent_laplacian(mesh);
    const Eigen::VectorXd mass = mass_diagonal(mesh, weighting);

    if (n <= options.dense_limit) {
        auto r = dense_spectrum(L, mass, k);
        r.weighting = weighting;
        return r;
    }

    // Shift slightly below zero so L - sigma M is positive definite.
    const double scale = L.matrix.diagonal().sum() / mass.sum();
    const double sigma = -1e-8 * scale;
    SparseMatrix K = L.matrix;
    for (int i = 0; i < n; ++i) K.coeffRef(i, i) -= sigma * mass[i];
    Eigen::SimplicialLDLT<SparseMatrix> solver(K);
    if (solver.info() != Eigen::Success) throw EigenSolveFailure("factorisation of the shifted Laplacian failed");

    const int p = std::min(n, k + std::max(k, 8));
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::MatrixXd X(n, p);
    X.col(0).setOnes();
    for (int j = 1; j < p; ++j)
        for (int i = 0; i < n; ++i) X(i, j) = uni(rng);
    m_orthonormalize(X, mass);

    SpectralResult r;
    r.mass = mass;
    r.weighting = weighting;
    Eigen::VectorXd ritz(p);
    // Residuals cannot drop below the rounding error of forming M^-1 L x; Gershgorin bounds its norm.
    const double operator_norm = (2.0 * L.matrix.diagonal().array() / mass.array()).maxCoeff();
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * operator_norm;
    for (int it = 1; it <= options.max_iterations; ++it) {
        Eigen::MatrixXd Y = solver.solve(mass.asDiagonal() * X);
        if (!m_orthonormalize(Y, mass)) throw EigenSolveFailure("subspace collapsed during iteration");
        const Eigen::MatrixXd LY = L.matrix * Y;
        Eigen::MatrixXd A = Y.transpose() * LY;
        A = 0.5 * (A + A.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
        X = Y * es.eigenvectors();
        ritz = es.eigenvalues();

        const double lambda_ref = std::max(std::abs(ritz[std::min(1, p - 1)]), 1e-300);
        bool converged = true;
        for (int i = 0; i < k && converged; ++i) {
            const Eigen::VectorXd x = X.col(i);
            const Eigen::VectorXd res = (L.matrix * x).cwiseQuotient(mass) - ritz[i] * x;
            const double rel = res.cwiseAbs().maxCoeff() / x.cwiseAbs().maxCoeff();
            converged = rel <= std::max(options.tolerance * std::max(std::abs(ritz[i]), lambda_ref), floor);
        }
        if (converged) {
            r.iterations = it;
            for (int i = 0; i < k; ++i) {
                r.eigenvalues.push_back(std::max(0.0, ritz[i]));
                r.eigenvectors.push_back(to_field(X.col(i)));
            }
            return r;
        }
    }
    throw EigenSolveFailure("eigensolver did not converge in " + std::to_string(options.max_iterations) +
                            " iterations");
}

FiedlerField normalize_fiedler(const TriMesh& mesh, const ScalarField& eigenvector, double lambda1) {
    const auto& v = eigenvector.values;
    const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
    const double lo = *mn, hi = *mx;
    if (!(hi > lo)) throw DisconnectedMeshError("Fiedler vector is constant");
    FiedlerField f;
    f.lambda1 = lambda1;
    f.raw = eigenvector;
    f.field.values.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) f.field.values[i] = (v[i] - lo) / (hi - lo);
    // Rotationally symmetric tubes tie a whole end ring to round-off. Among near-ties take the
    // lowest-index minimum and the maximum closest to it, so the extremes face each other.
    const double tie = 1e-9 * (hi - lo);
    f.min_vertex = static_cast<int>(std::find_if(v.begin(), v.end(), [&](double x) { return x <= lo + tie; }) - v.begin());
    f.max_vertex = static_cast<int>(mx - v.begin());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] < hi - tie) continue;
        const double d = (mesh.position(static_cast<int>(i)) - mesh.position(f.min_vertex)).squaredNorm();
        if (d < best) {
            best = d;
            f.max_vertex = static_cast<int>(i);
        }
    }
    f.field.values[static_cast<std::size_t>(f.min_vertex)] = 0.0;
    f.field.values[static_cast<std::size_t>(f.max_vertex)] = 1.0;

    const int ref = mesh.boundary_loops().empty() ? 0 : mesh.boundary_loops().front().front();
    if (f.field.values[static_cast<std::size_t>(ref)] > 0.5) f = flipped(f);
    return f;
}

FiedlerField flipped(const FiedlerField& fiedler) {
    FiedlerField f = fiedler;
    for (auto& x : f.field.values) x = 1.0 - x;
    for (auto& x : f.raw.values) x = -x;
    std::swap(f.min_vertex, f.max_vertex);
    return f;
}

FiedlerField compute_fiedler(const TriMesh& mesh, MassWeighting weighting, const EigenSolverOptions& options) {
    if (const int c = mesh.component_count(); c != 1)
        throw DisconnectedMeshError("mesh has " + std::to_string(c) + " connected components");
    const auto spec = compute_spectrum(mesh, 2, weighting, options);
    const double lambda1 = spec.eigenvalues[1];
    const double scale = cotangent_laplacian(mesh).matrix.diagonal().sum() / spec.mass.sum();
    if (lambda1 < 1e-10 * std::max(scale, 1.0))
        throw DisconnectedMeshError("first positive eigenvalue is numerically zero");
    FiedlerField f = normalize_fiedler(mesh, spec.eigenvectors[1], lambda1);
    f.residual = eigen_residual(cotangent_laplacian(mesh), spec.mass, lambda1, spec.eigenvectors[1]);
    return f;
}

ScalarField heat_evolve(const SpectralResult& spectrum, const ScalarField& initial, double t, int k_modes) {
    if (k_modes < 1 || k_modes > spectrum.count())
        throw InsufficientModesError("heat_evolve needs " + std::to_string(k_modes) + " modes, spectrum has " +
                                     std::to_string(spectrum.count()));
    const auto u0 = as_vector(initial);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(u0.size());
    for (int k = 0; k < k_modes; ++k) {
        const auto phi = as_vector(spectrum.eigenvectors[static_cast<std::size_t>(k)]);
        const double tau = phi.dot(spectrum.mass.cwiseProduct(u0));
        u += tau * std::exp(-spectrum.eigenvalues[static_cast<std::size_t>(k)] * t) * phi;
    }
    return to_field(u);
}

ScalarField harmonic_field(const TriMesh& mesh, const std::map<int, double>& boundary_values) {
    const int n = static_cast<int>(mesh.vertex_count());
    if (boundary_values.empty()) throw SingularSystemError("harmonic field needs at least one fixed vertex");
    std::vector<int> unknown_index(static_cast<std::size_t>(n), -1);
    int m = 0;
    for (int v = 0; v < n; ++v)
        if (!boundary_values.count(v)) unknown_index[static_cast<std::size_t>(v)] = m++;

    ScalarField out{std::vector<double>(static_cast<std::size_t>(n), 0.0)};
    for (auto [v, val] : boundary_values) out.values[static_cast<std::size_t>(v)] = val;
    if (m == 0) return out;

    const LaplacianMatrix L = cotangent_laplacian(mesh);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int col = 0; col < n; ++col) {
        for (SparseMatrix::InnerIterator it(L.matrix, col); it; ++it) {
            const int row = static_cast<int>(it.row());
            const int ri = unknown_index[static_cast<std::size_t>(row)];
            if (ri < 0) continue;
            const int ci = unknown_index[static_cast<std::size_t>(col)];
            if (ci >= 0) trips.emplace_back(ri, ci, it.value());
            else rhs[ri] -= it.value() * out.values[static_cast<std::size_t>(col)];
        }
    }
    SparseMatrix A(m, m);
    A.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<SparseMatrix> solver(A);
    if (solver.info() != Eigen::Success) throw SingularSystemError("harmonic system could not be factorised");
    const Eigen::VectorXd x = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !x.allFinite())
        throw SingularSystemError("harmonic system has no unique solution");
    const double res = (A * x - rhs).cwiseAbs().maxCoeff();
    if (!(res <= 1e-8 * std::max(1.0, rhs.cwiseAbs().maxCoeff())))
        throw SingularSystemError("harmonic system is singular (residual " + std::to_string(res) + ")");
    for (int v = 0; v < n; ++v)
        if (const int i = unknown_index[static_cast<std::size_t>(v)]; i >= 0) out.values[static_cast<std::size_t>(v)] = x[i];
    return out;
}

ScalarField harmonic_tube_coordinate(const TriMesh& mesh, int zero_loop) {
    const auto& loops = mesh.boundary_loops();
    if (loops.size() != 2) throw TopologyError("tube coordinate needs exactly two boundary loops");
    std::map<int, double> bc;
    for (int v : loops[static_cast<std::size_t>(zero_loop)]) bc[v] = 0.0;
    for (int v : loops[static_cast<std::size_t>(1 - zero_loop)]) bc[v] = 1.0;
    return harmonic_field(mesh, bc);
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace spectube
