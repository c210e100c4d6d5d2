#pragma once

#include <functional>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectube/folds.hpp"
#include "spectube/levelset.hpp"
#include "spectube/mesh.hpp"
#include "spectube/spectral.hpp"

namespace spectube {

/// Regular grid over [0, 2pi) x [0, 1]. Column i sits at theta = 2pi i / n_theta (periodic),
/// row j at t = j / (n_t - 1).
struct GridSpec {
    int n_theta = 256;
    int n_t = 256;

    double theta_of(double i) const;
    double t_of(double j) const;
    /// Continuous grid coordinates of (theta, t).
    double col(double theta) const;
    double row(double t) const;
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_theta) + static_cast<std::size_t>(i); }
    std::size_t size() const { return static_cast<std::size_t>(n_theta) * static_cast<std::size_t>(n_t); }
};

/// phi(theta, t) = (theta + d_theta, t + d_t), displacements stored in grid units per node.
struct RegistrationMap {
    GridSpec grid;
    std::vector<double> d_theta;
    std::vector<double> d_t;

    explicit RegistrationMap(GridSpec g = {});
    /// Mapped (theta, t); theta wrapped to [0, 2pi), t clamped to [0, 1].
    Vec2 apply(double theta, double t) const;
    /// Smallest Jacobian determinant of the grid map over interior nodes.
    double min_jacobian() const;
};

struct BoundaryPairing {
    LoopParameterization src;
    LoopParameterization dst;
    double theta_offset = 0.0; ///< dst theta of the src base point
    bool orientation_flip = false;
};

/// Arc-length parameterizations of both gamma_0 loops from their base vertices. The loops are
/// the ones holding the bases; each field must average at most 0.5 on its base loop (the Fiedler
/// minimum end), otherwise OrientationMismatchError. orientation_flip reverses the dst traversal.
BoundaryPairing match_boundaries(const TriMesh& src, const FiedlerField& src_field, const TriMesh& dst,
                                 const FiedlerField& dst_field, int src_base, int dst_base, bool orientation_flip,
                                 LoopOrientation orientation = LoopOrientation::Cw);

/// phi(theta, t) = (theta + offset, t).
RegistrationMap global_register(const TubeParameterization& src, const TubeParameterization& dst,
                                const BoundaryPairing& pairing, GridSpec grid = {});

struct CharacteristicField {
    GridSpec grid;
    std::vector<double> raw;    ///< 0/1 indicator
    std::vector<double> values; ///< smoothed
    double sigma_theta = 0.0;   ///< grid units
    double sigma_t = 0.0;
    std::vector<Vec2> node_gradients; ///< central differences of values; filled by update_gradients()

    /// Recomputes node_gradients after values change.
    void update_gradients();
    /// Bilinear sample at continuous grid coordinates (periodic in columns, clamped in rows).
    double sample(double col, double row) const;
    /// Gradient with respect to grid coordinates: nodal central differences, bilinearly interpolated.
    Vec2 gradient(double col, double row) const;
};

/// Rasterizes the fold faces in (theta, t) and smooths with a Gaussian that wraps in theta and
/// reflects at t = 0 and t = 1 (mass preserving). sigma <= 0 picks 2 % of each axis.
CharacteristicField build_characteristic(const TriMesh& mesh, const std::vector<FoldSegment>& folds,
                                         const TubeParameterization& param, GridSpec grid = {},
                                         double sigma_theta = 0.0, double sigma_t = 0.0);
/// Separable Gaussian smoothing with the same boundary handling.
std::vector<double> gaussian_smooth(const GridSpec& grid, const std::vector<double>& values, double sigma_theta,
                                    double sigma_t);

struct EnergyTerms {
    double data = 0.0;
    double smooth = 0.0;
    double total() const { return data + smooth; }
};

/// Sum over nodes of (chi1 - chi2 o phi)^2 plus beta * |grad displacement|^2, unit node measure,
/// central differences (periodic in theta, one-sided at the t boundaries).
EnergyTerms energy(const RegistrationMap& map, const CharacteristicField& chi1, const CharacteristicField& chi2,
                   double beta = 1.0);

struct RefineOptions {
    double step = 0.1;
    int max_iters = 4000;
    double tol = 1e-6;
    double beta = 1.0;
    int max_halvings = 20;
};

struct TraceRow {
    int iter = 0;
    double energy = 0.0;
    double data = 0.0;
    double smooth = 0.0;
    double step = 0.0;
};

struct RefineResult {
    RegistrationMap map;
    std::vector<TraceRow> trace; ///< row 0 is the starting energy
    bool converged = false;
};

/// Explicit Euler descent of `energy`: d_phi/dtau = (chi1 - chi2 o phi) grad chi2(phi) + beta * Laplacian(phi),
/// with d_t pinned to zero on the first and last row.
/// A step that raises the energy or folds the grid is retried at half size; FoldOverError when
/// a fold-over survives every halving.
RefineResult refine_registration(const RegistrationMap& start, const CharacteristicField& chi1,
                                 const CharacteristicField& chi2, const RefineOptions& options = {});

/// Locates (theta, t) on a parameterized mesh.
class ParamLocator {
public:
    ParamLocator(const TriMesh& mesh, const TubeParameterization& param, int buckets = 128);
    /// Surface point whose interpolated (theta, t) is closest to the query.
    SurfacePoint locate(double theta, double t) const;

private:
    struct Tri {
        int face;
        Vec2 a, b, c; ///< unwrapped (theta, t)
    };
    const TriMesh* mesh_;
    int buckets_;
    std::vector<Tri> tris_;
    std::vector<std::vector<int>> cells_;
    void insert(int tri, double th_lo, double th_hi, double t_lo, double t_hi);
};

/// (theta, t) of a surface point, theta interpolated across the seam.
Vec2 param_coordinates(const TriMesh& mesh, const TubeParameterization& param, const SurfacePoint& p);

/// src surface point -> (theta, t) -> map -> dst surface point.
Vec3 map_point(const RegistrationMap& map, const TriMesh& src, const TubeParameterization& src_param,
               const ParamLocator& dst_locator, const TriMesh& dst, const Vec3& point);

nlohmann::json registration_header(const RegistrationMap& map);
/// Little-endian float64 d_theta then d_t, row-major by t.
std::vector<char> registration_grid_bytes(const RegistrationMap& map);
std::string trace_csv(const std::vector<TraceRow>& trace);

} // namespace spectube
