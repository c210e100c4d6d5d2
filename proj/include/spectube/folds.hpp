#pragma once

#include <vector>

#include "spectube/levelset.hpp"
#include "spectube/mesh.hpp"

namespace spectube {

/// Normal curvature along one integration curve.
struct CurvatureProfile {
    double curve_theta = 0.0;
    std::vector<double> t;
    std::vector<double> kappa; ///< 1/mm
    std::vector<double> inflections;
    /// Deepest point of every sufficiently negative lobe, refined by a parabola fit.
    std::vector<double> min_points;
    std::vector<double> min_values;

    /// kappa interpolated linearly in t (clamped).
    double kappa_at(double value) const;
};

struct CurvatureOptions {
    /// Resampling step along the curve in mm; <= 0 picks twice the mean edge length.
    double spacing = 0.0;
    /// Lobes whose minimum is above -min_curvature are ignored.
    double min_curvature = 0.0;
    /// Multiplies the mesh normals; use -1 when the mesh normals face away from the lumen.
    double normal_sign = 1.0;
};

/// Second-difference curvature <p+ - 2p + p-, n> / s^2 on an arc-length resampling of the curve,
/// n interpolated from the mesh vertex normals. Throws TooFewSamplesError below 3 samples.
CurvatureProfile normal_curvature_profile(const TriMesh& mesh, const IntegrationCurve& curve,
                                          const CurvatureOptions& options = {});
/// Same, with precomputed unit vertex normals.
CurvatureProfile normal_curvature_profile(const TriMesh& mesh, const std::vector<Vec3>& vertex_normals,
                                          const IntegrationCurve& curve, const CurvatureOptions& options = {});

struct FittingPlane {
    Vec3 center = Vec3::Zero();
    Vec3 e1 = Vec3::UnitX(); ///< largest spread
    Vec3 e2 = Vec3::UnitY();
    Vec3 normal = Vec3::UnitZ(); ///< smallest spread; e1, e2, normal is right-handed
    Vec3 eigenvalues = Vec3::Zero(); ///< descending
};

/// Principal axes of the sample covariance. Throws DegenerateGeometryError for collinear samples.
FittingPlane fit_plane(const std::vector<Vec3>& samples);
FittingPlane fit_plane(const LevelSet& level_set);

struct LevelSetBundle {
    double t0 = 0.0;
    double t1 = 0.0; ///< consensus curvature minimum
    double t2 = 0.0;
    std::vector<LevelSet> level_sets; ///< sorted by t, all inside [t0, t2]
    FittingPlane fitting_plane;        ///< plane of the middle level set
    int votes = 0;                     ///< curves supporting the bundle
    bool collapsed = false;
    double min_encompassing_radius = 0.0; ///< after global normalisation
};

struct BundleOptions {
    double quorum = 0.25;
    int n_levels = 100;  ///< uniform level count; sets the clustering gap 0.5 / n_levels
    int dense_levels = 12;
};

/// Clusters the (inflection, minimum, inflection) votes of all profiles by their minimum and
/// keeps clusters backed by at least quorum * profiles.size() curves. Each bundle is resampled
/// with dense_levels (at least 8) level sets. `retained` receives the uniform levels that fall
/// inside some bundle; the rest are discarded.
std::vector<LevelSetBundle> build_bundles(const TriMesh& mesh, const ScalarField& field,
                                          const std::vector<CurvatureProfile>& profiles,
                                          const std::vector<LevelSet>& initial_levels, const BundleOptions& options = {},
                                          std::vector<LevelSet>* retained = nullptr);

/// Rigid map from one member level set's plane onto the reference plane.
struct LevelAlignment {
    double t = 0.0;
    FittingPlane plane;
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    /// 2D coordinates in the reference basis of a point near this level.
    Vec2 map(const Vec3& p, const FittingPlane& reference) const;
};

struct AlignedBundle {
    FittingPlane reference;
    std::vector<LevelAlignment> levels;
    std::vector<std::vector<Vec2>> curves; ///< aligned level-set polylines
    bool used_fallback_axis = false;       ///< some member normal was antiparallel to the reference
};

/// Projects each member onto its own plane, translates its centre onto the reference centre and
/// rotates its normal onto the reference normal (about their cross product). Normals are first
/// oriented to agree with the reference unless `orient_normals` is false; antiparallel normals
/// then rotate about an arbitrary axis orthogonal to the reference normal.
AlignedBundle project_and_align(const LevelSetBundle& bundle, bool orient_normals = true);

struct FoldSegment {
    int label = 0;
    std::vector<int> faces;
    std::vector<Vec3> contour;
    double theta_min = 0.0; ///< footprint, may wrap (theta_min > theta_max)
    double theta_max = 0.0;
    double theta_center = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    double area = 0.0;
    Vec3 center = Vec3::Zero(); ///< area-weighted centroid pulled onto the surface
    double mean_curvature = 0.0;
};

struct SegmentOptions {
    /// Minimum peak prominence as a fraction of the largest projected length. Curves bending
    /// around the ends of a fold add shoulder maxima a few percent high; this must exceed them.
    double prominence = 0.25;
    /// Relative spread of the projected lengths below which the bundle has no theta structure.
    double flat_tolerance = 0.02;
};

/// Projected length of every traced curve through the bundle, as a function of theta.
std::vector<double> projected_lengths(const AlignedBundle& aligned, const TubeParameterization& param);

/// Folds of one bundle: peaks of the projected curve length are fold centres, the adjacent
/// minima bound the fold in theta; member faces additionally need a negative interpolated
/// normal curvature. Each fold keeps its largest edge-connected component.
/// Throws NoExtremaError when the projected length shows no theta structure.
std::vector<FoldSegment> segment_folds(const TriMesh& mesh, const LevelSetBundle& bundle,
                                       const AlignedBundle& aligned, const TubeParameterization& param,
                                       const std::vector<CurvatureProfile>& profiles,
                                       const SegmentOptions& options = {});

/// Radius of the smallest circle enclosing 2D points.
double min_enclosing_radius(const std::vector<Vec2>& points);

/// Encompassing radius of a level set in its own fitting plane.
double encompassing_radius(const LevelSet& level_set);

/// Sets bundle.collapsed and min_encompassing_radius using the tube-wide normalisation scale
/// (the median encompassing radius of the uniform level sets). Collapsed iff the smallest member
/// radius is strictly below `threshold` after normalisation.
bool detect_collapsed(LevelSetBundle& bundle, double median_radius, double threshold = 0.1);

/// Median encompassing radius over a set of level sets.
double median_encompassing_radius(const std::vector<LevelSet>& levels);

/// Boundary edges of a face set chained into polylines (longest first).
std::vector<std::vector<int>> face_set_boundary(const TriMesh& mesh, const std::vector<int>& faces);

} // namespace spectube
