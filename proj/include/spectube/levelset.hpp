#pragma once

#include <vector>

#include "spectube/mesh.hpp"
#include "spectube/spectral.hpp"

namespace spectube {

/// Contour point on a mesh edge.
struct LevelSetSample {
    Vec3 point = Vec3::Zero();
    int edge = -1;      ///< crossed edge
    double alpha = 0.0; ///< position along edge v0 -> v1
    SurfacePoint anchor; ///< face holding the segment that leaves this sample
};

/// One connected component of an iso-contour. Closed contours do not repeat their first
/// sample; use polyline() for an explicitly closed point list.
struct LevelSet {
    double t = 0.0;
    std::vector<LevelSetSample> samples;
    bool closed = true;
    double total_length = 0.0;

    std::vector<Vec3> points() const;
    /// Points with the first repeated at the end when closed.
    std::vector<Vec3> polyline() const;
    /// Length-weighted mean of the contour.
    Vec3 centroid() const;
};

/// Marching-triangles contour(s) of `field` at `t`, linear interpolation along edges.
/// A vertex lying exactly on the iso-value nudges the iso-value by +1e-12.
/// Segments are oriented along n x grad(f); closed loops start at their lowest edge index.
/// Throws EmptyLevelSetError if no edge crosses t.
std::vector<LevelSet> extract_level_set(const TriMesh& mesh, const ScalarField& field, double t);

/// Iso-values i / (n + 1), i = 1..n. For each level the longest closed loop is kept; empty or
/// open-only levels are skipped with a notice.
std::vector<LevelSet> uniform_level_sets(const TriMesh& mesh, const ScalarField& field, int n);

/// Streamline of the piecewise-linear gradient from one boundary loop to the other.
struct IntegrationCurve {
    double theta = 0.0;
    std::vector<Vec3> points;
    std::vector<double> t; ///< strictly increasing
    std::vector<SurfacePoint> anchors;

    /// Linear interpolation of the curve at field value `value` (clamped to the ends).
    Vec3 point_at(double value) const;
    double length() const;
};

struct TraceOptions {
    /// Consecutive steps without progress in t before giving up.
    int stagnation_steps = 100;
    double min_gradient = 1e-12;
};

/// Traces from a point on a boundary loop until the opposite loop is reached. Where a face
/// gradient points straight back across an edge the trace slides along that edge toward the
/// larger endpoint; at a vertex it leaves through the face whose gradient points into it, or
/// along the steepest ascending edge.
/// Throws StagnationError at vanishing gradients or a local maximum off the target loop.
IntegrationCurve trace_integration_curve(const TriMesh& mesh, const ScalarField& field, const SurfacePoint& start,
                                         double theta, const TraceOptions& options = {});

/// (theta, t) coordinates of every vertex.
struct TubeParameterization {
    std::vector<double> theta; ///< [0, 2pi)
    std::vector<double> t;     ///< the field itself
    std::vector<IntegrationCurve> curves; ///< curve 0 is the seam
    int base_vertex = -1;
    int base_loop = -1;
    LoopOrientation orientation = LoopOrientation::Ccw;
    LoopParameterization boundary;
};

struct ParameterizationOptions {
    int n_curves = 64;
    LoopOrientation orientation = LoopOrientation::Ccw;
    TraceOptions trace;
};

/// Seeds n_curves traces at equal arc-length spacing along the base vertex's loop. A vertex's
/// theta interpolates linearly between the two traced curves that bracket it on its own level.
TubeParameterization parameterize_tube(const TriMesh& mesh, const ScalarField& field, int base_vertex,
                                       const ParameterizationOptions& options = {});

struct Centerline {
    std::vector<Vec3> points;
    std::vector<double> t;
};

Centerline centerline(const TriMesh& mesh, const ScalarField& field, int n_levels);

/// Nearest source centerline index mapped to the same index on the destination.
/// Throws EmptyCenterlineError on empty or mismatched centerlines.
Vec3 corresponding_point(const Centerline& src, const Centerline& dst, const Vec3& query);

/// Per-face constant gradient of a piecewise-linear field.
Vec3 face_gradient(const TriMesh& mesh, const ScalarField& field, int face);

} // namespace spectube
