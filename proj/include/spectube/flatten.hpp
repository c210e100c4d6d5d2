#pragma once

#include <vector>

#include <Eigen/Core>

#include "spectube/folds.hpp"
#include "spectube/levelset.hpp"
#include "spectube/mesh.hpp"
#include "spectube/spectral.hpp"

namespace spectube {

enum class CutKind { Consistent, Geodesic };

const char* to_string(CutKind kind);

/// Boundary-to-boundary vertex path. The first vertex is next to the Fiedler minimum, the last
/// next to the maximum; the extremes themselves are never on the path.
struct CutPath {
    std::vector<int> vertices;
    CutKind kind = CutKind::Geodesic;
    int min_extreme = -1;
    int max_extreme = -1;

    double length(const TriMesh& mesh) const;
};

/// Shortest edge path between the boundary vertices nearest (in hops) to the two extremes.
/// Interior path vertices avoid the boundary and the extremes, and every edge climbs the Fiedler
/// field at no less than 0.3 of its local gradient.
CutPath geodesic_cut(const TriMesh& mesh, const FiedlerField& field);

/// Threads the cut through one inter-fold gap per fold-carrying bundle, in order of increasing
/// t, over the same climbing edges as geodesic_cut minus every fold vertex. Gaps are ranked by
/// their theta distance to the reference (the minimum's theta, then the previous gap's middle);
/// the waypoint is the fold-free vertex inside the gap closest to the mean of the two facing
/// fold ends. Throws NoGapError when a bundle's folds cover every theta and
/// DisconnectedCorridorError when no gap of a bundle can be reached.
CutPath extract_consistent_cut(const TriMesh& mesh, const FiedlerField& field, const TubeParameterization& param,
                               const std::vector<FoldSegment>& folds, const std::vector<LevelSetBundle>& bundles);

/// Throws if the path is not simple, not edge-connected, or (for consistent cuts) has an
/// interior vertex on a fold face.
void validate_cut(const TriMesh& mesh, const CutPath& cut, const std::vector<FoldSegment>& folds = {});

struct FlatMesh {
    std::vector<Vec3> positions;       ///< 3D position of every flat vertex
    std::vector<Vec2> uv;              ///< mm: u across the tube, v along it
    std::vector<Face> faces;
    std::vector<int> source_vertex;    ///< original vertex of every flat vertex
    std::vector<Eigen::Matrix2d> jacobians; ///< per face, from the face's own 2D frame to uv
    double width = 0.0;                ///< u range [0, width]
    double height = 0.0;               ///< v range [0, height]
    double distortion = 0.0;
    CutKind kind = CutKind::Geodesic;

    /// Euler characteristic of the opened mesh (1 for a disk).
    int euler_characteristic() const;
};

/// Axial coordinate of every vertex: a monotone reparameterization of the Fiedler value by the
/// mean distance between its level sets (area between levels over their mean length), in mm.
std::vector<double> axial_coordinate(const TriMesh& mesh, const ScalarField& field, int knots = 512);

/// Opens the tube along the cut and maps it to the rectangle [0, width] x [0, height]:
/// v is axial_coordinate, u is harmonic (cotangent weights) with the two cut sides pinned to
/// 0 and width and arc-length data on both boundary loops. width is the mean boundary length.
/// Throws FlipError if any face ends up with non-positive orientation.
FlatMesh flatten(const TriMesh& mesh, const CutPath& cut, const FiedlerField& field);

/// Area-weighted mean over faces of s1/s2 + s2/s1 for the singular values of the per-face
/// Jacobian. Throws DegenerateFaceError for zero-area faces in 3D or in uv.
double angle_distortion(const FlatMesh& flat);

/// Per-face Jacobian from the face's 2D frame (e1 along the first edge) to the uv triangle.
Eigen::Matrix2d face_jacobian(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec2& q0, const Vec2& q1,
                              const Vec2& q2);

} // namespace spectube
