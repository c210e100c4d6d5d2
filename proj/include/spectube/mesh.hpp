#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace spectube {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Face = std::array<int, 3>;

/// Faces below this area (mm^2) are rejected when a mesh is built.
inline constexpr double kDegenerateAreaTolerance = 1e-12;

/// Undirected edge with its (one or two) incident faces. `v0 < v1`; `f1 == -1` on the boundary.
struct Edge {
    int v0 = -1;
    int v1 = -1;
    int f0 = -1;
    int f1 = -1;

    bool is_boundary() const { return f1 < 0; }
    int other_face(int f) const { return f == f0 ? f1 : f0; }
};

/// Indexed triangle surface. Positions are millimetres, faces counter-clockwise seen from
/// the side their normals point to. Immutable once built; all queries are const.
class TriMesh {
public:
    TriMesh() = default;

    /// Builds adjacency and boundary loops.
    /// Throws ParseError for out-of-range indices, NonManifoldError for an edge shared by more
    /// than two faces, DegenerateFaceError for a face with area below the tolerance.
    TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces);

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t face_count() const { return faces_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const std::vector<Vec3>& vertices() const { return vertices_; }
    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Vec3& position(int v) const { return vertices_[static_cast<std::size_t>(v)]; }
    const Face& face(int f) const { return faces_[static_cast<std::size_t>(f)]; }

    /// Edge i of a face joins corners i and (i+1)%3.
    const std::array<int, 3>& face_edges(int f) const { return face_edges_[static_cast<std::size_t>(f)]; }
    std::span<const int> neighbors(int v) const;
    std::span<const int> vertex_faces(int v) const;

    /// Index of the undirected edge (a,b), or -1.
    int edge_index(int a, int b) const;
    /// Face in which a->b appears in counter-clockwise order, or -1.
    int face_with_directed_edge(int a, int b) const;
    /// Face across edge `local_edge` of face f, or -1 on the boundary.
    int adjacent_face(int f, int local_edge) const;

    /// Boundary cycles oriented as induced by the faces, ordered by their smallest vertex index;
    /// each cycle starts at its smallest vertex.
    const std::vector<std::vector<int>>& boundary_loops() const { return loops_; }
    /// Loop containing v, or -1 for interior vertices.
    int loop_of_vertex(int v) const { return vertex_loop_[static_cast<std::size_t>(v)]; }
    bool is_boundary_vertex(int v) const { return loop_of_vertex(v) >= 0; }

    double face_area(int f) const;
    Vec3 face_normal(int f) const;
    /// Area-weighted vertex normals, unit length.
    std::vector<Vec3> vertex_normals() const;
    double mean_edge_length() const;
    double total_area() const;
    int component_count() const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
    std::vector<std::array<int, 3>> face_edges_;
    std::vector<int> neighbor_offsets_;
    std::vector<int> neighbor_list_;
    std::vector<int> vface_offsets_;
    std::vector<int> vface_list_;
    std::vector<std::vector<int>> loops_;
    std::vector<int> vertex_loop_;
};

/// Per-vertex real values on a mesh.
struct ScalarField {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

struct TopologyReport {
    int vertices = 0;
    int edges = 0;
    int faces = 0;
    int euler_characteristic = 0;
    int components = 0;
    int genus = 0;
    int boundary_count = 0;
    bool is_cylinder = false;
};

/// Genus from V - E + F = 2c - 2g - b; a cylinder is one component with g = 0 and b = 2.
TopologyReport validate_cylinder_topology(const TriMesh& mesh);

enum class LoopOrientation { Ccw, Cw };

/// Arc-length angle along one boundary loop, starting at a base vertex.
struct LoopParameterization {
    std::vector<int> vertices; ///< loop vertices in traversal order, base first
    std::vector<double> theta; ///< matching angles in [0, 2pi), theta[0] == 0
    double length = 0.0;       ///< loop length in mm
};

/// Ccw follows the face-induced loop direction, Cw the reverse.
/// Throws VertexNotOnLoopError if base_vertex is not on the loop.
LoopParameterization boundary_arc_length_parameterization(const TriMesh& mesh, int loop_index,
                                                          int base_vertex, LoopOrientation orientation);

/// Deletes every face whose three vertices are within `radius` (edge-path distance, mm) of
/// either seed, then drops unreferenced vertices. Turns a closed tube into an open cylinder.
TriMesh remove_caps(const TriMesh& mesh, int seed_a, int seed_b, double radius);

/// Same mesh with positions mapped through a rigid or similarity transform.
TriMesh transformed(const TriMesh& mesh, const Eigen::Affine3d& xf);

/// Same surface with the winding of every face reversed.
TriMesh flipped_orientation(const TriMesh& mesh);

/// Barycentric point on a face.
struct SurfacePoint {
    int face = -1;
    Vec3 bary = Vec3::Zero();
};

Vec3 surface_position(const TriMesh& mesh, const SurfacePoint& p);
/// Brute-force closest point on the surface.
SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& query);
/// Closest point restricted to a face subset.
SurfacePoint closest_surface_point(const TriMesh& mesh, const Vec3& query, const std::vector<int>& faces);

} // namespace spectube
