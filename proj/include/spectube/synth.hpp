#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectube/mesh.hpp"

namespace spectube {

enum class SpineKind { Straight, Bend, SBend };

/// Planar centreline. Bends are circular arcs centred at fixed fractions of the length
/// (one arc at 1/2, or two opposite arcs at 1/3 and 2/3).
struct SpineSpec {
    SpineKind kind = SpineKind::Straight;
    double bend_angle_deg = 0.0;  ///< per arc; sign selects the bend direction
    double bend_arc_length = 80.0; ///< mm of spine covered by each arc
};

/// One ring of folds around the tube. Folds are centred at theta_offset + j * 2pi / n_folds and
/// each spans 2pi / n_folds - theta_gap radians.
struct RingSpec {
    double s_center = 0.0;  ///< mm along the spine
    int n_folds = 3;
    double fold_depth = 3.0; ///< inward displacement at the crest, mm
    double fold_width = 8.0; ///< axial half-width, mm
    double theta_offset = 0.0;
    double theta_gap = 0.4;
    /// Optional per-fold depths overriding fold_depth.
    std::vector<double> depths;
};

struct PinchSpec {
    double s_center = 0.0;
    double factor = 0.05;   ///< radius multiplier at the waist
    double half_width = 10.0;
};

struct TubeSpec {
    std::string name = "tube";
    double length = 220.0;
    double radius = 10.0;
    SpineSpec spine;
    std::vector<RingSpec> rings;
    std::optional<PinchSpec> pinch;
    int n_axial = 256;          ///< axial segments (n_axial + 1 vertex rings)
    int n_circumferential = 64;
    int seed = 42;
};

/// Throws SpecValidationError on unknown keys or out-of-range values.
TubeSpec tube_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TubeSpec& spec);
void validate(const TubeSpec& spec);

struct GroundTruthFold {
    int label = 0;
    int ring = 0;
    int index = 0;       ///< position within the ring
    double s_center = 0; ///< material coordinates of the crest
    double theta_center = 0;
    double depth = 0;
    std::vector<int> faces;
    Vec3 center = Vec3::Zero(); ///< crest position on the emitted surface
};

struct LandmarkPair {
    Vec3 src = Vec3::Zero();
    Vec3 dst = Vec3::Zero();
};

struct GroundTruth {
    std::vector<GroundTruthFold> folds;
    std::vector<LandmarkPair> landmarks; ///< empty for single tubes
    std::vector<std::pair<Vec3, Vec3>> spine_correspondence;
    /// Per-vertex material coordinates.
    std::vector<double> vertex_s;
    std::vector<double> vertex_theta;
    bool has_collapse = false; ///< pinch below 10 % of the radius
};

nlohmann::json to_json(const GroundTruth& gt);
/// Reads the folds, landmarks, spine correspondence and collapse flag written by to_json.
/// Per-vertex material coordinates are not stored and come back empty. Throws ConfigError.
GroundTruth ground_truth_from_json(const nlohmann::json& j);

struct SyntheticTube {
    TriMesh mesh;
    GroundTruth truth;
};

/// Open tube with face winding chosen so normals point into the lumen. Ring 0 (s = 0) holds
/// vertices 0 .. n_circumferential-1, so boundary loop 0 is the s = 0 end.
SyntheticTube generate_tube(const TubeSpec& spec);

struct DeformationSpec {
    double axial_stretch = 0.0;     ///< mean relative length change
    double stretch_wobble = 0.0;    ///< amplitude of the non-uniform part, as a fraction of length
    double bend_change_deg = 0.0;   ///< added to every spine arc
    double twist_deg = 0.0;         ///< peak twist at mid-length, zero at both ends
    double noise_mm = 0.0;
    Eigen::Vector3d rotation_axis = Eigen::Vector3d::UnitX();
    double rotation_deg = 0.0;
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    int seed = 42;
};

DeformationSpec deformation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DeformationSpec& d);

struct SyntheticPair {
    TriMesh src;
    TriMesh dst;
    GroundTruth src_truth;
    GroundTruth dst_truth; ///< same faces, landmarks carried through the deformation
};

/// Transports every vertex by a smooth deformation (non-uniform axial stretch, twist, bend change,
/// optional rigid motion) and adds bounded noise. Connectivity is shared.
/// Throws SelfIntersectionError if a deformed bend radius drops below the tube radius.
SyntheticPair deform_pair(const TubeSpec& spec, const DeformationSpec& deformation);

/// Named acceptance corpus, seed 42.
std::vector<TubeSpec> corpus_specs();
TubeSpec corpus_spec(const std::string& name);

struct CorpusPairSpec {
    std::string name;
    std::string tube;
    DeformationSpec deformation;
};
std::vector<CorpusPairSpec> corpus_pairs();

/// Straight pinched tube used as the exact-threshold collapse control.
TubeSpec pinch_control_spec(double factor);

/// Fold-free straight cylinder of height h and radius r.
TriMesh make_cylinder(double height, double radius, int n_axial, int n_circumferential);
/// Cylinder closed by two apex vertices (vertex count - 2 and - 1).
TriMesh make_capped_cylinder(double height, double radius, int n_axial, int n_circumferential);
TriMesh make_torus(double major, double minor, int n_major, int n_minor);
TriMesh make_icosahedron();
/// Two disjoint cylinders in one mesh.
TriMesh make_two_cylinders(double height, double radius, int n_axial, int n_circumferential);

} // namespace spectube
