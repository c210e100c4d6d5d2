#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "spectube/eval.hpp"
#include "spectube/folds.hpp"
#include "spectube/levelset.hpp"
#include "spectube/registration.hpp"
#include "spectube/spectral.hpp"

namespace spectube {

/// Knobs for the single-tube analysis; every field is also a config key of the same name.
struct AnalysisOptions {
    int base_loop = 0;   ///< boundary loop designated as gamma_0 (the Fiedler minimum end)
    /// theta = 0 vertex on base_loop; -1 takes the loop vertex nearest the Fiedler minimum.
    int base_vertex = -1;
    int n_levels = 100;  ///< uniform level sets
    int n_curves = 64;
    LoopOrientation orientation = LoopOrientation::Cw;
    double curvature_spacing = 0.0;
    double min_curvature = 0.05; ///< 1/mm
    double quorum = 0.25;
    int dense_levels = 12;
    double prominence = 0.25;
    double collapse_threshold = 0.1;
};

AnalysisOptions analysis_options_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AnalysisOptions& o);

struct TubeAnalysis {
    FiedlerField fiedler;
    bool flipped = false;        ///< field replaced by 1 - field so its minimum sits on base_loop
    double normal_sign = 1.0;    ///< +1 when the mesh normals face the lumen
    TubeParameterization param;
    std::vector<LevelSet> levels;          ///< uniform level sets
    std::vector<LevelSet> retained_levels; ///< uniform levels inside some bundle
    std::vector<CurvatureProfile> profiles; ///< one per traced curve
    std::vector<LevelSetBundle> bundles;
    double median_radius = 0.0;
    std::vector<FoldSegment> folds; ///< labels 0.. sorted by (t, theta)
    std::vector<int> fold_bundle;   ///< bundle index of every fold
};

/// Fiedler field, parameterisation, curvature profiles, bundles, collapse flags and folds.
TubeAnalysis analyze_tube(const TriMesh& mesh, const AnalysisOptions& options = {});

/// Mesh vertex on loop `loop` closest to vertex v.
int nearest_loop_vertex(const TriMesh& mesh, int loop, int v);

/// +1 if the vertex normals mostly point toward the level-set centroids, else -1.
double lumen_normal_sign(const TriMesh& mesh, const std::vector<Vec3>& normals, const ScalarField& field,
                         const std::vector<LevelSet>& levels);

enum class FlipMode { Auto, Off, On };

struct RegisterOptions {
    /// theta = 0 vertices; -1 uses AnalysisOptions::base_vertex. Their loops become gamma_0.
    int src_base = -1;
    int dst_base = -1;
    /// Auto compares the handedness of the two base-loop traversals against the tube axis and
    /// reverses the target's theta direction when they disagree.
    FlipMode orientation_flip = FlipMode::Auto;
    GridSpec grid;
    double sigma_theta = 0.0; ///< grid units, <= 0 for 2 % of the axis
    double sigma_t = 0.0;
    RefineOptions refine;
};

struct PairRegistration {
    TubeAnalysis src;
    TubeAnalysis dst;
    BoundaryPairing pairing;
    bool auto_flipped = false;
    CharacteristicField chi_src;
    CharacteristicField chi_dst;
    RegistrationMap global;
    RefineResult refined;
};

PairRegistration register_tubes(const TriMesh& src, const TriMesh& dst, const AnalysisOptions& analysis = {},
                                const RegisterOptions& options = {});

/// Sign of the area vector of the ordered loop along the direction to the other loop's centroid.
int loop_handedness(const TriMesh& mesh, const std::vector<int>& ordered_loop);

struct LandmarkErrors {
    DistanceErrorReport global;
    DistanceErrorReport refined;
};

/// Held-out landmark errors of both maps of a registration run.
LandmarkErrors landmark_errors(const PairRegistration& run, const TriMesh& src, const TriMesh& dst,
                               const std::vector<LandmarkPair>& landmarks, double control_fraction = 0.75,
                               std::uint64_t seed = 42);

} // namespace spectube
