#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectube/mesh.hpp"
#include "spectube/synth.hpp"

namespace spectube {

/// Intersection area over union area. Throws EmptyGroundTruthError for an empty truth set.
double sar(const std::vector<int>& ground_truth, const std::vector<int>& detected, const TriMesh& mesh);

struct FoldMatch {
    int truth = -1;
    int detected = -1;
    double overlap_fraction = 0.0; ///< matched overlap area / truth area
    double sar = 0.0;
    bool detected_ok = false;      ///< overlap > 50 % of the truth area
};

struct SegmentationScore {
    std::vector<FoldMatch> matches; ///< one per truth fold, in truth order
    std::vector<double> sar_values; ///< SAR of every true positive
    int tp = 0;
    int fp = 0;
    int fn = 0;
    double sensitivity = 0.0; ///< 0 when there are no truth folds
    double mean_sar = 0.0;
};

/// Greedy one-to-one matching by descending overlap area. A truth fold counts as found when
/// its match covers more than half of its area; unmatched or insufficient detections are FPs.
SegmentationScore score_detection(const std::vector<std::vector<int>>& truth,
                                  const std::vector<std::vector<int>>& detected, const TriMesh& mesh);

nlohmann::json to_json(const SegmentationScore& score);
/// One-row plain-text table: id, #true, sensitivity, #FNs, #FPs, SAR.
std::string score_table(const std::vector<std::pair<std::string, SegmentationScore>>& rows);

struct DistanceErrorReport {
    int n_control = 0;
    int n_heldout = 0;
    std::vector<int> heldout; ///< landmark indices
    std::vector<double> errors;
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
    std::uint64_t seed = 0;
};

/// Seeded control/held-out split of the landmarks; the error of a held-out pair is the distance
/// between map(src) and the true dst. Throws TooFewLandmarksError below 2 pairs.
DistanceErrorReport distance_error(const std::function<Vec3(const Vec3&)>& map,
                                   const std::vector<LandmarkPair>& landmarks, double control_fraction = 0.75,
                                   std::uint64_t seed = 42);

/// Indices of the control landmarks for the same split distance_error uses.
std::vector<int> control_landmarks(int n, double control_fraction, std::uint64_t seed);

nlohmann::json to_json(const DistanceErrorReport& report);

} // namespace spectube
