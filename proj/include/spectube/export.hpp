#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spectube/flatten.hpp"
#include "spectube/folds.hpp"
#include "spectube/levelset.hpp"
#include "spectube/mesh_io.hpp"
#include "spectube/spectral.hpp"

namespace spectube {

void write_text(const std::filesystem::path& path, const std::string& text);
/// Two-space indented JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes);

/// Little-endian float64 array.
std::vector<char> float64_bytes(const std::vector<double>& values);

/// Eigen header. `sidecars` names the binary files holding the scaled and raw Fiedler vectors.
nlohmann::json eigen_json(const FiedlerField& fiedler, const std::string& scaled_file, const std::string& raw_file);

nlohmann::json level_sets_json(const std::vector<LevelSet>& levels);
nlohmann::json centerline_json(const Centerline& line);

/// {label, faces, area_mm2, theta_range, t_range, ...} per fold plus the bundle list.
nlohmann::json folds_json(const std::vector<FoldSegment>& folds, const std::vector<int>& fold_bundle,
                          const std::vector<LevelSetBundle>& bundles);

/// Per-face fold label, -1 outside every fold.
std::vector<int> fold_face_labels(std::size_t face_count, const std::vector<FoldSegment>& folds);

/// Distinct fill for a fold label; grey for -1.
Rgb label_color(int label);

/// Flat mesh as SVG: every face filled by the rainbow of its mean vertex value, fold faces
/// repeated as <polygon class="fold" data-label=...> on top, and the two seam sides u = 0 and
/// u = width as <line class="seam">.
std::string flat_svg(const FlatMesh& flat, const std::vector<double>& vertex_values,
                     const std::vector<int>& face_labels, double pixels_per_mm = 4.0);

/// Flat mesh as OBJ with z = 0.
void save_flat_obj(const FlatMesh& flat, const std::filesystem::path& path);

} // namespace spectube
