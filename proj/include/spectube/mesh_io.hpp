#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "spectube/mesh.hpp"

namespace spectube {

enum class MeshFormat { Obj, Ply };

using Rgb = std::array<std::uint8_t, 3>;

/// Reads `v`/`f` OBJ records (polygons are fan-triangulated, `v/vt/vn` tokens accepted) or PLY
/// (ascii / binary_little_endian; only x, y, z and the face index list are used).
/// Vertex order is preserved. Throws ParseError / NonManifoldError / DegenerateFaceError.
TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format);
/// Format from the file extension.
TriMesh load_mesh(const std::filesystem::path& path);

void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

struct PlyWriteOptions {
    bool binary = false;
    std::optional<std::vector<Rgb>> vertex_colors;
    std::optional<std::vector<Rgb>> face_colors;
    /// Extra per-face integer property named `label`.
    std::optional<std::vector<int>> face_labels;
};

void save_ply(const TriMesh& mesh, const std::filesystem::path& path, const PlyWriteOptions& options = {});

/// Polylines as OBJ `v` + `l` records; closed polylines repeat their first index.
void save_polylines_obj(const std::vector<std::vector<Vec3>>& lines, const std::vector<bool>& closed,
                        const std::filesystem::path& path);

/// Blue (0) through cyan, green, yellow to red (1).
Rgb rainbow(double value);

} // namespace spectube
