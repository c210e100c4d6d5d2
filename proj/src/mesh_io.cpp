#include "spectube/mesh_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "spectube/error.hpp"

namespace spectube {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

TriMesh load_obj(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string tag;
        if (!(ss >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Vec3 p;
            if (!(ss >> p[0] >> p[1] >> p[2]))
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": malformed vertex");
            verts.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ss >> tok) {
                const auto slash = tok.find('/');
                const std::string head = tok.substr(0, slash);
                int value = 0;
                auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
                if (ec != std::errc{} || ptr != head.data() + head.size() || value == 0)
                    throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad face index '" + tok + "'");
                // Negative indices are relative to the current end of the vertex list.
                idx.push_back(value > 0 ? value - 1 : static_cast<int>(verts.size()) + value);
            }
            if (idx.size() < 3)
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
            for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
        }
    }
    return TriMesh(std::move(verts), std::move(faces));
}

struct PlyProperty {
    std::string name;
    std::string type;       // scalar type, or list item type
    std::string count_type; // non-empty for lists
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> props;
};

std::size_t ply_type_size(const std::string& t) {
    if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
    if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
    if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
    if (t == "double" || t == "float64") return 8;
    throw ParseError("unknown PLY type '" + t + "'");
}

double read_binary_le(std::istream& in, const std::string& t) {
    unsigned char buf[8];
    const std::size_t n = ply_type_size(t);
    if (!in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n)))
        throw ParseError("unexpected end of binary PLY data");
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + n);
    auto get = [&]<typename T>(T) {
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return static_cast<double>(v);
    };
    if (t == "char" || t == "int8") return get(std::int8_t{});
    if (t == "uchar" || t == "uint8") return get(std::uint8_t{});
    if (t == "short" || t == "int16") return get(std::int16_t{});
    if (t == "ushort" || t == "uint16") return get(std::uint16_t{});
    if (t == "int" || t == "int32") return get(std::int32_t{});
    if (t == "uint" || t == "uint32") return get(std::uint32_t{});
    if (t == "float" || t == "float32") return get(float{});
    return get(double{});
}

TriMesh load_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("ply", 0) != 0) throw ParseError(path.string() + ": missing 'ply' magic");
    std::string format;
    std::vector<PlyElement> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "format") {
            ss >> format;
        } else if (tag == "element") {
            PlyElement e;
            ss >> e.name >> e.count;
            elements.push_back(e);
        } else if (tag == "property") {
            if (elements.empty()) throw ParseError(path.string() + ": property before element");
            PlyProperty p;
            std::string t;
            ss >> t;
            if (t == "list") {
                ss >> p.count_type >> p.type >> p.name;
            } else {
                p.type = t;
                ss >> p.name;
            }
            elements.back().props.push_back(p);
        } else if (tag == "end_header") {
            break;
        }
    }
    if (format != "ascii" && format != "binary_little_endian")
        throw ParseError(path.string() + ": unsupported PLY format '" + format + "'");
    const bool binary = format == "binary_little_endian";

    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (const auto& el : elements) {
        for (std::size_t i = 0; i < el.count; ++i) {
            std::istringstream ascii_line;
            if (!binary) {
                if (!std::getline(in, line)) throw ParseError(path.string() + ": truncated " + el.name + " data");
                ascii_line.str(line);
            }
            auto scalar = [&](const std::string& type) {
                if (binary) return read_binary_le(in, type);
                double v;
                if (!(ascii_line >> v)) throw ParseError(path.string() + ": malformed " + el.name + " record");
                return v;
            };
            Vec3 p = Vec3::Zero();
            std::vector<int> idx;
            for (const auto& prop : el.props) {
                if (prop.count_type.empty()) {
                    const double v = scalar(prop.type);
                    if (el.name == "vertex") {
                        if (prop.name == "x") p[0] = v;
                        if (prop.name == "y") p[1] = v;
                        if (prop.name == "z") p[2] = v;
                    }
                } else {
                    const auto count = static_cast<std::size_t>(scalar(prop.count_type));
                    for (std::size_t k = 0; k < count; ++k) {
                        const double v = scalar(prop.type);
                        if (el.name == "face" && (prop.name == "vertex_indices" || prop.name == "vertex_index"))
                            idx.push_back(static_cast<int>(v));
                    }
                }
            }
            if (el.name == "vertex") verts.push_back(p);
            if (el.name == "face") {
                if (idx.size() < 3) throw ParseError(path.string() + ": face with fewer than 3 vertices");
                for (std::size_t k = 1; k + 1 < idx.size(); ++k) faces.push_back({idx[0], idx[k], idx[k + 1]});
            }
        }
    }
    return TriMesh(std::move(verts), std::move(faces));
}

template <typename T>
void write_le(std::ostream& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(buf, sizeof(T));
}

} // namespace

TriMesh load_mesh(const std::filesystem::path& path, MeshFormat format) {
    return format == MeshFormat::Obj ? load_obj(path) : load_ply(path);
}

TriMesh load_mesh(const std::filesystem::path& path) {
    const auto ext = lower(path.extension().string());
    if (ext == ".obj") return load_obj(path);
    if (ext == ".ply") return load_ply(path);
    throw ParseError("unrecognised mesh extension '" + ext + "' (expected .obj or .ply)");
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << std::setprecision(17);
    for (const auto& p : mesh.vertices()) out << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
    for (const auto& f : mesh.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

void save_ply(const TriMesh& mesh, const std::filesystem::path& path, const PlyWriteOptions& opt) {
    std::ofstream out(path, std::ios::binary);
    out << "ply\nformat " << (opt.binary ? "binary_little_endian" : "ascii") << " 1.0\n";
    out << "element vertex " << mesh.vertex_count() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (opt.vertex_colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "element face " << mesh.face_count() << "\n";
    out << "property list uchar int vertex_indices\n";
    if (opt.face_colors) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    if (opt.face_labels) out << "property int label\n";
    out << "end_header\n";
    out << std::setprecision(17);
    for (std::size_t v = 0; v < mesh.vertex_count(); ++v) {
        const auto& p = mesh.vertices()[v];
        if (opt.binary) {
            for (int k = 0; k < 3; ++k) write_le(out, p[k]);
            if (opt.vertex_colors)
                for (auto c : (*opt.vertex_colors)[v]) write_le(out, c);
        } else {
            out << p[0] << ' ' << p[1] << ' ' << p[2];
            if (opt.vertex_colors)
                for (auto c : (*opt.vertex_colors)[v]) out << ' ' << static_cast<int>(c);
            out << '\n';
        }
    }
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        const auto& fc = mesh.faces()[f];
        if (opt.binary) {
            write_le(out, std::uint8_t{3});
            for (int v : fc) write_le(out, static_cast<std::int32_t>(v));
            if (opt.face_colors)
                for (auto c : (*opt.face_colors)[f]) write_le(out, c);
            if (opt.face_labels) write_le(out, static_cast<std::int32_t>((*opt.face_labels)[f]));
        } else {
            out << "3 " << fc[0] << ' ' << fc[1] << ' ' << fc[2];
            if (opt.face_colors)
                for (auto c : (*opt.face_colors)[f]) out << ' ' << static_cast<int>(c);
            if (opt.face_labels) out << ' ' << (*opt.face_labels)[f];
            out << '\n';
        }
    }
}

void save_polylines_obj(const std::vector<std::vector<Vec3>>& lines, const std::vector<bool>& closed,
                        const std::filesystem::path& path) {
    std::ofstream out(path);
    out << std::setprecision(17);
    std::size_t base = 1;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        for (const auto& p : lines[i]) out << "v " << p[0] << ' ' << p[1] << ' ' << p[2] << '\n';
        if (lines[i].size() >= 2) {
            out << 'l';
            for (std::size_t k = 0; k < lines[i].size(); ++k) out << ' ' << base + k;
            if (i < closed.size() && closed[i]) out << ' ' << base;
            out << '\n';
        }
        base += lines[i].size();
    }
}

Rgb rainbow(double value) {
    const double x = std::clamp(value, 0.0, 1.0) * 4.0;
    double r = 0, g = 0, b = 0;
    if (x < 1) {
        b = 1;
        g = x;
    } else if (x < 2) {
        g = 1;
        b = 2 - x;
    } else if (x < 3) {
        g = 1;
        r = x - 2;
    } else {
        r = 1;
        g = 4 - x;
    }
    auto q = [](double c) { return static_cast<std::uint8_t>(std::lround(c * 255.0)); };
    return {q(r), q(g), q(b)};
}

} // namespace spectube
