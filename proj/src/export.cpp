#include "spectube/export.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "spectube/error.hpp"

namespace spectube {

namespace {

static_assert(std::endian::native == std::endian::little, "binary writers assume a little-endian host");

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    return out;
}

nlohmann::json vec3_json(const Vec3& p) { return {p[0], p[1], p[2]}; }

std::string hex_color(const Rgb& c) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
    return buf;
}

} // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void write_bytes(const std::filesystem::path& path, const std::vector<char>& bytes) {
    auto out = open_out(path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<char> float64_bytes(const std::vector<double>& values) {
    std::vector<char> out(values.size() * sizeof(double));
    if (!values.empty()) std::memcpy(out.data(), values.data(), out.size());
    return out;
}

nlohmann::json eigen_json(const FiedlerField& fiedler, const std::string& scaled_file, const std::string& raw_file) {
    const auto n = fiedler.field.size();
    return {{"eigenvalues", {0.0, fiedler.lambda1}},
            {"lambda1", fiedler.lambda1},
            {"residual", fiedler.residual},
            {"min_vertex", fiedler.min_vertex},
            {"max_vertex", fiedler.max_vertex},
            {"fields",
             {{{"name", "fiedler"}, {"file", scaled_file}, {"dtype", "<f8"}, {"count", n}},
              {{"name", "eigenvector_1"}, {"file", raw_file}, {"dtype", "<f8"}, {"count", fiedler.raw.size()}}}}};
}

nlohmann::json level_sets_json(const std::vector<LevelSet>& levels) {
    auto arr = nlohmann::json::array();
    for (const auto& l : levels) {
        auto samples = nlohmann::json::array();
        for (const auto& s : l.samples)
            samples.push_back({{"point", vec3_json(s.point)},
                               {"face", s.anchor.face},
                               {"bary", vec3_json(s.anchor.bary)}});
        arr.push_back({{"t", l.t}, {"closed", l.closed}, {"total_length", l.total_length}, {"samples", samples}});
    }
    return arr;
}

nlohmann::json centerline_json(const Centerline& line) {
    auto pts = nlohmann::json::array();
    for (const auto& p : line.points) pts.push_back(vec3_json(p));
    return {{"t", line.t}, {"points", pts}};
}

nlohmann::json folds_json(const std::vector<FoldSegment>& folds, const std::vector<int>& fold_bundle,
                          const std::vector<LevelSetBundle>& bundles) {
    nlohmann::json j;
    j["folds"] = nlohmann::json::array();
    for (std::size_t i = 0; i < folds.size(); ++i) {
        const auto& f = folds[i];
        auto contour = nlohmann::json::array();
        for (const auto& p : f.contour) contour.push_back(vec3_json(p));
        j["folds"].push_back({{"label", f.label},
                              {"bundle", i < fold_bundle.size() ? fold_bundle[i] : -1},
                              {"faces", f.faces},
                              {"area_mm2", f.area},
                              {"theta_range", {f.theta_min, f.theta_max}},
                              {"theta_center", f.theta_center},
                              {"t_range", {f.t_min, f.t_max}},
                              {"center", vec3_json(f.center)},
                              {"mean_curvature", f.mean_curvature},
                              {"contour", contour}});
    }
    j["bundles"] = nlohmann::json::array();
    for (const auto& b : bundles)
        j["bundles"].push_back({{"t_range", {b.t0, b.t2}},
                                {"t_min", b.t1},
                                {"votes", b.votes},
                                {"collapsed", b.collapsed},
                                {"min_encompassing_radius", b.min_encompassing_radius}});
    return j;
}

std::vector<int> fold_face_labels(std::size_t face_count, const std::vector<FoldSegment>& folds) {
    std::vector<int> labels(face_count, -1);
    for (const auto& f : folds)
        for (int x : f.faces) labels[static_cast<std::size_t>(x)] = f.label;
    return labels;
}

Rgb label_color(int label) {
    if (label < 0) return {200, 200, 200};
    // Golden-ratio hue walk keeps neighbouring labels apart.
    const double h = std::fmod(0.13 + 0.618033988749895 * label, 1.0);
    return rainbow(h);
}

std::string flat_svg(const FlatMesh& flat, const std::vector<double>& vertex_values, const std::vector<int>& face_labels,
                     double pixels_per_mm) {
    const double s = pixels_per_mm, w = flat.width * s, h = flat.height * s;
    std::string out;
    char buf[256];
    auto xy = [&](int v) {
        const auto& q = flat.uv[static_cast<std::size_t>(v)];
        return std::pair{q[0] * s, (flat.height - q[1]) * s};
    };
    auto polygon = [&](const Face& f, const char* cls, const Rgb& fill, int label) {
        const auto [x0, y0] = xy(f[0]);
        const auto [x1, y1] = xy(f[1]);
        const auto [x2, y2] = xy(f[2]);
        if (label >= 0)
            std::snprintf(buf, sizeof buf,
                          "<polygon class=\"%s\" data-label=\"%d\" points=\"%.6f,%.6f %.6f,%.6f %.6f,%.6f\" fill=\"%s\"/>\n",
                          cls, label, x0, y0, x1, y1, x2, y2, hex_color(fill).c_str());
        else
            std::snprintf(buf, sizeof buf, "<polygon class=\"%s\" points=\"%.6f,%.6f %.6f,%.6f %.6f,%.6f\" fill=\"%s\"/>\n",
                          cls, x0, y0, x1, y1, x2, y2, hex_color(fill).c_str());
        out += buf;
    };
    std::snprintf(buf, sizeof buf,
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.3f\" height=\"%.3f\" viewBox=\"0 0 %.6f %.6f\">\n", w,
                  h, w, h);
    out += buf;
    out += "<g stroke=\"none\">\n";
    for (const auto& f : flat.faces) {
        double m = 0.0;
        for (int v : f) m += vertex_values[static_cast<std::size_t>(flat.source_vertex[static_cast<std::size_t>(v)])];
        polygon(f, "face", rainbow(m / 3.0), -1);
    }
    for (std::size_t i = 0; i < flat.faces.size(); ++i)
        if (face_labels[i] >= 0) polygon(flat.faces[i], "fold", label_color(face_labels[i]), face_labels[i]);
    out += "</g>\n";
    for (double x : {0.0, w}) {
        std::snprintf(buf, sizeof buf,
                      "<line class=\"seam\" x1=\"%.6f\" y1=\"0\" x2=\"%.6f\" y2=\"%.6f\" stroke=\"black\" stroke-width=\"1\"/>\n",
                      x, x, h);
        out += buf;
    }
    out += "</svg>\n";
    return out;
}

void save_flat_obj(const FlatMesh& flat, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << std::setprecision(17);
    for (const auto& q : flat.uv) out << "v " << q[0] << ' ' << q[1] << " 0\n";
    for (const auto& f : flat.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
}

} // namespace spectube
