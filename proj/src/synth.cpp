#include "spectube/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "spectube/error.hpp"

namespace spectube {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_pi(double a) {
    a = std::fmod(a + kPi, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a - kPi;
}

double raised_cosine(double x) { return std::abs(x) < 1.0 ? 0.5 * (1.0 + std::cos(kPi * x)) : 0.0; }

// Flat top with raised-cosine shoulders over the outer `taper` fraction.
double tukey(double u, double taper = 0.15) {
    const double a = std::abs(u);
    if (a >= 1.0) return 0.0;
    if (a <= 1.0 - taper) return 1.0;
    return 0.5 * (1.0 + std::cos(kPi * (a - (1.0 - taper)) / taper));
}

struct Arc {
    double s0, s1, curvature;
};

/// Planar spine in the x-z plane starting at the origin heading +z.
class Spine {
public:
    Spine(const SpineSpec& spec, double length) : length_(length) {
        const double A = spec.bend_angle_deg * kPi / 180.0;
        const double ell = spec.bend_arc_length;
        if (spec.kind == SpineKind::Bend && A != 0.0) {
            arcs_.push_back({0.5 * length - 0.5 * ell, 0.5 * length + 0.5 * ell, A / ell});
        } else if (spec.kind == SpineKind::SBend && A != 0.0) {
            arcs_.push_back({length / 3.0 - 0.5 * ell, length / 3.0 + 0.5 * ell, A / ell});
            arcs_.push_back({2.0 * length / 3.0 - 0.5 * ell, 2.0 * length / 3.0 + 0.5 * ell, -A / ell});
        }
    }

    /// Centre point and heading angle at arc length s.
    std::pair<Vec3, double> eval(double s) const {
        Vec3 c = Vec3::Zero();
        double phi = 0.0, at = 0.0;
        auto straight = [&](double to) {
            c += (to - at) * Vec3(std::sin(phi), 0.0, std::cos(phi));
            at = to;
        };
        for (const auto& a : arcs_) {
            if (s <= a.s0) break;
            straight(a.s0);
            const double to = std::min(s, a.s1);
            const double k = a.curvature;
            const double phi1 = phi + k * (to - at);
            c += Vec3((std::cos(phi) - std::cos(phi1)) / k, 0.0, (std::sin(phi1) - std::sin(phi)) / k);
            phi = phi1;
            at = to;
        }
        if (s > at) straight(s);
        return {c, phi};
    }

    /// Point at (s, theta) on a tube of radius r around the spine.
    Vec3 point(double s, double theta, double r) const {
        const auto [c, phi] = eval(s);
        const Vec3 n(std::cos(phi), 0.0, -std::sin(phi));
        const Vec3 b(0.0, 1.0, 0.0);
        return c + r * (std::cos(theta) * n + std::sin(theta) * b);
    }

    double length() const { return length_; }

private:
    double length_;
    std::vector<Arc> arcs_;
};

struct FoldShape {
    double s_center, theta_center, half_span, width, depth;

    /// Inward displacement at (s, theta).
    double displacement(double s, double theta) const {
        const double u = wrap_pi(theta - theta_center) / half_span;
        if (std::abs(u) >= 1.0) return 0.0;
        const double v = (s - s_center) / width;
        return depth * tukey(u) * raised_cosine(v);
    }
};

std::vector<FoldShape> fold_shapes(const TubeSpec& spec) {
    std::vector<FoldShape> out;
    for (const auto& ring : spec.rings) {
        const double pitch = kTwoPi / ring.n_folds;
        for (int j = 0; j < ring.n_folds; ++j) {
            const double d = ring.depths.empty() ? ring.fold_depth : ring.depths[static_cast<std::size_t>(j)];
            out.push_back({ring.s_center, ring.theta_offset + j * pitch, 0.5 * (pitch - ring.theta_gap),
                           ring.fold_width, d});
        }
    }
    return out;
}

double pinch_factor(const TubeSpec& spec, double s) {
    if (!spec.pinch) return 1.0;
    return 1.0 - (1.0 - spec.pinch->factor) * raised_cosine((s - spec.pinch->s_center) / spec.pinch->half_width);
}

double radius_at(const TubeSpec& spec, const std::vector<FoldShape>& folds, double s, double theta) {
    double r = spec.radius * pinch_factor(spec, s);
    for (const auto& f : folds) r -= f.displacement(s, theta);
    return r;
}

// Quad grid with inward-facing winding. Rings are periodic in j.
std::vector<Face> tube_faces(int rings, int nc) {
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(2 * (rings - 1) * nc));
    for (int i = 0; i + 1 < rings; ++i) {
        for (int j = 0; j < nc; ++j) {
            const int a = i * nc + j, b = i * nc + (j + 1) % nc;
            const int c = (i + 1) * nc + j, d = (i + 1) * nc + (j + 1) % nc;
            faces.push_back({a, c, b});
            faces.push_back({b, c, d});
        }
    }
    return faces;
}

double spec_number(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw SpecValidationError(std::string("'") + key + "' must be a number");
    return j.at(key).get<double>();
}

int spec_int(const nlohmann::json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw SpecValidationError(std::string("'") + key + "' must be an integer");
    return j.at(key).get<int>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw SpecValidationError(where + " must be a JSON object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw SpecValidationError("unknown key '" + k + "' in " + where);
}

const char* spine_name(SpineKind k) {
    switch (k) {
    case SpineKind::Straight: return "straight";
    case SpineKind::Bend: return "bend";
    case SpineKind::SBend: return "s_bend";
    }
    return "straight";
}

} // namespace

void validate(const TubeSpec& spec) {
    auto fail = [&](const std::string& msg) { throw SpecValidationError(spec.name + ": " + msg); };
    if (!(spec.length > 0)) fail("length must be positive");
    if (!(spec.radius > 0)) fail("radius must be positive");
    if (spec.n_axial < 16 || spec.n_circumferential < 16) fail("resolution must be at least 16 x 16");
    if (spec.spine.kind != SpineKind::Straight && spec.spine.bend_angle_deg != 0.0) {
        const double R = spec.spine.bend_arc_length / std::abs(spec.spine.bend_angle_deg * kPi / 180.0);
        if (!(spec.spine.bend_arc_length > 0)) fail("bend_arc_length must be positive");
        if (R <= spec.radius) fail("bend radius " + std::to_string(R) + " mm is not larger than the tube radius");
        const double span = spec.spine.kind == SpineKind::Bend ? spec.length : spec.length / 3.0;
        if (spec.spine.bend_arc_length >= span) fail("bend arcs do not fit on the spine");
    }
    for (std::size_t i = 0; i < spec.rings.size(); ++i) {
        const auto& r = spec.rings[i];
        const std::string tag = "ring " + std::to_string(i) + ": ";
        if (r.n_folds < 1) fail(tag + "n_folds must be >= 1");
        if (!(r.fold_width > 0)) fail(tag + "fold_width must be positive");
        if (r.s_center - r.fold_width <= 0 || r.s_center + r.fold_width >= spec.length)
            fail(tag + "folds must lie strictly inside the tube");
        if (r.theta_gap < 0 || r.theta_gap >= kTwoPi / r.n_folds) fail(tag + "theta_gap leaves no fold span");
        if (!r.depths.empty() && static_cast<int>(r.depths.size()) != r.n_folds)
            fail(tag + "depths must list one value per fold");
        std::vector<double> ds = r.depths.empty() ? std::vector<double>{r.fold_depth} : r.depths;
        const double local_r = spec.radius * pinch_factor(spec, r.s_center);
        for (double d : ds)
            if (!(d > 0) || d >= local_r) fail(tag + "fold depth must be in (0, radius)");
    }
    if (spec.pinch) {
        const auto& p = *spec.pinch;
        if (!(p.factor > 0 && p.factor <= 1)) fail("pinch factor must be in (0, 1]");
        if (!(p.half_width > 0)) fail("pinch half_width must be positive");
        if (p.s_center - p.half_width <= 0 || p.s_center + p.half_width >= spec.length)
            fail("pinch must lie strictly inside the tube");
    }
}

TubeSpec tube_spec_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"name", "length", "radius", "spine", "rings", "pinch", "n_axial", "n_circumferential", "seed"},
                   "tube spec");
    TubeSpec s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    s.length = spec_number(j, "length", s.length);
    s.radius = spec_number(j, "radius", s.radius);
    s.n_axial = spec_int(j, "n_axial", s.n_axial);
    s.n_circumferential = spec_int(j, "n_circumferential", s.n_circumferential);
    s.seed = spec_int(j, "seed", s.seed);
    if (j.contains("spine")) {
        const auto& sp = j.at("spine");
        reject_unknown(sp, {"kind", "bend_angle_deg", "bend_arc_length"}, "spine");
        const std::string kind = sp.value("kind", std::string("straight"));
        if (kind == "straight") s.spine.kind = SpineKind::Straight;
        else if (kind == "bend") s.spine.kind = SpineKind::Bend;
        else if (kind == "s_bend") s.spine.kind = SpineKind::SBend;
        else throw SpecValidationError("unknown spine kind '" + kind + "'");
        s.spine.bend_angle_deg = spec_number(sp, "bend_angle_deg", 0.0);
        s.spine.bend_arc_length = spec_number(sp, "bend_arc_length", s.spine.bend_arc_length);
    }
    if (j.contains("rings")) {
        for (const auto& rj : j.at("rings")) {
            reject_unknown(rj, {"s_center", "n_folds", "fold_depth", "fold_width", "theta_offset", "theta_gap", "depths"},
                           "ring");
            RingSpec r;
            r.s_center = spec_number(rj, "s_center", r.s_center);
            r.n_folds = spec_int(rj, "n_folds", r.n_folds);
            r.fold_depth = spec_number(rj, "fold_depth", r.fold_depth);
            r.fold_width = spec_number(rj, "fold_width", r.fold_width);
            r.theta_offset = spec_number(rj, "theta_offset", r.theta_offset);
            r.theta_gap = spec_number(rj, "theta_gap", r.theta_gap);
            if (rj.contains("depths")) r.depths = rj.at("depths").get<std::vector<double>>();
            s.rings.push_back(r);
        }
    }
    if (j.contains("pinch") && !j.at("pinch").is_null()) {
        const auto& pj = j.at("pinch");
        reject_unknown(pj, {"s_center", "factor", "half_width"}, "pinch");
        PinchSpec p;
        p.s_center = spec_number(pj, "s_center", p.s_center);
        p.factor = spec_number(pj, "factor", p.factor);
        p.half_width = spec_number(pj, "half_width", p.half_width);
        s.pinch = p;
    }
    validate(s);
    return s;
}

nlohmann::json to_json(const TubeSpec& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["length"] = s.length;
    j["radius"] = s.radius;
    j["spine"] = {{"kind", spine_name(s.spine.kind)},
                  {"bend_angle_deg", s.spine.bend_angle_deg},
                  {"bend_arc_length", s.spine.bend_arc_length}};
    j["rings"] = nlohmann::json::array();
    for (const auto& r : s.rings) {
        nlohmann::json rj = {{"s_center", r.s_center},     {"n_folds", r.n_folds},
                             {"fold_depth", r.fold_depth}, {"fold_width", r.fold_width},
                             {"theta_offset", r.theta_offset}, {"theta_gap", r.theta_gap}};
        if (!r.depths.empty()) rj["depths"] = r.depths;
        j["rings"].push_back(rj);
    }
    if (s.pinch) j["pinch"] = {{"s_center", s.pinch->s_center}, {"factor", s.pinch->factor}, {"half_width", s.pinch->half_width}};
    else j["pinch"] = nullptr;
    j["n_axial"] = s.n_axial;
    j["n_circumferential"] = s.n_circumferential;
    j["seed"] = s.seed;
    return j;
}

nlohmann::json to_json(const GroundTruth& gt) {
    nlohmann::json j;
    j["folds"] = nlohmann::json::array();
    for (const auto& f : gt.folds)
        j["folds"].push_back({{"label", f.label},
                              {"ring", f.ring},
                              {"index", f.index},
                              {"s_center", f.s_center},
                              {"theta_center", f.theta_center},
                              {"depth", f.depth},
                              {"center", {f.center[0], f.center[1], f.center[2]}},
                              {"faces", f.faces}});
    j["landmarks"] = nlohmann::json::array();
    for (const auto& l : gt.landmarks)
        j["landmarks"].push_back({{"src", {l.src[0], l.src[1], l.src[2]}}, {"dst", {l.dst[0], l.dst[1], l.dst[2]}}});
    j["spine_correspondence"] = nlohmann::json::array();
    for (const auto& [a, b] : gt.spine_correspondence)
        j["spine_correspondence"].push_back({{a[0], a[1], a[2]}, {b[0], b[1], b[2]}});
    j["has_collapse"] = gt.has_collapse;
    return j;
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    auto vec3 = [](const nlohmann::json& a) { return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()); };
    GroundTruth gt;
    try {
        for (const auto& f : j.at("folds")) {
            GroundTruthFold g;
            g.label = f.at("label").get<int>();
            g.ring = f.value("ring", 0);
            g.index = f.value("index", 0);
            g.s_center = f.value("s_center", 0.0);
            g.theta_center = f.value("theta_center", 0.0);
            g.depth = f.value("depth", 0.0);
            if (f.contains("center")) g.center = vec3(f["center"]);
            g.faces = f.at("faces").get<std::vector<int>>();
            gt.folds.push_back(std::move(g));
        }
        if (j.contains("landmarks"))
            for (const auto& l : j["landmarks"]) gt.landmarks.push_back({vec3(l.at("src")), vec3(l.at("dst"))});
        if (j.contains("spine_correspondence"))
            for (const auto& c : j["spine_correspondence"]) gt.spine_correspondence.emplace_back(vec3(c.at(0)), vec3(c.at(1)));
        gt.has_collapse = j.value("has_collapse", false);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("ground truth: ") + e.what());
    }
    return gt;
}

namespace {

// Shared body of generate_tube / deform_pair: `place` maps material (s, theta, r) to space.
template <typename Place>
SyntheticTube build_tube(const TubeSpec& spec, Place place) {
    validate(spec);
    const auto folds = fold_shapes(spec);
    const int rings = spec.n_axial + 1, nc = spec.n_circumferential;
    std::vector<Vec3> verts;
    GroundTruth gt;
    verts.reserve(static_cast<std::size_t>(rings * nc));
    for (int i = 0; i < rings; ++i) {
        const double s = spec.length * i / spec.n_axial;
        for (int j = 0; j < nc; ++j) {
            const double th = kTwoPi * j / nc;
            verts.push_back(place(s, th, radius_at(spec, folds, s, th)));
            gt.vertex_s.push_back(s);
            gt.vertex_theta.push_back(th);
        }
    }
    TriMesh mesh(std::move(verts), tube_faces(rings, nc));

    int label = 0, ring_index = 0, k = 0;
    for (const auto& ring : spec.rings) {
        for (int j = 0; j < ring.n_folds; ++j, ++k) {
            const auto& f = folds[static_cast<std::size_t>(k)];
            GroundTruthFold g;
            g.label = label++;
            g.ring = ring_index;
            g.index = j;
            g.s_center = f.s_center;
            g.theta_center = std::fmod(std::fmod(f.theta_center, kTwoPi) + kTwoPi, kTwoPi);
            g.depth = f.depth;
            g.center = place(f.s_center, f.theta_center, radius_at(spec, folds, f.s_center, f.theta_center));
            gt.folds.push_back(g);
        }
        ++ring_index;
    }
    for (int fi = 0; fi < static_cast<int>(mesh.face_count()); ++fi) {
        const auto& fc = mesh.face(fi);
        const double th0 = gt.vertex_theta[static_cast<std::size_t>(fc[0])];
        double s = 0, th = 0;
        for (int v : fc) {
            s += gt.vertex_s[static_cast<std::size_t>(v)];
            th += th0 + wrap_pi(gt.vertex_theta[static_cast<std::size_t>(v)] - th0);
        }
        s /= 3.0;
        th /= 3.0;
        for (std::size_t q = 0; q < folds.size(); ++q)
            if (folds[q].displacement(s, th) > 0.5 * folds[q].depth) gt.folds[q].faces.push_back(fi);
    }
    gt.has_collapse = spec.pinch && spec.pinch->factor < 0.1;
    return {std::move(mesh), std::move(gt)};
}

} // namespace

SyntheticTube generate_tube(const TubeSpec& spec) {
    validate(spec);
    const Spine spine(spec.spine, spec.length);
    auto tube = build_tube(spec, [&](double s, double th, double r) { return spine.point(s, th, r); });
    for (int i = 0; i <= 16; ++i) {
        const double s = spec.length * i / 16.0;
        const Vec3 c = spine.eval(s).first;
        tube.truth.spine_correspondence.emplace_back(c, c);
    }
    return tube;
}

DeformationSpec deformation_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"axial_stretch", "stretch_wobble", "bend_change_deg", "twist_deg", "noise_mm", "rotation_axis",
                       "rotation_deg", "translation", "seed"},
                   "deformation");
    DeformationSpec d;
    d.axial_stretch = spec_number(j, "axial_stretch", d.axial_stretch);
    d.stretch_wobble = spec_number(j, "stretch_wobble", d.stretch_wobble);
    d.bend_change_deg = spec_number(j, "bend_change_deg", d.bend_change_deg);
    d.twist_deg = spec_number(j, "twist_deg", d.twist_deg);
    d.noise_mm = spec_number(j, "noise_mm", d.noise_mm);
    d.rotation_deg = spec_number(j, "rotation_deg", d.rotation_deg);
    d.seed = spec_int(j, "seed", d.seed);
    if (j.contains("rotation_axis")) {
        const auto a = j.at("rotation_axis").get<std::vector<double>>();
        if (a.size() != 3) throw SpecValidationError("rotation_axis needs 3 components");
        d.rotation_axis = Vec3(a[0], a[1], a[2]);
    }
    if (j.contains("translation")) {
        const auto a = j.at("translation").get<std::vector<double>>();
        if (a.size() != 3) throw SpecValidationError("translation needs 3 components");
        d.translation = Vec3(a[0], a[1], a[2]);
    }
    return d;
}

nlohmann::json to_json(const DeformationSpec& d) {
    return {{"axial_stretch", d.axial_stretch},
            {"stretch_wobble", d.stretch_wobble},
            {"bend_change_deg", d.bend_change_deg},
            {"twist_deg", d.twist_deg},
            {"noise_mm", d.noise_mm},
            {"rotation_axis", {d.rotation_axis[0], d.rotation_axis[1], d.rotation_axis[2]}},
            {"rotation_deg", d.rotation_deg},
            {"translation", {d.translation[0], d.translation[1], d.translation[2]}},
            {"seed", d.seed}};
}

SyntheticPair deform_pair(const TubeSpec& spec, const DeformationSpec& def) {
    validate(spec);
    if (def.axial_stretch <= -0.5) throw SpecValidationError("axial_stretch must be > -0.5");
    if (std::abs(def.stretch_wobble) * kTwoPi >= 0.9)
        throw SpecValidationError("stretch_wobble too large for a monotone stretch");
    if (def.noise_mm < 0) throw SpecValidationError("noise_mm must be non-negative");

    const double L = spec.length;
    const double scale = 1.0 + def.axial_stretch;
    auto sigma = [&](double s) { return scale * (s + def.stretch_wobble * L * std::sin(kTwoPi * s / L)); };
    auto twist = [&](double s) { return def.twist_deg * kPi / 180.0 * std::sin(kPi * s / L); };

    SpineSpec dst_spine = spec.spine;
    dst_spine.bend_arc_length *= scale;
    if (def.bend_change_deg != 0.0) {
        if (dst_spine.kind == SpineKind::Straight) dst_spine.kind = SpineKind::Bend;
        dst_spine.bend_angle_deg += def.bend_change_deg;
    }
    if (dst_spine.bend_angle_deg != 0.0) {
        const double R = dst_spine.bend_arc_length / std::abs(dst_spine.bend_angle_deg * kPi / 180.0);
        if (R <= spec.radius)
            throw SelfIntersectionError("deformed bend radius " + std::to_string(R) + " mm is below the tube radius");
    }
    const Spine src_spine(spec.spine, L);
    const Spine dspine(dst_spine, scale * L);
    const Eigen::Affine3d rigid = Eigen::Translation3d(def.translation) *
                                  Eigen::AngleAxisd(def.rotation_deg * kPi / 180.0, def.rotation_axis.normalized());

    auto src_place = [&](double s, double th, double r) { return src_spine.point(s, th, r); };
    auto dst_place = [&](double s, double th, double r) { return Vec3(rigid * dspine.point(sigma(s), th + twist(s), r)); };

    SyntheticTube a = build_tube(spec, src_place);
    SyntheticTube b = build_tube(spec, dst_place);

    if (def.noise_mm > 0) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(def.seed));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        std::vector<Vec3> verts = b.mesh.vertices();
        for (auto& p : verts) {
            Vec3 dir(gauss(rng), gauss(rng), gauss(rng));
            dir.normalize();
            p += def.noise_mm * uni(rng) * dir;
        }
        b.mesh = TriMesh(std::move(verts), b.mesh.faces());
    }

    SyntheticPair out{std::move(a.mesh), std::move(b.mesh), std::move(a.truth), std::move(b.truth)};
    for (std::size_t i = 0; i < out.src_truth.folds.size(); ++i)
        out.src_truth.landmarks.push_back({out.src_truth.folds[i].center, out.dst_truth.folds[i].center});
    out.dst_truth.landmarks = out.src_truth.landmarks;
    for (int i = 0; i <= 16; ++i) {
        const double s = L * i / 16.0;
        out.src_truth.spine_correspondence.emplace_back(src_spine.eval(s).first,
                                                        Vec3(rigid * dspine.eval(sigma(s)).first));
    }
    out.dst_truth.spine_correspondence = out.src_truth.spine_correspondence;
    return out;
}

std::vector<TubeSpec> corpus_specs() {
    auto ring = [](double s, int n, double offset, double gap) {
        RingSpec r;
        r.s_center = s;
        r.n_folds = n;
        r.theta_offset = offset;
        r.fold_width = 12.0;
        r.theta_gap = gap;
        return r;
    };
    std::vector<TubeSpec> out;

    TubeSpec sparse;
    sparse.name = "straight_sparse";
    sparse.rings = {ring(55, 3, 0.0, 0.45), ring(110, 3, kPi / 3, 0.45), ring(165, 3, 0.0, 0.45)};
    out.push_back(sparse);

    TubeSpec dense;
    dense.name = "straight_dense";
    for (int k = 0; k < 5; ++k) dense.rings.push_back(ring(40 + 35 * k, 3, k % 2 ? kPi / 3 : 0.0, 0.45));
    out.push_back(dense);

    // Fold centres at 0, 2pi/3, 4pi/3 (a fold on the inner side of the bend), gaps at pi/3, pi, 5pi/3.
    TubeSpec bent;
    bent.name = "bent";
    bent.spine = {SpineKind::Bend, 90.0, 80.0};
    for (int k = 0; k < 5; ++k) bent.rings.push_back(ring(40 + 35 * k, 3, 0.0, 0.5));
    out.push_back(bent);

    TubeSpec sbend;
    sbend.name = "s_bend";
    sbend.spine = {SpineKind::SBend, 45.0, 50.0};
    for (int k = 0; k < 4; ++k) sbend.rings.push_back(ring(45 + 43 * k, 3, k % 2 ? kPi / 3 : 0.0, 0.45));
    out.push_back(sbend);

    TubeSpec pinched;
    pinched.name = "pinched";
    pinched.rings = {ring(40, 3, 0.0, 0.45), ring(75, 3, kPi / 3, 0.45), ring(145, 3, 0.0, 0.45),
                     ring(180, 3, kPi / 3, 0.45)};
    pinched.pinch = PinchSpec{110.0, 0.05, 10.0};
    out.push_back(pinched);

    // Two folds per ring with every gap aligned at theta = 0 and theta = pi.
    TubeSpec gap;
    gap.name = "fold_gap";
    for (int k = 0; k < 5; ++k) gap.rings.push_back(ring(40 + 35 * k, 2, kPi / 2, 0.6));
    out.push_back(gap);
    return out;
}

TubeSpec corpus_spec(const std::string& name) {
    for (auto& s : corpus_specs())
        if (s.name == name) return s;
    throw SpecValidationError("no corpus tube named '" + name + "'");
}

std::vector<CorpusPairSpec> corpus_pairs() {
    std::vector<CorpusPairSpec> out;
    DeformationSpec s1;
    s1.axial_stretch = 0.20;
    s1.stretch_wobble = 0.04;
    s1.bend_change_deg = 30.0;
    s1.twist_deg = 15.0;
    s1.noise_mm = 0.2;
    s1.seed = 42;
    out.push_back({"S1", "straight_dense", s1});

    DeformationSpec s2;
    s2.axial_stretch = 0.10;
    s2.stretch_wobble = -0.04;
    s2.bend_change_deg = -20.0;
    s2.twist_deg = 12.0;
    s2.noise_mm = 0.1;
    s2.seed = 43;
    out.push_back({"S2", "bent", s2});

    DeformationSpec s3;
    s3.axial_stretch = 0.15;
    s3.stretch_wobble = 0.05;
    s3.twist_deg = -15.0;
    s3.noise_mm = 0.1;
    s3.rotation_deg = 25.0;
    s3.rotation_axis = Vec3(0.3, 1.0, 0.2);
    s3.translation = Vec3(5.0, -3.0, 12.0);
    s3.seed = 44;
    out.push_back({"S3", "straight_sparse", s3});
    return out;
}

TubeSpec pinch_control_spec(double factor) {
    TubeSpec s = corpus_spec("pinched");
    s.name = "pinch_control";
    s.pinch->factor = factor;
    // Shift the waist between two vertex rings so no level set samples the exact minimum.
    s.pinch->s_center += 0.5 * s.length / s.n_axial;
    return s;
}

TriMesh make_cylinder(double height, double radius, int n_axial, int n_circumferential) {
    std::vector<Vec3> verts;
    for (int i = 0; i <= n_axial; ++i)
        for (int j = 0; j < n_circumferential; ++j) {
            const double th = kTwoPi * j / n_circumferential;
            verts.emplace_back(radius * std::cos(th), radius * std::sin(th), height * i / n_axial);
        }
    return TriMesh(std::move(verts), tube_faces(n_axial + 1, n_circumferential));
}

TriMesh make_capped_cylinder(double height, double radius, int n_axial, int n_circumferential) {
    const TriMesh open = make_cylinder(height, radius, n_axial, n_circumferential);
    std::vector<Vec3> verts = open.vertices();
    std::vector<Face> faces = open.faces();
    const int nc = n_circumferential;
    const int bottom = static_cast<int>(verts.size()), top = bottom + 1;
    const int last = n_axial * nc;
    verts.emplace_back(0.0, 0.0, -0.5 * radius);
    verts.emplace_back(0.0, 0.0, height + 0.5 * radius);
    for (int j = 0; j < nc; ++j) {
        faces.push_back({j, (j + 1) % nc, bottom});
        faces.push_back({last + (j + 1) % nc, last + j, top});
    }
    return TriMesh(std::move(verts), std::move(faces));
}

TriMesh make_torus(double major, double minor, int n_major, int n_minor) {
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (int i = 0; i < n_major; ++i) {
        const double u = kTwoPi * i / n_major;
        for (int j = 0; j < n_minor; ++j) {
            const double v = kTwoPi * j / n_minor;
            const double r = major + minor * std::cos(v);
            verts.emplace_back(r * std::cos(u), r * std::sin(u), minor * std::sin(v));
        }
    }
    for (int i = 0; i < n_major; ++i)
        for (int j = 0; j < n_minor; ++j) {
            const int a = i * n_minor + j, b = i * n_minor + (j + 1) % n_minor;
            const int c = ((i + 1) % n_major) * n_minor + j, d = ((i + 1) % n_major) * n_minor + (j + 1) % n_minor;
            faces.push_back({a, c, b});
            faces.push_back({b, c, d});
        }
    return TriMesh(std::move(verts), std::move(faces));
}

TriMesh make_icosahedron() {
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, p, 0}, {1, p, 0}, {-1, -p, 0}, {1, -p, 0}, {0, -1, p}, {0, 1, p},
                           {0, -1, -p}, {0, 1, -p}, {p, 0, -1}, {p, 0, 1}, {-p, 0, -1}, {-p, 0, 1}};
    std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                           {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                           {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    return TriMesh(std::move(v), std::move(f));
}

TriMesh make_two_cylinders(double height, double radius, int n_axial, int n_circumferential) {
    const TriMesh a = make_cylinder(height, radius, n_axial, n_circumferential);
    std::vector<Vec3> verts = a.vertices();
    std::vector<Face> faces = a.faces();
    const int off = static_cast<int>(verts.size());
    for (const auto& p : a.vertices()) verts.push_back(p + Vec3(4.0 * radius, 0.0, 0.0));
    for (const auto& f : a.faces()) faces.push_back({f[0] + off, f[1] + off, f[2] + off});
    return TriMesh(std::move(verts), std::move(faces));
}

} // namespace spectube
