#include "spectube/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdint>
#include <string>

#include "spectube/error.hpp"
#include "spectube/log.hpp"
#include "spectube/parallel.hpp"

namespace spectube {

AnalysisOptions analysis_options_from_json(const nlohmann::json& j) {
    AnalysisOptions o;
    if (!j.is_object()) throw ConfigError("analysis options must be an object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "base_loop") o.base_loop = v.get<int>();
            else if (key == "base_vertex") o.base_vertex = v.get<int>();
            else if (key == "n_levels") o.n_levels = v.get<int>();
            else if (key == "n_curves") o.n_curves = v.get<int>();
            else if (key == "orientation") {
                const auto s = v.get<std::string>();
                if (s == "ccw") o.orientation = LoopOrientation::Ccw;
                else if (s == "cw") o.orientation = LoopOrientation::Cw;
                else throw ConfigError("orientation must be \"cw\" or \"ccw\"");
            } else if (key == "curvature_spacing") o.curvature_spacing = v.get<double>();
            else if (key == "min_curvature") o.min_curvature = v.get<double>();
            else if (key == "quorum") o.quorum = v.get<double>();
            else if (key == "dense_levels") o.dense_levels = v.get<int>();
            else if (key == "prominence") o.prominence = v.get<double>();
            else if (key == "collapse_threshold") o.collapse_threshold = v.get<double>();
            else throw ConfigError("unknown analysis key \"" + key + "\"");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("analysis key \"" + key + "\": " + e.what());
        }
    }
    if (o.base_loop < 0 || o.base_loop > 1) throw ConfigError("base_loop must be 0 or 1");
    if (o.base_vertex < -1) throw ConfigError("base_vertex must be -1 or a vertex index");
    if (o.n_levels < 2) throw ConfigError("n_levels must be at least 2");
    if (o.n_curves < 8) throw ConfigError("n_curves must be at least 8");
    if (!(o.quorum > 0 && o.quorum <= 1)) throw ConfigError("quorum must lie in (0, 1]");
    if (o.dense_levels < 8) throw ConfigError("dense_levels must be at least 8");
    if (o.min_curvature < 0) throw ConfigError("min_curvature must be non-negative");
    return o;
}

nlohmann::json to_json(const AnalysisOptions& o) {
    return {{"base_loop", o.base_loop},
            {"base_vertex", o.base_vertex},
            {"n_levels", o.n_levels},
            {"n_curves", o.n_curves},
            {"orientation", o.orientation == LoopOrientation::Cw ? "cw" : "ccw"},
            {"curvature_spacing", o.curvature_spacing},
            {"min_curvature", o.min_curvature},
            {"quorum", o.quorum},
            {"dense_levels", o.dense_levels},
            {"prominence", o.prominence},
            {"collapse_threshold", o.collapse_threshold}};
}

int nearest_loop_vertex(const TriMesh& mesh, int loop, int v) {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int u : mesh.boundary_loops()[static_cast<std::size_t>(loop)]) {
        const double d = (mesh.position(u) - mesh.position(v)).squaredNorm();
        if (d < bd) {
            bd = d;
            best = u;
        }
    }
    return best;
}

double lumen_normal_sign(const TriMesh& mesh, const std::vector<Vec3>& normals, const ScalarField& field,
                         const std::vector<LevelSet>& levels) {
    if (levels.empty()) return 1.0;
    std::vector<double> ts;
    std::vector<Vec3> cs;
    for (const auto& l : levels) {
        ts.push_back(l.t);
        cs.push_back(l.centroid());
    }
    double vote = 0.0;
    for (int v = 0; v < static_cast<int>(mesh.vertex_count()); ++v) {
        const double t = field.values[static_cast<std::size_t>(v)];
        auto it = std::lower_bound(ts.begin(), ts.end(), t);
        std::size_t i = static_cast<std::size_t>(it - ts.begin());
        if (i == ts.size()) --i;
        else if (i > 0 && t - ts[i - 1] < ts[i] - t) --i;
        const Vec3 inward = cs[i] - mesh.position(v);
        vote += inward.dot(normals[static_cast<std::size_t>(v)]) > 0 ? 1.0 : -1.0;
    }
    return vote >= 0 ? 1.0 : -1.0;
}

TubeAnalysis analyze_tube(const TriMesh& mesh, const AnalysisOptions& options) {
    const auto topo = validate_cylinder_topology(mesh);
    if (!topo.is_cylinder) throw TopologyError("mesh is not a topological cylinder");
    TubeAnalysis A;
    A.fiedler = compute_fiedler(mesh);

    // The minimum end must be the designated gamma_0 loop.
    const auto& loop = mesh.boundary_loops()[static_cast<std::size_t>(options.base_loop)];
    double mean = 0.0;
    for (int v : loop) mean += A.fiedler.field.values[static_cast<std::size_t>(v)];
    mean /= static_cast<double>(loop.size());
    if (mean > 0.5) {
        A.fiedler = flipped(A.fiedler);
        A.flipped = true;
        notice("Fiedler field flipped so its minimum lies on loop " + std::to_string(options.base_loop));
    }
    int base = options.base_vertex;
    if (base < 0) base = nearest_loop_vertex(mesh, options.base_loop, A.fiedler.min_vertex);
    else if (base >= static_cast<int>(mesh.vertex_count()) || mesh.loop_of_vertex(base) != options.base_loop)
        throw VertexNotOnLoopError("base_vertex " + std::to_string(base) + " is not on loop " +
                                   std::to_string(options.base_loop));

    ParameterizationOptions po;
    po.n_curves = options.n_curves;
    po.orientation = options.orientation;
    A.param = parameterize_tube(mesh, A.fiedler.field, base, po);
    A.levels = uniform_level_sets(mesh, A.fiedler.field, options.n_levels);

    const auto normals = mesh.vertex_normals();
    A.normal_sign = lumen_normal_sign(mesh, normals, A.fiedler.field, A.levels);
    CurvatureOptions co;
    co.spacing = options.curvature_spacing;
    co.min_curvature = options.min_curvature;
    co.normal_sign = A.normal_sign;
    A.profiles.resize(A.param.curves.size());
    parallel_for(static_cast<int>(A.param.curves.size()), [&](int k) {
        A.profiles[static_cast<std::size_t>(k)] =
            normal_curvature_profile(mesh, normals, A.param.curves[static_cast<std::size_t>(k)], co);
    });

    BundleOptions bo;
    bo.quorum = options.quorum;
    bo.n_levels = options.n_levels;
    bo.dense_levels = options.dense_levels;
    A.bundles = build_bundles(mesh, A.fiedler.field, A.profiles, A.levels, bo, &A.retained_levels);
    A.median_radius = median_encompassing_radius(A.levels);

    SegmentOptions so;
    so.prominence = options.prominence;
    std::vector<std::vector<FoldSegment>> per_bundle(A.bundles.size());
    for (auto& b : A.bundles) detect_collapsed(b, A.median_radius, options.collapse_threshold);
    parallel_for(static_cast<int>(A.bundles.size()), [&](int i) {
        const auto& b = A.bundles[static_cast<std::size_t>(i)];
        if (b.collapsed) return;
        try {
            const auto aligned = project_and_align(b);
            per_bundle[static_cast<std::size_t>(i)] = segment_folds(mesh, b, aligned, A.param, A.profiles, so);
        } catch (const NoExtremaError& e) {
            notice(e.what());
        }
    });

    // Faces may only belong to one fold; earlier bundles win.
    std::vector<char> taken(mesh.face_count(), 0);
    for (std::size_t i = 0; i < per_bundle.size(); ++i)
        for (auto& f : per_bundle[i]) {
            std::vector<int> kept;
            for (int x : f.faces)
                if (!taken[static_cast<std::size_t>(x)]) kept.push_back(x);
            if (kept.empty()) continue;
            for (int x : kept) taken[static_cast<std::size_t>(x)] = 1;
            f.faces = std::move(kept);
            A.folds.push_back(std::move(f));
            A.fold_bundle.push_back(static_cast<int>(i));
        }
    std::vector<std::size_t> order(A.folds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ta = 0.5 * (A.folds[a].t_min + A.folds[a].t_max), tb = 0.5 * (A.folds[b].t_min + A.folds[b].t_max);
        if (A.fold_bundle[a] != A.fold_bundle[b]) return ta < tb;
        return A.folds[a].theta_center < A.folds[b].theta_center;
    });
    std::vector<FoldSegment> folds;
    std::vector<int> fb;
    for (std::size_t i : order) {
        folds.push_back(std::move(A.folds[i]));
        folds.back().label = static_cast<int>(folds.size()) - 1;
        fb.push_back(A.fold_bundle[i]);
    }
    A.folds = std::move(folds);
    A.fold_bundle = std::move(fb);
    return A;
}

int loop_handedness(const TriMesh& mesh, const std::vector<int>& ordered_loop) {
    const int loop = mesh.loop_of_vertex(ordered_loop.front());
    const auto& loops = mesh.boundary_loops();
    auto centroid = [&](const std::vector<int>& vs) {
        Vec3 c = Vec3::Zero();
        for (int v : vs) c += mesh.position(v);
        return Vec3(c / static_cast<double>(vs.size()));
    };
    const Vec3 here = centroid(ordered_loop);
    const Vec3 there = centroid(loops[static_cast<std::size_t>(1 - loop)]);
    Vec3 area = Vec3::Zero();
    for (std::size_t i = 0; i < ordered_loop.size(); ++i)
        area += (mesh.position(ordered_loop[i]) - here).cross(mesh.position(ordered_loop[(i + 1) % ordered_loop.size()]) - here);
    return area.dot(there - here) > 0 ? 1 : -1;
}

PairRegistration register_tubes(const TriMesh& src, const TriMesh& dst, const AnalysisOptions& analysis,
                                const RegisterOptions& options) {
    auto setup = [&](const TriMesh& mesh, int base) {
        AnalysisOptions o = analysis;
        if (base >= 0) {
            if (base >= static_cast<int>(mesh.vertex_count()) || mesh.loop_of_vertex(base) < 0)
                throw VertexNotOnLoopError("base vertex " + std::to_string(base) + " is not on a boundary loop");
            o.base_vertex = base;
            o.base_loop = mesh.loop_of_vertex(base);
        }
        return o;
    };
    const AnalysisOptions so = setup(src, options.src_base);
    AnalysisOptions dopt = setup(dst, options.dst_base);
    const LoopOrientation other =
        analysis.orientation == LoopOrientation::Cw ? LoopOrientation::Ccw : LoopOrientation::Cw;

    PairRegistration R;
    R.src = analyze_tube(src, so);
    bool flip = options.orientation_flip == FlipMode::On;
    if (flip) dopt.orientation = other;
    R.dst = analyze_tube(dst, dopt);
    R.pairing = match_boundaries(src, R.src.fiedler, dst, R.dst.fiedler, R.src.param.base_vertex,
                                 R.dst.param.base_vertex, flip, analysis.orientation);
    if (options.orientation_flip == FlipMode::Auto &&
        loop_handedness(src, R.pairing.src.vertices) != loop_handedness(dst, R.pairing.dst.vertices)) {
        notice("orientation auto-flip: target theta direction reversed to match the source");
        dopt.orientation = other;
        R.dst = analyze_tube(dst, dopt);
        R.pairing = match_boundaries(src, R.src.fiedler, dst, R.dst.fiedler, R.src.param.base_vertex,
                                     R.dst.param.base_vertex, true, analysis.orientation);
        R.auto_flipped = true;
    }
    R.global = global_register(R.src.param, R.dst.param, R.pairing, options.grid);
    R.chi_src = build_characteristic(src, R.src.folds, R.src.param, options.grid, options.sigma_theta, options.sigma_t);
    R.chi_dst = build_characteristic(dst, R.dst.folds, R.dst.param, options.grid, options.sigma_theta, options.sigma_t);
    R.refined = refine_registration(R.global, R.chi_src, R.chi_dst, options.refine);
    return R;
}

LandmarkErrors landmark_errors(const PairRegistration& run, const TriMesh& src, const TriMesh& dst,
                               const std::vector<LandmarkPair>& landmarks, double control_fraction,
                               std::uint64_t seed) {
    const ParamLocator locator(dst, run.dst.param);
    auto via = [&](const RegistrationMap& m) {
        return [&, mp = &m](const Vec3& p) { return map_point(*mp, src, run.src.param, locator, dst, p); };
    };
    LandmarkErrors e;
    e.global = distance_error(via(run.global), landmarks, control_fraction, seed);
    e.refined = distance_error(via(run.refined.map), landmarks, control_fraction, seed);
    return e;
}

} // namespace spectube
