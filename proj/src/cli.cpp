#include "spectube/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "spectube/error.hpp"
#include "spectube/eval.hpp"
#include "spectube/export.hpp"
#include "spectube/flatten.hpp"
#include "spectube/log.hpp"
#include "spectube/mesh_io.hpp"
#include "spectube/pipeline.hpp"
#include "spectube/synth.hpp"

namespace spectube {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Context {
    json config;
    fs::path base_dir; ///< relative input paths resolve against the config file's directory
    fs::path out;
    std::optional<int> seed_flag;
    json details; ///< extra fields for the error JSON

    int seed() const {
        if (seed_flag) return *seed_flag;
        return config.contains("seed") ? config["seed"].get<int>() : 42;
    }
    fs::path input(const std::string& key) const {
        fs::path p = config.at(key).get<std::string>();
        return p.is_absolute() ? p : base_dir / p;
    }
};

void allow_keys(const json& config, std::initializer_list<const char*> extra) {
    std::set<std::string> allowed = {"out", "seed", "analysis"};
    for (const char* k : extra) allowed.insert(k);
    for (const auto& [key, _] : config.items())
        if (!allowed.count(key)) throw ConfigError("unknown config key \"" + key + "\"");
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config key \"") + key + "\": " + e.what());
    }
}

double positive(const json& j, const char* key, double fallback) {
    const double v = get_or(j, key, fallback);
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(key) + " must be positive");
    return v;
}

AnalysisOptions analysis_options(const Context& ctx) {
    return ctx.config.contains("analysis") ? analysis_options_from_json(ctx.config["analysis"]) : AnalysisOptions{};
}

struct Tube {
    std::string name;
    TriMesh mesh;
    std::optional<GroundTruth> truth;
};

// Exactly one of mesh / corpus / spec.
Tube load_tube(Context& ctx) {
    const auto& c = ctx.config;
    const int sources = static_cast<int>(c.contains("mesh")) + static_cast<int>(c.contains("corpus")) +
                        static_cast<int>(c.contains("spec"));
    if (sources != 1) throw ConfigError("exactly one of \"mesh\", \"corpus\" or \"spec\" is required");
    Tube t;
    if (c.contains("mesh")) {
        const auto path = ctx.input("mesh");
        t.name = path.stem().string();
        t.mesh = load_mesh(path);
        if (c.contains("truth")) {
            std::ifstream in(ctx.input("truth"));
            if (!in) throw ConfigError("cannot read truth file " + ctx.input("truth").string());
            t.truth = ground_truth_from_json(json::parse(in));
        }
        return t;
    }
    if (c.contains("truth")) throw ConfigError("\"truth\" only applies to \"mesh\" inputs");
    TubeSpec spec = c.contains("corpus") ? corpus_spec(get_or<std::string>(c, "corpus", "")) : tube_spec_from_json(c["spec"]);
    if (ctx.seed_flag || c.contains("seed")) spec.seed = ctx.seed();
    auto gen = generate_tube(spec);
    t.name = spec.name;
    t.mesh = std::move(gen.mesh);
    t.truth = std::move(gen.truth);
    return t;
}

void require_cylinder(Context& ctx, const TriMesh& mesh) {
    const auto r = validate_cylinder_topology(mesh);
    if (r.is_cylinder) return;
    ctx.details["topology"] = {{"vertices", r.vertices},       {"edges", r.edges},
                               {"faces", r.faces},             {"euler_characteristic", r.euler_characteristic},
                               {"components", r.components},   {"genus", r.genus},
                               {"boundary_count", r.boundary_count}};
    throw TopologyError("mesh is not a topological cylinder");
}

int fold_faces_on_cut(const TriMesh& mesh, const CutPath& cut, const std::vector<int>& face_labels) {
    std::vector<char> on(mesh.vertex_count(), 0);
    for (std::size_t i = 1; i + 1 < cut.vertices.size(); ++i) on[static_cast<std::size_t>(cut.vertices[i])] = 1;
    int n = 0;
    for (std::size_t f = 0; f < mesh.face_count(); ++f) {
        if (face_labels[f] < 0) continue;
        for (int v : mesh.faces()[f])
            if (on[static_cast<std::size_t>(v)]) {
                ++n;
                break;
            }
    }
    return n;
}

void cmd_fiedler(Context& ctx) {
    allow_keys(ctx.config, {"mesh", "truth", "corpus", "spec"});
    const auto opts = analysis_options(ctx);
    auto tube = load_tube(ctx);
    require_cylinder(ctx, tube.mesh);
    auto F = compute_fiedler(tube.mesh);
    // Orient the field so its minimum sits on the designated base loop, as the analysis does.
    const auto& loop = tube.mesh.boundary_loops()[static_cast<std::size_t>(opts.base_loop)];
    double mean = 0.0;
    for (int v : loop) mean += F.field.values[static_cast<std::size_t>(v)];
    if (mean / static_cast<double>(loop.size()) > 0.5) F = flipped(F);

    std::vector<Rgb> colors;
    colors.reserve(tube.mesh.vertex_count());
    for (double v : F.field.values) colors.push_back(rainbow(v));
    PlyWriteOptions po;
    po.vertex_colors = colors;
    save_ply(tube.mesh, ctx.out / "fiedler.ply", po);
    write_bytes(ctx.out / "fiedler.f64", float64_bytes(F.field.values));
    write_bytes(ctx.out / "eigenvector.f64", float64_bytes(F.raw.values));
    write_json(ctx.out / "eigen.json", eigen_json(F, "fiedler.f64", "eigenvector.f64"));

    const auto levels = uniform_level_sets(tube.mesh, F.field, opts.n_levels);
    std::vector<std::vector<Vec3>> lines;
    std::vector<bool> closed;
    for (const auto& l : levels) {
        lines.push_back(l.points());
        closed.push_back(l.closed);
    }
    save_polylines_obj(lines, closed, ctx.out / "level_sets.obj");
    write_json(ctx.out / "level_sets.json", level_sets_json(levels));
    Centerline cl;
    for (const auto& l : levels) {
        cl.points.push_back(l.centroid());
        cl.t.push_back(l.t);
    }
    save_polylines_obj({cl.points}, {false}, ctx.out / "centerline.obj");
    write_json(ctx.out / "centerline.json", centerline_json(cl));
}

void cmd_segment_folds(Context& ctx) {
    allow_keys(ctx.config, {"mesh", "truth", "corpus", "spec"});
    const auto opts = analysis_options(ctx);
    auto tube = load_tube(ctx);
    require_cylinder(ctx, tube.mesh);
    const auto A = analyze_tube(tube.mesh, opts);
    const auto labels = fold_face_labels(tube.mesh.face_count(), A.folds);
    std::vector<Rgb> colors;
    for (int l : labels) colors.push_back(label_color(l));
    PlyWriteOptions po;
    po.face_colors = colors;
    po.face_labels = labels;
    save_ply(tube.mesh, ctx.out / "folds.ply", po);
    write_json(ctx.out / "folds.json", folds_json(A.folds, A.fold_bundle, A.bundles));
    if (tube.truth && !tube.truth->folds.empty()) {
        std::vector<std::vector<int>> truth, detected;
        for (const auto& f : tube.truth->folds) truth.push_back(f.faces);
        for (const auto& f : A.folds) detected.push_back(f.faces);
        const auto score = score_detection(truth, detected, tube.mesh);
        write_json(ctx.out / "score.json", to_json(score));
    }
}

void cmd_flatten(Context& ctx) {
    allow_keys(ctx.config, {"mesh", "truth", "corpus", "spec", "pixels_per_mm"});
    const auto opts = analysis_options(ctx);
    const double ppm = positive(ctx.config, "pixels_per_mm", 4.0);
    auto tube = load_tube(ctx);
    require_cylinder(ctx, tube.mesh);
    const auto A = analyze_tube(tube.mesh, opts);
    const auto labels = fold_face_labels(tube.mesh.face_count(), A.folds);
    const CutPath cuts[2] = {extract_consistent_cut(tube.mesh, A.fiedler, A.param, A.folds, A.bundles),
                             geodesic_cut(tube.mesh, A.fiedler)};
    json report;
    for (const auto& cut : cuts) {
        const std::string kind = to_string(cut.kind);
        const auto flat = flatten(tube.mesh, cut, A.fiedler);
        write_text(ctx.out / (kind + ".svg"), flat_svg(flat, A.fiedler.field.values, labels, ppm));
        save_flat_obj(flat, ctx.out / (kind + ".obj"));
        report[kind] = {{"distortion", flat.distortion},
                        {"width_mm", flat.width},
                        {"height_mm", flat.height},
                        {"cut_length_mm", cut.length(tube.mesh)},
                        {"cut_vertices", cut.vertices},
                        {"fold_faces_on_cut", fold_faces_on_cut(tube.mesh, cut, labels)},
                        {"euler_characteristic", flat.euler_characteristic()}};
    }
    report["folds"] = A.folds.size();
    write_json(ctx.out / "distortion.json", report);
}

void cmd_register(Context& ctx) {
    allow_keys(ctx.config, {"pair", "src", "dst", "landmarks", "spec", "deformation", "src_base", "dst_base",
                            "orientation_flip", "grid", "sigma_theta", "sigma_t", "step", "max_iters", "tol", "beta",
                            "max_halvings", "control_fraction"});
    const auto& c = ctx.config;
    const auto opts = analysis_options(ctx);
    RegisterOptions ro;
    TriMesh src, dst;
    std::vector<LandmarkPair> landmarks;
    if (c.contains("pair") || c.contains("spec")) {
        if (c.contains("src") || c.contains("dst") || c.contains("landmarks") || (c.contains("pair") && c.contains("spec")))
            throw ConfigError("use either \"pair\", \"spec\" + \"deformation\", or \"src\" + \"dst\"");
        TubeSpec spec;
        DeformationSpec def;
        if (c.contains("pair")) {
            const auto name = get_or<std::string>(c, "pair", "");
            bool found = false;
            for (const auto& p : corpus_pairs())
                if (p.name == name) {
                    spec = corpus_spec(p.tube);
                    def = p.deformation;
                    found = true;
                }
            if (!found) throw ConfigError("unknown corpus pair \"" + name + "\"");
            if (c.contains("deformation")) throw ConfigError("\"deformation\" only applies to \"spec\"");
        } else {
            spec = tube_spec_from_json(c["spec"]);
            def = c.contains("deformation") ? deformation_from_json(c["deformation"]) : DeformationSpec{};
        }
        if (ctx.seed_flag || c.contains("seed")) spec.seed = def.seed = ctx.seed();
        auto pair = deform_pair(spec, def);
        src = std::move(pair.src);
        dst = std::move(pair.dst);
        landmarks = std::move(pair.src_truth.landmarks);
        // Generated meshes share vertex order, so vertex 0 is the same material point on both.
        ro.src_base = ro.dst_base = 0;
    } else {
        if (!c.contains("src") || !c.contains("dst")) throw ConfigError("\"src\" and \"dst\" meshes are required");
        src = load_mesh(ctx.input("src"));
        dst = load_mesh(ctx.input("dst"));
        if (c.contains("landmarks")) {
            std::ifstream in(ctx.input("landmarks"));
            if (!in) throw ConfigError("cannot read landmarks file " + ctx.input("landmarks").string());
            landmarks = ground_truth_from_json(json::parse(in)).landmarks;
        }
    }
    require_cylinder(ctx, src);
    require_cylinder(ctx, dst);
    ro.src_base = get_or(c, "src_base", ro.src_base);
    ro.dst_base = get_or(c, "dst_base", ro.dst_base);
    if (c.contains("orientation_flip")) {
        const auto& f = c["orientation_flip"];
        if (f.is_boolean()) ro.orientation_flip = f.get<bool>() ? FlipMode::On : FlipMode::Off;
        else if (f == "auto") ro.orientation_flip = FlipMode::Auto;
        else throw ConfigError("orientation_flip must be true, false or \"auto\"");
    }
    if (c.contains("grid")) {
        const auto g = get_or<std::vector<int>>(c, "grid", {});
        if (g.size() != 2 || g[0] < 8 || g[1] < 8) throw ConfigError("grid must be [n_theta, n_t], both >= 8");
        ro.grid.n_theta = g[0];
        ro.grid.n_t = g[1];
    }
    ro.sigma_theta = get_or(c, "sigma_theta", 0.0);
    ro.sigma_t = get_or(c, "sigma_t", 0.0);
    ro.refine.step = positive(c, "step", ro.refine.step);
    ro.refine.max_iters = get_or(c, "max_iters", ro.refine.max_iters);
    ro.refine.tol = get_or(c, "tol", ro.refine.tol);
    ro.refine.beta = get_or(c, "beta", ro.refine.beta);
    ro.refine.max_halvings = get_or(c, "max_halvings", ro.refine.max_halvings);
    if (ro.refine.max_iters < 0 || ro.refine.tol < 0 || ro.refine.beta < 0 || ro.refine.max_halvings < 0)
        throw ConfigError("max_iters, tol, beta and max_halvings must be non-negative");
    const double fraction = get_or(c, "control_fraction", 0.75);
    if (!(fraction > 0 && fraction < 1)) throw ConfigError("control_fraction must lie in (0, 1)");

    const auto run = register_tubes(src, dst, opts, ro);
    write_json(ctx.out / "global_map.json", registration_header(run.global));
    write_bytes(ctx.out / "global_map.bin", registration_grid_bytes(run.global));
    write_json(ctx.out / "refined_map.json", registration_header(run.refined.map));
    write_bytes(ctx.out / "refined_map.bin", registration_grid_bytes(run.refined.map));
    write_text(ctx.out / "trace.csv", trace_csv(run.refined.trace));
    json summary = {{"orientation_flip", run.pairing.orientation_flip},
                    {"auto_flipped", run.auto_flipped},
                    {"theta_offset", run.pairing.theta_offset},
                    {"src_base", run.src.param.base_vertex},
                    {"dst_base", run.dst.param.base_vertex},
                    {"src_folds", run.src.folds.size()},
                    {"dst_folds", run.dst.folds.size()},
                    {"iterations", static_cast<int>(run.refined.trace.size()) - 1},
                    {"converged", run.refined.converged},
                    {"initial_energy", run.refined.trace.front().energy},
                    {"final_energy", run.refined.trace.back().energy},
                    {"min_jacobian", run.refined.map.min_jacobian()}};
    if (!landmarks.empty()) {
        const auto e = landmark_errors(run, src, dst, landmarks, fraction, static_cast<std::uint64_t>(ctx.seed()));
        write_json(ctx.out / "global_error.json", to_json(e.global));
        write_json(ctx.out / "refined_error.json", to_json(e.refined));
        summary["global_mean_error_mm"] = e.global.mean;
        summary["refined_mean_error_mm"] = e.refined.mean;
    }
    write_json(ctx.out / "register.json", summary);
}

void cmd_synth(Context& ctx) {
    allow_keys(ctx.config, {"corpus", "spec", "pair", "deformation", "binary"});
    const auto& c = ctx.config;
    const int sources = static_cast<int>(c.contains("corpus")) + static_cast<int>(c.contains("spec")) +
                        static_cast<int>(c.contains("pair"));
    if (sources != 1) throw ConfigError("exactly one of \"corpus\", \"spec\" or \"pair\" is required");
    PlyWriteOptions po;
    po.binary = get_or(c, "binary", false);
    const bool reseed = ctx.seed_flag.has_value() || c.contains("seed");

    auto emit_pair = [&](const std::string& name, TubeSpec spec, DeformationSpec def) {
        if (reseed) spec.seed = def.seed = ctx.seed();
        const auto pair = deform_pair(spec, def);
        save_ply(pair.src, ctx.out / (name + "_src.ply"), po);
        save_ply(pair.dst, ctx.out / (name + "_dst.ply"), po);
        write_json(ctx.out / (name + "_truth.json"), to_json(pair.src_truth));
        write_json(ctx.out / (name + "_dst_truth.json"), to_json(pair.dst_truth));
        write_json(ctx.out / (name + "_spec.json"), {{"spec", to_json(spec)}, {"deformation", to_json(def)}});
    };
    auto emit_tube = [&](TubeSpec spec) {
        if (reseed) spec.seed = ctx.seed();
        const auto tube = generate_tube(spec);
        save_ply(tube.mesh, ctx.out / (spec.name + ".ply"), po);
        write_json(ctx.out / (spec.name + "_truth.json"), to_json(tube.truth));
        write_json(ctx.out / (spec.name + "_spec.json"), to_json(spec));
    };

    if (c.contains("deformation") && !c.contains("spec")) throw ConfigError("\"deformation\" needs \"spec\"");
    if (c.contains("pair")) {
        const auto name = get_or<std::string>(c, "pair", "");
        std::vector<CorpusPairSpec> chosen;
        for (const auto& p : corpus_pairs())
            if (name == "all" || p.name == name) chosen.push_back(p);
        if (chosen.empty()) throw ConfigError("unknown corpus pair \"" + name + "\"");
        for (const auto& p : chosen) emit_pair(p.name, corpus_spec(p.tube), p.deformation);
    } else if (c.contains("corpus")) {
        const auto name = get_or<std::string>(c, "corpus", "");
        if (name == "all") {
            for (const auto& s : corpus_specs()) emit_tube(s);
        } else {
            emit_tube(corpus_spec(name));
        }
    } else {
        const auto spec = tube_spec_from_json(c["spec"]);
        if (c.contains("deformation")) emit_pair(spec.name, spec, deformation_from_json(c["deformation"]));
        else emit_tube(spec);
    }
}

void cmd_eval(Context& ctx) {
    allow_keys(ctx.config, {"mesh", "truth", "folds"});
    const auto& c = ctx.config;
    if (!c.contains("mesh") || !c.contains("truth") || !c.contains("folds"))
        throw ConfigError("\"mesh\", \"truth\" and \"folds\" are required");
    const auto mesh = load_mesh(ctx.input("mesh"));
    auto read = [&](const char* key) {
        std::ifstream in(ctx.input(key));
        if (!in) throw ConfigError(std::string("cannot read ") + key + " file " + ctx.input(key).string());
        return json::parse(in);
    };
    const auto truth = ground_truth_from_json(read("truth"));
    const auto folds = read("folds");
    std::vector<std::vector<int>> t, d;
    for (const auto& f : truth.folds) t.push_back(f.faces);
    try {
        for (const auto& f : folds.at("folds")) d.push_back(f.at("faces").get<std::vector<int>>());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("folds file: ") + e.what());
    }
    for (const auto& set : t)
        for (int f : set)
            if (f < 0 || f >= static_cast<int>(mesh.face_count())) throw ConfigError("truth face index out of range");
    for (const auto& set : d)
        for (int f : set)
            if (f < 0 || f >= static_cast<int>(mesh.face_count())) throw ConfigError("fold face index out of range");
    const auto score = score_detection(t, d, mesh);
    write_json(ctx.out / "score.json", to_json(score));
    write_text(ctx.out / "score.txt", score_table({{ctx.input("mesh").stem().string(), score}}));
}

json error_json(const std::string& name, const std::string& kind, const std::string& message, const json& details) {
    json j = {{"error", name}, {"kind", kind}, {"message", message}};
    for (const auto& [k, v] : details.items()) j[k] = v;
    return j;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"spectube: spectral registration, fold segmentation and flattening of tubular meshes"};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir = "";
    std::optional<int> seed;
    const char* names[] = {"fiedler", "segment-folds", "register", "flatten", "synth", "eval"};
    for (const char* n : names) {
        auto* sub = app.add_subcommand(n);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides the config's \"out\")");
        sub->add_option("--seed", seed, "seed (overrides the config's \"seed\")");
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("UsageError", "validation", e.what(), json::object()).dump() << '\n';
        return 2;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    Context ctx;
    ctx.seed_flag = seed;
    take_notices();
    int code = 0;
    try {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot read config " + config_path);
        try {
            ctx.config = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!ctx.config.is_object()) throw ConfigError("config must be a JSON object");
        ctx.base_dir = fs::path(config_path).parent_path();
        // --out is relative to the working directory, the config's "out" to the config file.
        ctx.out = !out_dir.empty() ? fs::path(out_dir) : ctx.base_dir / get_or<std::string>(ctx.config, "out", ".");
        if (ctx.config.contains("seed")) (void)get_or<int>(ctx.config, "seed", 0);
        fs::create_directories(ctx.out);

        if (sub == "fiedler") cmd_fiedler(ctx);
        else if (sub == "segment-folds") cmd_segment_folds(ctx);
        else if (sub == "register") cmd_register(ctx);
        else if (sub == "flatten") cmd_flatten(ctx);
        else if (sub == "synth") cmd_synth(ctx);
        else cmd_eval(ctx);
    } catch (const Error& e) {
        code = e.kind() == ErrorKind::Validation ? 2 : 3;
        err << error_json(e.name(), code == 2 ? "validation" : "numerical", e.what(), ctx.details).dump() << '\n';
    } catch (const json::exception& e) {
        code = 2;
        err << error_json("ConfigError", "validation", e.what(), ctx.details).dump() << '\n';
    } catch (const fs::filesystem_error& e) {
        code = 2;
        err << error_json("IOError", "validation", e.what(), ctx.details).dump() << '\n';
    } catch (const std::exception& e) {
        code = 3;
        err << error_json("InternalError", "numerical", e.what(), ctx.details).dump() << '\n';
    }
    for (const auto& n : take_notices()) err << "notice: " << n << '\n';
    return code;
}

} // namespace spectube
