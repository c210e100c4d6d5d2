#include <algorithm>
#include <cmath>
#include <cstring>
#include <regex>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "spectube/cli.hpp"
#include "spectube/flatten.hpp"
#include "spectube/mesh_io.hpp"
#include "spectube/synth.hpp"
#include "test_helpers.hpp"

using namespace spectube;
using namespace spectube::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::string& command, const fs::path& config, const fs::path& out_dir = {}) {
    std::vector<std::string> args = {command, "--config", config.string()};
    if (!out_dir.empty()) {
        args.push_back("--out");
        args.push_back(out_dir.string());
    }
    std::ostringstream o, e;
    const int code = run_cli(args, o, e);
    return {code, o.str(), e.str()};
}

fs::path write_config(const fs::path& dir, const json& j) {
    const auto p = dir / "config.json";
    write_file(p, j.dump(2));
    return p;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

std::vector<double> read_f64(const fs::path& p) {
    const auto bytes = read_file(p);
    std::vector<double> v(bytes.size() / sizeof(double));
    std::memcpy(v.data(), bytes.data(), v.size() * sizeof(double));
    return v;
}

// Every regular file under a and b, compared byte for byte.
void check_same_tree(const fs::path& a, const fs::path& b) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), a));
    REQUIRE(!files.empty());
    for (const auto& f : files) {
        INFO(f.string());
        CHECK(read_file(a / f) == read_file(b / f));
    }
}

const json kSmallCylinder = {{"length", 40.0}, {"radius", 5.0}, {"n_axial", 32}, {"n_circumferential", 24}};

json small_fold_tube() {
    json s = kSmallCylinder;
    s["length"] = 80.0;
    s["n_axial"] = 96;
    s["n_circumferential"] = 48;
    s["rings"] = json::array({{{"s_center", 40.0}, {"n_folds", 3}, {"fold_depth", 1.5}, {"fold_width", 5.0}}});
    return s;
}

} // namespace

TEST_CASE("fiedler") {
    const auto dir = scratch_dir("cli_fiedler");
    SUBCASE("cylinder field rises with height") {
        const auto cfg = write_config(dir, {{"spec", kSmallCylinder}, {"out", "out"}});
        const auto r = cli("fiedler", cfg);
        REQUIRE(r.code == 0);
        for (const char* f : {"fiedler.ply", "fiedler.f64", "eigenvector.f64", "eigen.json", "level_sets.obj",
                              "level_sets.json", "centerline.obj", "centerline.json"})
            CHECK(fs::exists(dir / "out" / f));
        const auto v = read_f64(dir / "out" / "fiedler.f64");
        REQUIRE(v.size() == 33 * 24);
        double prev = -1;
        for (int ring = 0; ring <= 32; ++ring) {
            double mean = 0;
            for (int k = 0; k < 24; ++k) mean += v[static_cast<std::size_t>(ring * 24 + k)] / 24;
            CHECK(mean > prev);
            prev = mean;
        }
        const auto ply = load_mesh(dir / "out" / "fiedler.ply");
        CHECK(ply.vertex_count() == 33 * 24);
        CHECK(read_file(dir / "out" / "fiedler.ply").find("property uchar red") != std::string::npos);
        const auto e = read_json(dir / "out" / "eigen.json");
        CHECK(e["lambda1"].get<double>() > 0);
    }
    SUBCASE("closed surface is rejected with its topology") {
        save_obj(make_icosahedron(), dir / "ico.obj");
        const auto cfg = write_config(dir, {{"mesh", "ico.obj"}, {"out", "out"}});
        const auto r = cli("fiedler", cfg);
        CHECK(r.code == 2);
        const auto line = r.err.substr(0, r.err.find('\n'));
        const auto j = json::parse(line);
        CHECK(j["error"] == "TopologyError");
        CHECK(j["topology"]["boundary_count"] == 0);
        CHECK(j["topology"]["genus"] == 0);
    }
    SUBCASE("unknown keys and bad arguments") {
        CHECK(cli("fiedler", write_config(dir, {{"spec", kSmallCylinder}, {"colour", 1}})).code == 2);
        std::ostringstream o, e;
        CHECK(run_cli({"fiedler"}, o, e) == 2);
        CHECK(run_cli({"frobnicate", "--config", "x"}, o, e) == 2);
        CHECK(cli("fiedler", dir / "missing.json").code == 2);
    }
}

TEST_CASE("segment-folds") {
    const auto dir = scratch_dir("cli_folds");
    SUBCASE("fold-free tube writes no score") {
        const auto r = cli("segment-folds", write_config(dir, {{"spec", kSmallCylinder}, {"out", "a"}}));
        REQUIRE(r.code == 0);
        CHECK(fs::exists(dir / "a" / "folds.json"));
        CHECK(fs::exists(dir / "a" / "folds.ply"));
        CHECK_FALSE(fs::exists(dir / "a" / "score.json"));
        CHECK(read_json(dir / "a" / "folds.json")["folds"].empty());
    }
    SUBCASE("fold tube is scored against its truth") {
        const auto r = cli("segment-folds", write_config(dir, {{"spec", small_fold_tube()}, {"out", "b"}}));
        REQUIRE(r.code == 0);
        const auto s = read_json(dir / "b" / "score.json");
        CHECK(s["sensitivity"].get<double>() == doctest::Approx(1.0));
    }
    SUBCASE("pinched tube flags the collapsed bundle") {
        const auto r = cli("segment-folds", write_config(dir, {{"corpus", "pinched"}, {"out", "c"}}));
        REQUIRE(r.code == 0);
        int collapsed = 0;
        const auto folds = read_json(dir / "c" / "folds.json");
        for (const auto& b : folds["bundles"]) collapsed += b["collapsed"].get<bool>();
        CHECK(collapsed == 1);
    }
}

TEST_CASE("register") {
    const auto dir = scratch_dir("cli_register");
    const json opts = {{"grid", {64, 64}}, {"max_iters", 40}};
    SUBCASE("identity deformation gives near-zero errors") {
        json c = opts;
        c["spec"] = small_fold_tube();
        c["out"] = "self";
        const auto r = cli("register", write_config(dir, c));
        REQUIRE(r.code == 0);
        for (const char* f : {"global_map.json", "global_map.bin", "refined_map.json", "refined_map.bin", "trace.csv",
                              "global_error.json", "refined_error.json", "register.json"})
            CHECK(fs::exists(dir / "self" / f));
        CHECK(read_json(dir / "self" / "global_error.json")["mean_mm"].get<double>() < 0.5);
        CHECK(read_json(dir / "self" / "refined_error.json")["mean_mm"].get<double>() < 0.5);
    }
    SUBCASE("reversed winding is detected and flipped") {
        const auto src = generate_tube(tube_spec_from_json(small_fold_tube()));
        save_ply(src.mesh, dir / "src.ply");
        save_ply(flipped_orientation(src.mesh), dir / "dst.ply");
        json c = opts;
        c["src"] = "src.ply";
        c["dst"] = "dst.ply";
        c["src_base"] = 0;
        c["dst_base"] = 0;
        c["out"] = "flip";
        const auto r = cli("register", write_config(dir, c));
        REQUIRE(r.code == 0);
        CHECK(r.err.find("notice: orientation auto-flip") != std::string::npos);
        const auto j = read_json(dir / "flip" / "register.json");
        CHECK(j["auto_flipped"] == true);
        // With the flip the refined map stays close to the identity.
        const auto bin = read_f64(dir / "flip" / "global_map.bin");
        CHECK(std::all_of(bin.begin(), bin.end(), [](double x) { return std::abs(x) < 1e-9; }));
    }
}

TEST_CASE("flatten") {
    const auto dir = scratch_dir("cli_flatten");
    SUBCASE("cylinder distortion is 2 for both cuts") {
        REQUIRE(cli("flatten", write_config(dir, {{"spec", kSmallCylinder}, {"out", "cyl"}})).code == 0);
        const auto d = read_json(dir / "cyl" / "distortion.json");
        CHECK(d["consistent"]["distortion"].get<double>() == doctest::Approx(2.0).epsilon(0.01));
        CHECK(d["geodesic"]["distortion"].get<double>() == doctest::Approx(2.0).epsilon(0.01));
        CHECK(d["consistent"]["euler_characteristic"] == 1);
    }
    SUBCASE("no fold polygon meets the seam of the consistent map") {
        REQUIRE(cli("flatten", write_config(dir, {{"corpus", "fold_gap"}, {"out", "gap"}})).code == 0);
        const auto svg = read_file(dir / "gap" / "consistent.svg");
        std::vector<double> seams;
        const std::regex line_re(R"re(<line class="seam" x1="([-0-9.]+)")re");
        for (std::sregex_iterator it(svg.begin(), svg.end(), line_re), end; it != end; ++it) seams.push_back(std::stod((*it)[1]));
        REQUIRE(seams.size() == 2);
        const double w = *std::max_element(seams.begin(), seams.end());
        CHECK(*std::min_element(seams.begin(), seams.end()) == doctest::Approx(0.0));
        const std::regex poly_re(R"re(<polygon class="fold" data-label="\d+" points="([^"]+)")re");
        const std::regex pt_re(R"re(([-0-9.]+),([-0-9.]+))re");
        int n = 0;
        for (std::sregex_iterator it(svg.begin(), svg.end(), poly_re), end; it != end; ++it, ++n) {
            const std::string pts = (*it)[1];
            double lo = 1e300, hi = -1e300;
            for (std::sregex_iterator p(pts.begin(), pts.end(), pt_re), pe; p != pe; ++p) {
                const double x = std::stod((*p)[1]);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            CHECK(lo > 1e-6);
            CHECK(hi < w - 1e-6);
        }
        CHECK(n > 0);
        const auto d = read_json(dir / "gap" / "distortion.json");
        CHECK(d["consistent"]["fold_faces_on_cut"] == 0);
        CHECK(d["geodesic"]["fold_faces_on_cut"].get<int>() > 0);
    }
}

TEST_CASE("synth and eval") {
    const auto dir = scratch_dir("cli_synth");
    REQUIRE(cli("synth", write_config(dir, {{"corpus", "fold_gap"}, {"out", "s"}})).code == 0);
    for (const char* f : {"fold_gap.ply", "fold_gap_truth.json", "fold_gap_spec.json"}) CHECK(fs::exists(dir / "s" / f));
    // Scoring the truth against itself is perfect.
    const auto truth = read_json(dir / "s" / "fold_gap_truth.json");
    json folds = {{"folds", json::array()}};
    for (const auto& f : truth["folds"]) folds["folds"].push_back({{"faces", f["faces"]}});
    write_file(dir / "s" / "self.json", folds.dump());
    REQUIRE(cli("eval", write_config(dir, {{"mesh", "s/fold_gap.ply"}, {"truth", "s/fold_gap_truth.json"},
                                           {"folds", "s/self.json"}, {"out", "e"}}))
                .code == 0);
    const auto s = read_json(dir / "e" / "score.json");
    CHECK(s["sensitivity"].get<double>() == 1.0);
    CHECK(s["mean_sar"].get<double>() == doctest::Approx(1.0));
    CHECK(s["fp"] == 0);
    SUBCASE("out-of-range face index") {
        write_file(dir / "s" / "bad.json", json{{"folds", {{{"faces", {0, 99999999}}}}}}.dump());
        CHECK(cli("eval", write_config(dir, {{"mesh", "s/fold_gap.ply"}, {"truth", "s/fold_gap_truth.json"},
                                            {"folds", "s/bad.json"}, {"out", "e2"}}))
                  .code == 2);
    }
}

TEST_CASE("reruns are byte-identical") {
    const auto dir = scratch_dir("cli_determinism");
    const json reg = {{"spec", small_fold_tube()},
                      {"deformation", {{"axial_stretch", 0.1}, {"twist_deg", 10.0}, {"noise_mm", 0.1}}},
                      {"grid", {48, 48}},
                      {"max_iters", 30}};
    const std::vector<std::pair<std::string, json>> runs = {
        {"fiedler", {{"spec", small_fold_tube()}}},       {"segment-folds", {{"spec", small_fold_tube()}}},
        {"flatten", {{"spec", small_fold_tube()}}},       {"register", reg},
        {"synth", {{"spec", small_fold_tube()}}},
    };
    for (const auto& [cmd, cfg] : runs) {
        INFO(cmd);
        const auto path = write_config(dir, cfg);
        REQUIRE(cli(cmd, path, dir / (cmd + "_1")).code == 0);
        REQUIRE(cli(cmd, path, dir / (cmd + "_2")).code == 0);
        check_same_tree(dir / (cmd + "_1"), dir / (cmd + "_2"));
    }
}
