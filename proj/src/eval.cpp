#include "spectube/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "spectube/error.hpp"

namespace spectube {

namespace {

double area_of(const std::set<int>& faces, const TriMesh& mesh) {
    double a = 0.0;
    for (int f : faces) a += mesh.face_area(f);
    return a;
}

double overlap_area(const std::set<int>& a, const std::set<int>& b, const TriMesh& mesh) {
    double s = 0.0;
    for (int f : a)
        if (b.count(f)) s += mesh.face_area(f);
    return s;
}

} // namespace

double sar(const std::vector<int>& ground_truth, const std::vector<int>& detected, const TriMesh& mesh) {
    if (ground_truth.empty()) throw EmptyGroundTruthError("ground-truth face set is empty");
    const std::set<int> g(ground_truth.begin(), ground_truth.end()), d(detected.begin(), detected.end());
    const double inter = overlap_area(g, d, mesh);
    const double uni = area_of(g, mesh) + area_of(d, mesh) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

SegmentationScore score_detection(const std::vector<std::vector<int>>& truth,
                                  const std::vector<std::vector<int>>& detected, const TriMesh& mesh) {
    std::vector<std::set<int>> T, D;
    for (const auto& t : truth) T.emplace_back(t.begin(), t.end());
    for (const auto& d : detected) D.emplace_back(d.begin(), d.end());

    struct Cand {
        double overlap;
        int t, d;
    };
    std::vector<Cand> cands;
    for (int i = 0; i < static_cast<int>(T.size()); ++i)
        for (int j = 0; j < static_cast<int>(D.size()); ++j) {
            const double o = overlap_area(T[static_cast<std::size_t>(i)], D[static_cast<std::size_t>(j)], mesh);
            if (o > 0) cands.push_back({o, i, j});
        }
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        return a.t != b.t ? a.t < b.t : a.d < b.d;
    });

    SegmentationScore s;
    s.matches.resize(T.size());
    for (std::size_t i = 0; i < T.size(); ++i) s.matches[i].truth = static_cast<int>(i);
    std::vector<char> d_used(D.size(), 0), t_used(T.size(), 0);
    for (const auto& c : cands) {
        if (t_used[static_cast<std::size_t>(c.t)] || d_used[static_cast<std::size_t>(c.d)]) continue;
        t_used[static_cast<std::size_t>(c.t)] = d_used[static_cast<std::size_t>(c.d)] = 1;
        auto& m = s.matches[static_cast<std::size_t>(c.t)];
        m.detected = c.d;
        m.overlap_fraction = c.overlap / area_of(T[static_cast<std::size_t>(c.t)], mesh);
        m.sar = sar(truth[static_cast<std::size_t>(c.t)], detected[static_cast<std::size_t>(c.d)], mesh);
        m.detected_ok = m.overlap_fraction > 0.5;
    }
    for (const auto& m : s.matches) {
        if (m.detected_ok) {
            ++s.tp;
            s.sar_values.push_back(m.sar);
        } else {
            ++s.fn;
        }
    }
    s.fp = static_cast<int>(D.size()) - s.tp;
    s.sensitivity = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / (s.tp + s.fn) : 0.0;
    s.mean_sar = s.sar_values.empty()
                     ? 0.0
                     : std::accumulate(s.sar_values.begin(), s.sar_values.end(), 0.0) / static_cast<double>(s.sar_values.size());
    return s;
}

nlohmann::json to_json(const SegmentationScore& score) {
    nlohmann::json j;
    j["tp"] = score.tp;
    j["fp"] = score.fp;
    j["fn"] = score.fn;
    j["sensitivity"] = score.sensitivity;
    j["mean_sar"] = score.mean_sar;
    j["specificity"] = "n/a";
    auto& m = j["matches"] = nlohmann::json::array();
    for (const auto& x : score.matches)
        m.push_back({{"truth", x.truth},
                     {"detected", x.detected},
                     {"overlap_fraction", x.overlap_fraction},
                     {"sar", x.sar},
                     {"detected_ok", x.detected_ok}});
    return j;
}

std::string score_table(const std::vector<std::pair<std::string, SegmentationScore>>& rows) {
    std::string out = "Scan ID              #True  Sensitivity  #FNs  #FPs    SAR\n";
    char buf[160];
    for (const auto& [id, s] : rows) {
        std::snprintf(buf, sizeof buf, "%-20s %5d  %11.3f  %4d  %4d  %5.3f\n", id.c_str(), s.tp + s.fn, s.sensitivity,
                      s.fn, s.fp, s.mean_sar);
        out += buf;
    }
    return out;
}

std::vector<int> control_landmarks(int n, double control_fraction, std::uint64_t seed) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with explicit draws so the split does not depend on the standard library's shuffle.
    for (int i = n - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    int nc = static_cast<int>(std::lround(control_fraction * n));
    nc = std::clamp(nc, 1, n - 1);
    idx.resize(static_cast<std::size_t>(nc));
    std::sort(idx.begin(), idx.end());
    return idx;
}

DistanceErrorReport distance_error(const std::function<Vec3(const Vec3&)>& map,
                                   const std::vector<LandmarkPair>& landmarks, double control_fraction,
                                   std::uint64_t seed) {
    const int n = static_cast<int>(landmarks.size());
    if (n < 2) throw TooFewLandmarksError("distance error needs at least 2 landmark pairs");
    if (!(control_fraction > 0 && control_fraction < 1))
        throw TooFewLandmarksError("control fraction must lie in (0, 1)");
    const auto control = control_landmarks(n, control_fraction, seed);
    const std::set<int> cset(control.begin(), control.end());
    DistanceErrorReport r;
    r.seed = seed;
    r.n_control = static_cast<int>(control.size());
    for (int i = 0; i < n; ++i) {
        if (cset.count(i)) continue;
        const auto& lm = landmarks[static_cast<std::size_t>(i)];
        r.heldout.push_back(i);
        r.errors.push_back((map(lm.src) - lm.dst).norm());
    }
    r.n_heldout = static_cast<int>(r.heldout.size());
    r.mean = std::accumulate(r.errors.begin(), r.errors.end(), 0.0) / r.n_heldout;
    r.max = *std::max_element(r.errors.begin(), r.errors.end());
    std::vector<double> s = r.errors;
    std::sort(s.begin(), s.end());
    const auto h = s.size() / 2;
    r.median = s.size() % 2 ? s[h] : 0.5 * (s[h - 1] + s[h]);
    return r;
}

nlohmann::json to_json(const DistanceErrorReport& r) {
    return {{"n_control", r.n_control}, {"n_heldout", r.n_heldout}, {"heldout", r.heldout}, {"errors_mm", r.errors},
            {"mean_mm", r.mean},        {"median_mm", r.median},    {"max_mm", r.max},      {"seed", r.seed}};
}

} // namespace spectube
