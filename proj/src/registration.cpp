#include "spectube/registration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <numbers>
#include <string>

#include "spectube/error.hpp"
#include "spectube/parallel.hpp"

namespace spectube {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
    a = std::fmod(a, kTwoPi);
    return a < 0 ? a + kTwoPi : a;
}

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

// Bilinear sample, periodic in columns and clamped in rows.
double bilinear(const GridSpec& g, const std::vector<double>& v, double col, double row) {
    const double fc = std::floor(col);
    const double a = col - fc;
    const int i0 = wrap_index(static_cast<int>(fc), g.n_theta);
    const int i1 = (i0 + 1) % g.n_theta;
    const double r = std::clamp(row, 0.0, static_cast<double>(g.n_t - 1));
    const int j0 = std::min(static_cast<int>(r), g.n_t - 2);
    const double b = r - j0;
    return (1 - a) * (1 - b) * v[g.index(i0, j0)] + a * (1 - b) * v[g.index(i1, j0)] +
           (1 - a) * b * v[g.index(i0, j0 + 1)] + a * b * v[g.index(i1, j0 + 1)];
}

// Central differences at a node: periodic columns, one-sided at the first and last row.
Vec2 node_gradient(const GridSpec& g, const std::vector<double>& v, int i, int j) {
    const double dc = 0.5 * (v[g.index((i + 1) % g.n_theta, j)] - v[g.index(wrap_index(i - 1, g.n_theta), j)]);
    double dr;
    if (j == 0) dr = v[g.index(i, 1)] - v[g.index(i, 0)];
    else if (j == g.n_t - 1) dr = v[g.index(i, j)] - v[g.index(i, j - 1)];
    else dr = 0.5 * (v[g.index(i, j + 1)] - v[g.index(i, j - 1)]);
    return {dc, dr};
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0)) return {1.0};
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double w = std::exp(-0.5 * (i * i) / (sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = w;
        sum += w;
    }
    for (auto& w : k) w /= sum;
    return k;
}

// Half-sample symmetric reflection, which keeps the convolution mass preserving.
int reflect_index(int i, int n) {
    const int period = 2 * n;
    i = wrap_index(i, period);
    return i < n ? i : period - 1 - i;
}

} // namespace

double GridSpec::theta_of(double i) const { return kTwoPi * i / n_theta; }
double GridSpec::t_of(double j) const { return j / (n_t - 1); }
double GridSpec::col(double theta) const { return theta * n_theta / kTwoPi; }
double GridSpec::row(double t) const { return t * (n_t - 1); }

RegistrationMap::RegistrationMap(GridSpec g) : grid(g), d_theta(g.size(), 0.0), d_t(g.size(), 0.0) {}

Vec2 RegistrationMap::apply(double theta, double t) const {
    const double c = grid.col(wrap_2pi(theta)), r = grid.row(std::clamp(t, 0.0, 1.0));
    const double du = bilinear(grid, d_theta, c, r), dv = bilinear(grid, d_t, c, r);
    return {wrap_2pi(theta + grid.theta_of(du)), std::clamp(t + dv / (grid.n_t - 1), 0.0, 1.0)};
}

double RegistrationMap::min_jacobian() const {
    double m = std::numeric_limits<double>::infinity();
    for (int j = 1; j + 1 < grid.n_t; ++j)
        for (int i = 0; i < grid.n_theta; ++i) {
            const Vec2 gu = node_gradient(grid, d_theta, i, j), gv = node_gradient(grid, d_t, i, j);
            m = std::min(m, (1 + gu.x()) * (1 + gv.y()) - gu.y() * gv.x());
        }
    return m;
}

BoundaryPairing match_boundaries(const TriMesh& src, const FiedlerField& src_field, const TriMesh& dst,
                                 const FiedlerField& dst_field, int src_base, int dst_base, bool orientation_flip,
                                 LoopOrientation orientation) {
    auto check = [](const TriMesh& mesh, const FiedlerField& f, int base, const char* which) {
        const int loop = mesh.loop_of_vertex(base);
        if (loop < 0)
            throw VertexNotOnLoopError(std::string(which) + " base vertex " + std::to_string(base) +
                                       " is not on a boundary loop");
        double mean = 0.0;
        const auto& lv = mesh.boundary_loops()[static_cast<std::size_t>(loop)];
        for (int v : lv) mean += f.field.values[static_cast<std::size_t>(v)];
        mean /= static_cast<double>(lv.size());
        if (mean > 0.5)
            throw OrientationMismatchError(std::string(which) + " Fiedler minimum is not on the designated gamma_0 loop " +
                                           std::to_string(loop));
        return loop;
    };
    const int ls = check(src, src_field, src_base, "source");
    const int ld = check(dst, dst_field, dst_base, "target");
    BoundaryPairing p;
    p.orientation_flip = orientation_flip;
    const LoopOrientation other = orientation == LoopOrientation::Ccw ? LoopOrientation::Cw : LoopOrientation::Ccw;
    p.src = boundary_arc_length_parameterization(src, ls, src_base, orientation);
    p.dst = boundary_arc_length_parameterization(dst, ld, dst_base, orientation_flip ? other : orientation);
    return p;
}

RegistrationMap global_register(const TubeParameterization& src, const TubeParameterization& dst,
                                const BoundaryPairing& pairing, GridSpec grid) {
    if (src.base_vertex != pairing.src.vertices.front() || dst.base_vertex != pairing.dst.vertices.front())
        throw OrientationMismatchError("parameterization bases differ from the boundary pairing");
    RegistrationMap m(grid);
    std::fill(m.d_theta.begin(), m.d_theta.end(), grid.col(pairing.theta_offset));
    return m;
}

double CharacteristicField::sample(double col, double row) const { return bilinear(grid, values, col, row); }

void CharacteristicField::update_gradients() {
    node_gradients.resize(grid.size());
    for (int j = 0; j < grid.n_t; ++j)
        for (int i = 0; i < grid.n_theta; ++i) node_gradients[grid.index(i, j)] = node_gradient(grid, values, i, j);
}

Vec2 CharacteristicField::gradient(double col, double row) const {
    const double fc = std::floor(col);
    const double a = col - fc;
    const int i0 = wrap_index(static_cast<int>(fc), grid.n_theta);
    const int i1 = (i0 + 1) % grid.n_theta;
    const double r = std::clamp(row, 0.0, static_cast<double>(grid.n_t - 1));
    const int j0 = std::min(static_cast<int>(r), grid.n_t - 2);
    const double b = r - j0;
    auto g = [&](int i, int j) {
        return node_gradients.empty() ? node_gradient(grid, values, i, j) : node_gradients[grid.index(i, j)];
    };
    return (1 - a) * (1 - b) * g(i0, j0) + a * (1 - b) * g(i1, j0) + (1 - a) * b * g(i0, j0 + 1) + a * b * g(i1, j0 + 1);
}

std::vector<double> gaussian_smooth(const GridSpec& g, const std::vector<double>& values, double sigma_theta,
                                    double sigma_t) {
    const auto kc = gaussian_kernel(sigma_theta), kr = gaussian_kernel(sigma_t);
    const int rc = static_cast<int>(kc.size() / 2), rr = static_cast<int>(kr.size() / 2);
    std::vector<double> tmp(g.size()), out(g.size());
    for (int j = 0; j < g.n_t; ++j)
        for (int i = 0; i < g.n_theta; ++i) {
            double s = 0.0;
            for (int k = -rc; k <= rc; ++k)
                s += kc[static_cast<std::size_t>(k + rc)] * values[g.index(wrap_index(i + k, g.n_theta), j)];
            tmp[g.index(i, j)] = s;
        }
    for (int j = 0; j < g.n_t; ++j)
        for (int i = 0; i < g.n_theta; ++i) {
            double s = 0.0;
            for (int k = -rr; k <= rr; ++k)
                s += kr[static_cast<std::size_t>(k + rr)] * tmp[g.index(i, reflect_index(j + k, g.n_t))];
            out[g.index(i, j)] = s;
        }
    return out;
}

CharacteristicField build_characteristic(const TriMesh& mesh, const std::vector<FoldSegment>& folds,
                                         const TubeParameterization& param, GridSpec grid, double sigma_theta,
                                         double sigma_t) {
    CharacteristicField c;
    c.grid = grid;
    c.raw.assign(grid.size(), 0.0);
    c.sigma_theta = sigma_theta > 0 ? sigma_theta : 0.02 * grid.n_theta;
    c.sigma_t = sigma_t > 0 ? sigma_t : 0.02 * grid.n_t;
    for (const auto& fold : folds)
        for (int f : fold.faces) {
            const auto& fc = mesh.face(f);
            const double th0 = param.theta[static_cast<std::size_t>(fc[0])];
            Vec2 p[3];
            for (int k = 0; k < 3; ++k) {
                const auto v = static_cast<std::size_t>(fc[k]);
                p[k] = {grid.col(th0 + std::remainder(param.theta[v] - th0, kTwoPi)), grid.row(param.t[v])};
            }
            const double den = (p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x();
            if (std::abs(den) < 1e-300) continue;
            const double cmin = std::min({p[0].x(), p[1].x(), p[2].x()}), cmax = std::max({p[0].x(), p[1].x(), p[2].x()});
            const double rmin = std::min({p[0].y(), p[1].y(), p[2].y()}), rmax = std::max({p[0].y(), p[1].y(), p[2].y()});
            for (int j = std::max(0, static_cast<int>(std::ceil(rmin))); j <= std::min(grid.n_t - 1, static_cast<int>(std::floor(rmax))); ++j)
                for (int i = static_cast<int>(std::ceil(cmin)); i <= static_cast<int>(std::floor(cmax)); ++i) {
                    const Vec2 q(i, j), d = q - p[0];
                    const double b1 = (d.x() * (p[2] - p[0]).y() - d.y() * (p[2] - p[0]).x()) / den;
                    const double b2 = ((p[1] - p[0]).x() * d.y() - (p[1] - p[0]).y() * d.x()) / den;
                    if (b1 >= -1e-12 && b2 >= -1e-12 && b1 + b2 <= 1 + 1e-12)
                        c.raw[grid.index(wrap_index(i, grid.n_theta), j)] = 1.0;
                }
        }
    c.values = gaussian_smooth(grid, c.raw, c.sigma_theta, c.sigma_t);
    c.update_gradients();
    return c;
}

namespace {

// Row-fused evaluation of the energy terms, the force and the Jacobian for one grid size.
class FlowKernel {
public:
    FlowKernel(const CharacteristicField& chi1, const CharacteristicField& chi2)
        : g_(chi2.grid), chi1_(chi1.values), packed_(chi2.grid.size()) {
        for (std::size_t n = 0; n < packed_.size(); ++n) {
            const Vec2 gr = chi2.node_gradients.empty() ? Vec2::Zero() : chi2.node_gradients[n];
            packed_[n] = {chi2.values[n], gr.x(), gr.y()};
        }
        if (chi2.node_gradients.empty()) {
            for (int j = 0; j < g_.n_t; ++j)
                for (int i = 0; i < g_.n_theta; ++i) {
                    const Vec2 gr = node_gradient(g_, chi2.values, i, j);
                    packed_[g_.index(i, j)].gc = gr.x();
                    packed_[g_.index(i, j)].gr = gr.y();
                }
        }
    }

    struct Eval {
        EnergyTerms terms;
        double min_jacobian = std::numeric_limits<double>::infinity();
    };

    Eval evaluate(const std::vector<double>& u, const std::vector<double>& v, double beta) const {
        std::vector<double> data(static_cast<std::size_t>(g_.n_t)), smooth(data.size()), jac(data.size());
        parallel_for(g_.n_t, [&](int j) {
            double d = 0.0, s = 0.0, mj = std::numeric_limits<double>::infinity();
            const bool interior = j > 0 && j + 1 < g_.n_t;
            // Same differences as node_gradient: central, one-sided on the first and last row.
            const int jm = std::max(j - 1, 0), jp = std::min(j + 1, g_.n_t - 1);
            const double inv_dr = 1.0 / (jp - jm);
            for (int i = 0; i < g_.n_theta; ++i) {
                const auto n = g_.index(i, j);
                const auto e = g_.index(i + 1 == g_.n_theta ? 0 : i + 1, j), w = g_.index(i == 0 ? g_.n_theta - 1 : i - 1, j);
                const auto so = g_.index(i, jm), no = g_.index(i, jp);
                const Sample q = sample(i + u[n], j + v[n]);
                const double r = chi1_[n] - q.v;
                d += r * r;
                const double uc = 0.5 * (u[e] - u[w]), ur = (u[no] - u[so]) * inv_dr;
                const double vc = 0.5 * (v[e] - v[w]), vr = (v[no] - v[so]) * inv_dr;
                s += uc * uc + ur * ur + vc * vc + vr * vr;
                if (interior) mj = std::min(mj, (1 + uc) * (1 + vr) - ur * vc);
            }
            data[static_cast<std::size_t>(j)] = d;
            smooth[static_cast<std::size_t>(j)] = s;
            jac[static_cast<std::size_t>(j)] = mj;
        });
        Eval e;
        for (std::size_t j = 0; j < data.size(); ++j) {
            e.terms.data += data[j];
            e.terms.smooth += smooth[j];
            e.min_jacobian = std::min(e.min_jacobian, jac[j]);
        }
        e.terms.smooth *= beta;
        return e;
    }

    // Descent direction: (chi1 - chi2 o phi) grad chi2(phi) + beta * five-point Laplacian
    // (periodic in theta, mirrored in t); d_t stays pinned on the first and last row.
    void force(const std::vector<double>& u, const std::vector<double>& v, double beta, std::vector<double>& fu,
               std::vector<double>& fv) const {
        parallel_for(g_.n_t, [&](int j) {
            const int jm = j > 0 ? j - 1 : 1, jp = j + 1 < g_.n_t ? j + 1 : g_.n_t - 2;
            const bool edge = j == 0 || j + 1 == g_.n_t;
            for (int i = 0; i < g_.n_theta; ++i) {
                const auto n = g_.index(i, j);
                const auto e = g_.index((i + 1) % g_.n_theta, j), w = g_.index(i == 0 ? g_.n_theta - 1 : i - 1, j);
                const auto s = g_.index(i, jm), no = g_.index(i, jp);
                const Sample q = sample(i + u[n], j + v[n]);
                const double r = chi1_[n] - q.v;
                fu[n] = r * q.gc + beta * (u[e] + u[w] + u[s] + u[no] - 4.0 * u[n]);
                fv[n] = edge ? 0.0 : r * q.gr + beta * (v[e] + v[w] + v[s] + v[no] - 4.0 * v[n]);
            }
        });
    }

private:
    struct Sample {
        double v, gc, gr;
    };
    const GridSpec g_;
    const std::vector<double>& chi1_;
    std::vector<Sample> packed_;

    Sample sample(double col, double row) const {
        const double fc = std::floor(col);
        const double a = col - fc;
        const int i0 = wrap_index(static_cast<int>(fc), g_.n_theta);
        const int i1 = i0 + 1 == g_.n_theta ? 0 : i0 + 1;
        const double r = std::clamp(row, 0.0, static_cast<double>(g_.n_t - 1));
        const int j0 = std::min(static_cast<int>(r), g_.n_t - 2);
        const double b = r - j0;
        const Sample& p00 = packed_[g_.index(i0, j0)];
        const Sample& p10 = packed_[g_.index(i1, j0)];
        const Sample& p01 = packed_[g_.index(i0, j0 + 1)];
        const Sample& p11 = packed_[g_.index(i1, j0 + 1)];
        const double w00 = (1 - a) * (1 - b), w10 = a * (1 - b), w01 = (1 - a) * b, w11 = a * b;
        return {w00 * p00.v + w10 * p10.v + w01 * p01.v + w11 * p11.v,
                w00 * p00.gc + w10 * p10.gc + w01 * p01.gc + w11 * p11.gc,
                w00 * p00.gr + w10 * p10.gr + w01 * p01.gr + w11 * p11.gr};
    }
};

void check_grids(const GridSpec& g, const CharacteristicField& chi1, const CharacteristicField& chi2) {
    if (chi1.grid.n_theta != g.n_theta || chi1.grid.n_t != g.n_t || chi2.grid.n_theta != g.n_theta ||
        chi2.grid.n_t != g.n_t)
        throw ConfigError("characteristic grids differ from the registration grid");
}

} // namespace

EnergyTerms energy(const RegistrationMap& map, const CharacteristicField& chi1, const CharacteristicField& chi2,
                   double beta) {
    check_grids(map.grid, chi1, chi2);
    return FlowKernel(chi1, chi2).evaluate(map.d_theta, map.d_t, beta).terms;
}

RefineResult refine_registration(const RegistrationMap& start, const CharacteristicField& chi1,
                                 const CharacteristicField& chi2, const RefineOptions& options) {
    const auto& g = start.grid;
    check_grids(g, chi1, chi2);
    const FlowKernel kernel(chi1, chi2);
    RefineResult res{start, {}, false};
    EnergyTerms e = kernel.evaluate(res.map.d_theta, res.map.d_t, options.beta).terms;
    res.trace.push_back({0, e.total(), e.data, e.smooth, 0.0});

    RegistrationMap cand(g);
    std::vector<double> fu(g.size()), fv(g.size());
    const double max_row = g.n_t - 1;
    for (int it = 1; it <= options.max_iters; ++it) {
        const auto& m = res.map;
        kernel.force(m.d_theta, m.d_t, options.beta, fu, fv);

        double step = options.step;
        bool accepted = false, folded = false;
        EnergyTerms ec;
        for (int h = 0; h <= options.max_halvings; ++h, step *= 0.5) {
            for (std::size_t n = 0; n < g.size(); ++n) {
                cand.d_theta[n] = m.d_theta[n] + step * fu[n];
                const double j = static_cast<double>(n / static_cast<std::size_t>(g.n_theta));
                cand.d_t[n] = std::clamp(m.d_t[n] + step * fv[n], -j, max_row - j);
            }
            const auto ev = kernel.evaluate(cand.d_theta, cand.d_t, options.beta);
            folded = ev.min_jacobian <= 0.0;
            if (folded) continue;
            ec = ev.terms;
            if (ec.total() <= e.total()) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (folded) throw FoldOverError("registration grid folds over at iteration " + std::to_string(it));
            res.converged = true;
            break;
        }
        std::swap(res.map.d_theta, cand.d_theta);
        std::swap(res.map.d_t, cand.d_t);
        e = ec;
        res.trace.push_back({it, e.total(), e.data, e.smooth, step});
        if (it >= 10) {
            const double past = res.trace[res.trace.size() - 11].energy;
            if (past <= 0.0 || (past - e.total()) / past < options.tol) {
                res.converged = true;
                break;
            }
        }
    }
    return res;
}

ParamLocator::ParamLocator(const TriMesh& mesh, const TubeParameterization& param, int buckets)
    : mesh_(&mesh), buckets_(buckets), cells_(static_cast<std::size_t>(buckets * buckets)) {
    for (int f = 0; f < static_cast<int>(mesh.face_count()); ++f) {
        const auto& fc = mesh.face(f);
        const double th0 = param.theta[static_cast<std::size_t>(fc[0])];
        Vec2 p[3];
        for (int k = 0; k < 3; ++k) {
            const auto v = static_cast<std::size_t>(fc[k]);
            p[k] = {th0 + std::remainder(param.theta[v] - th0, kTwoPi), param.t[v]};
        }
        const double lo = std::min({p[0].x(), p[1].x(), p[2].x()}), hi = std::max({p[0].x(), p[1].x(), p[2].x()});
        const double tlo = std::min({p[0].y(), p[1].y(), p[2].y()}), thi = std::max({p[0].y(), p[1].y(), p[2].y()});
        // One copy starting inside [0, 2pi), plus a shifted copy when the triangle crosses the seam.
        const double shift = -kTwoPi * std::floor(lo / kTwoPi);
        for (double s : {shift, shift - kTwoPi}) {
            if (s != shift && hi + shift < kTwoPi) break;
            const Vec2 o(s, 0.0);
            tris_.push_back({f, p[0] + o, p[1] + o, p[2] + o});
            insert(static_cast<int>(tris_.size()) - 1, lo + s, hi + s, tlo, thi);
        }
    }
}

void ParamLocator::insert(int tri, double th_lo, double th_hi, double t_lo, double t_hi) {
    const auto cell = [&](double x, double scale) {
        return std::clamp(static_cast<int>(std::floor(x * scale)), 0, buckets_ - 1);
    };
    const int c0 = cell(th_lo, buckets_ / kTwoPi), c1 = cell(th_hi, buckets_ / kTwoPi);
    const int r0 = cell(t_lo, buckets_), r1 = cell(t_hi, buckets_);
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) cells_[static_cast<std::size_t>(r * buckets_ + c)].push_back(tri);
}

SurfacePoint ParamLocator::locate(double theta, double t) const {
    const Vec2 q(wrap_2pi(theta), std::clamp(t, 0.0, 1.0));
    auto bary = [&](const Tri& tr) {
        const Vec2 e1 = tr.b - tr.a, e2 = tr.c - tr.a, d = q - tr.a;
        const double den = e1.x() * e2.y() - e1.y() * e2.x();
        if (std::abs(den) < 1e-300) return Vec3(-1, -1, -1);
        const double b1 = (d.x() * e2.y() - d.y() * e2.x()) / den;
        const double b2 = (e1.x() * d.y() - e1.y() * d.x()) / den;
        return Vec3(1 - b1 - b2, b1, b2);
    };
    // Point-to-triangle distance in the parameter plane, for queries that land in no triangle.
    auto dist = [&](const Tri& tr, Vec3& b) {
        b = bary(tr);
        if (b.minCoeff() >= 0) return 0.0;
        double best = std::numeric_limits<double>::infinity();
        const Vec2* v[3] = {&tr.a, &tr.b, &tr.c};
        for (int k = 0; k < 3; ++k) {
            const Vec2& a = *v[k];
            const Vec2& c = *v[(k + 1) % 3];
            const Vec2 ab = c - a;
            const double s = std::clamp((q - a).dot(ab) / std::max(ab.squaredNorm(), 1e-300), 0.0, 1.0);
            const double d = (a + s * ab - q).norm();
            if (d < best) {
                best = d;
                b = Vec3::Zero();
                b[k] = 1 - s;
                b[(k + 1) % 3] = s;
            }
        }
        return best;
    };
    const int c = std::clamp(static_cast<int>(std::floor(q.x() * buckets_ / kTwoPi)), 0, buckets_ - 1);
    const int r = std::clamp(static_cast<int>(std::floor(q.y() * buckets_)), 0, buckets_ - 1);
    SurfacePoint best_sp;
    double best = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < buckets_; ++ring) {
        for (int rr = r - ring; rr <= r + ring; ++rr) {
            if (rr < 0 || rr >= buckets_) continue;
            for (int cc = c - ring; cc <= c + ring; ++cc) {
                if (std::max(std::abs(rr - r), std::abs(cc - c)) != ring) continue;
                for (int ti : cells_[static_cast<std::size_t>(rr * buckets_ + wrap_index(cc, buckets_))]) {
                    const auto& tr = tris_[static_cast<std::size_t>(ti)];
                    Vec3 b;
                    const double d = dist(tr, b);
                    if (d < best || (d == best && tr.face < best_sp.face)) {
                        best = d;
                        best_sp = {tr.face, b};
                    }
                }
            }
        }
        // A hit, or a near point no farther than the rings searched so far, is final.
        if (best == 0.0) break;
        if (best < ring * std::min(kTwoPi, 1.0) / buckets_) break;
    }
    return best_sp;
}

Vec2 param_coordinates(const TriMesh& mesh, const TubeParameterization& param, const SurfacePoint& p) {
    const auto& fc = mesh.face(p.face);
    const double th0 = param.theta[static_cast<std::size_t>(fc[0])];
    double th = 0.0, t = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto v = static_cast<std::size_t>(fc[k]);
        th += p.bary[k] * std::remainder(param.theta[v] - th0, kTwoPi);
        t += p.bary[k] * param.t[v];
    }
    return {wrap_2pi(th0 + th), t};
}

Vec3 map_point(const RegistrationMap& map, const TriMesh& src, const TubeParameterization& src_param,
               const ParamLocator& dst_locator, const TriMesh& dst, const Vec3& point) {
    const Vec2 st = param_coordinates(src, src_param, closest_surface_point(src, point));
    const Vec2 dt = map.apply(st.x(), st.y());
    return surface_position(dst, dst_locator.locate(dt.x(), dt.y()));
}

nlohmann::json registration_header(const RegistrationMap& map) {
    double mu = 0.0, mv = 0.0;
    for (std::size_t n = 0; n < map.grid.size(); ++n) {
        mu = std::max(mu, std::abs(map.d_theta[n]));
        mv = std::max(mv, std::abs(map.d_t[n]));
    }
    return {{"n_theta", map.grid.n_theta},
            {"n_t", map.grid.n_t},
            {"units", "grid cells"},
            {"layout", "float64 little-endian, d_theta[n_t][n_theta] then d_t[n_t][n_theta]"},
            {"max_abs_d_theta", mu},
            {"max_abs_d_t", mv},
            {"min_jacobian", map.min_jacobian()}};
}

std::vector<char> registration_grid_bytes(const RegistrationMap& map) {
    std::vector<char> out(2 * map.grid.size() * sizeof(double));
    static_assert(std::endian::native == std::endian::little, "grid export assumes a little-endian host");
    std::memcpy(out.data(), map.d_theta.data(), map.grid.size() * sizeof(double));
    std::memcpy(out.data() + map.grid.size() * sizeof(double), map.d_t.data(), map.grid.size() * sizeof(double));
    return out;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
    std::string out = "iter,energy,data_term,smooth_term,step\n";
    char buf[160];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.energy, r.data, r.smooth, r.step);
        out += buf;
    }
    return out;
}

} // namespace spectube
