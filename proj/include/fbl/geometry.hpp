#pragma once

// Geometry of the full-shift subsystems: the parameter intervals on which
// {k-1, k}^Z is realised, the corner-point inequalities behind them, traced
// singularity polylines, and the shape census of the sets R_i n T(R_j).

#include <utility>
#include <vector>

#include "fbl/symbolic.hpp"

namespace fbl {

// m-interval on which the full shift over {k-1, k} exists:
// ((1+k)/(2+k), (2k^2+2k-1)/(2k^2+2k)); consecutive intervals overlap.
inline std::pair<double, double> full_shift_interval(int k) {
    if (k < 1) throw domain_error("full_shift_interval: k must be >= 1");
    const double kk = k;
    return {(1.0 + kk) / (2.0 + kk),
            (2.0 * kk * kk + 2.0 * kk - 1.0) / (2.0 * kk * kk + 2.0 * kk)};
}

struct QuadrangularCheck {
    bool holds = false;
    double margin_lo = 0.0;  // r_k left endpoint vs I(r_k) right endpoint (h)
    double margin_hi = 0.0;  // crossing condition at the interval's right end (z)
    bool boundary = false;   // within 1e-9 of an endpoint: near-tangent crossing
};

// Margins of the two crossing conditions defining full_shift_interval(k).
// margin_lo >= 0 iff Bxh_k <= Ibxh_k (vanishes at the left endpoint);
// margin_hi >= 0 vanishes at the right endpoint.  For k = 1 the second
// condition compares the branch-0 inverse image of r_1's right endpoint
// against the top corner of T(R_1); for k >= 2 it compares z-coordinates of
// the r_{k-2} and I(r_k) left/top endpoints.
inline QuadrangularCheck verify_quadrangular(int k, const MassParam& mp) {
    if (k < 1) throw domain_error("verify_quadrangular: k must be >= 1");
    const CornerPoints ck = corner_points(k, mp);
    QuadrangularCheck out;
    out.margin_lo = ck.ir_bottom.h - ck.r_left.h;
    if (k == 1) {
        out.margin_hi = ck.ir_top.z - inverse_image_r1_right_z(mp);
    } else {
        const CornerPoints ck2 = corner_points(k - 2, mp);
        out.margin_hi = ck.ir_top.z - ck2.r_left.z;
    }
    out.holds = out.margin_lo >= 0.0 && out.margin_hi >= 0.0;
    out.boundary = std::fabs(out.margin_lo) < 1e-9 || std::fabs(out.margin_hi) < 1e-9;
    return out;
}

// ---------------------------------------------------------------------------
// singularity tracing

struct SingularityPolyline {
    int n = 0;
    std::vector<SectionPoint> vertices;
};

namespace detail {

// region index treating points outside the phase space or in the ambiguity
// band as -1 / -2 markers
inline int region_code(SectionPoint p, const MassParam& mp, double eps_b) {
    if (!in_phase_space(p, mp)) return -1;
    const Region r = region_of(p, mp, eps_b);
    return r.ambiguous ? -2 : r.n;
}

}  // namespace detail

// Trace r_n = boundary between R_n and R_{n+1} by bisection along straight
// transversals of the chord between the closed-form endpoints.  Hitting the
// ambiguity band counts as landing on the curve.
inline SingularityPolyline trace_singularity(int n, const MassParam& mp, int samples,
                                             double eps_boundary = defaults::eps_boundary,
                                             double tol = defaults::bisect_tol) {
    if (samples < 2) throw domain_error("trace_singularity: need at least 2 samples");
    const CornerPoints c = corner_points(n, mp);
    const Vec2 a{c.r_left.h, c.r_left.z};
    const Vec2 b{c.r_right.h, c.r_right.z};
    const Vec2 chord = b - a;
    // a decreasing transversal direction crosses the increasing curve once
    const Vec2 dir = normalized(Vec2{chord.y, -chord.x});

    SingularityPolyline out;
    out.n = n;
    out.vertices.reserve(static_cast<std::size_t>(samples));
    const double s_edge = 1e-7;  // keeps the end vertices near the corners

    for (int i = 0; i < samples; ++i) {
        double s = static_cast<double>(i) / (samples - 1);
        s = s_edge + s * (1.0 - 2.0 * s_edge);
        const Vec2 c0 = a + s * chord;
        // bracket the curve: expand symmetric offsets until the two sides
        // classify as R_n and R_{n+1}
        double span = 1e-9;
        double t_lo = 0.0, t_hi = 0.0;
        bool have_lo = false, have_hi = false;
        for (; span < 1.0; span *= 2.0) {
            for (double tt : {span, -span}) {
                const Vec2 q = c0 + tt * dir;
                const int code = detail::region_code({q.x, q.y}, mp, eps_boundary);
                if (code == n && !have_lo) { t_lo = tt; have_lo = true; }
                if (code == n + 1 && !have_hi) { t_hi = tt; have_hi = true; }
            }
            if (have_lo && have_hi) break;
        }
        if (!(have_lo && have_hi)) continue;  // transversal missed; skip vertex
        // bisection; an ambiguous classification is already on the curve
        while (std::fabs(t_hi - t_lo) > tol) {
            const double tm = 0.5 * (t_lo + t_hi);
            const Vec2 q = c0 + tm * dir;
            const int code = detail::region_code({q.x, q.y}, mp, eps_boundary);
            if (code == -2) { t_lo = t_hi = tm; break; }
            if (code == n) t_lo = tm;
            else if (code == n + 1) t_hi = tm;
            else break;  // fell out of the wedge; keep the bracket midpoint
        }
        const Vec2 v = c0 + 0.5 * (t_lo + t_hi) * dir;
        out.vertices.push_back({v.x, v.y});
    }
    if (out.vertices.empty())
        throw solver_error("trace_singularity: no transversal produced a bracket");
    return out;
}

inline SingularityPolyline involution_image(const SingularityPolyline& line,
                                            const MassParam& mp) {
    SingularityPolyline out;
    out.n = line.n;
    out.vertices.reserve(line.vertices.size());
    for (const SectionPoint& p : line.vertices) out.vertices.push_back(involution(p, mp));
    return out;
}

// ---------------------------------------------------------------------------
// shape census of R_i n T(R_j), i,j in {0,1}

enum class ShapeKind { triangular, quadrangular, pentagonal, other };

inline const char* to_string(ShapeKind s) {
    switch (s) {
        case ShapeKind::triangular: return "triangular";
        case ShapeKind::quadrangular: return "quadrangular";
        case ShapeKind::pentagonal: return "pentagonal";
        default: return "other";
    }
}

struct ShapeReport {
    ShapeKind by_threshold = ShapeKind::other;
    int arc_count = 0;      // boundary arcs counted on a grid
    bool agree = false;     // arc census matches the threshold class
    bool near_threshold = false;  // m within 1e-9 of 7/12 or 2/3
};

namespace detail {

// boundary-arc type when stepping out of the set:
// 1 region flips, 2 image-region flips, 3/4 phase-space inequality 2/3 fails
inline int escape_type(SectionPoint q, const MassParam& mp, int i, int j) {
    if (!(q.h > 0.0 && q.h < 0.5)) return 3;
    if (!upper_ball_above_floor(q, mp)) return 3;
    if (!collision_before_floor_return(q, mp)) return 4;
    const Region r = region_of(q, mp);
    if (r.n != i) return 1;
    const SectionPoint iq = involution(q, mp);  // q in T(R_j) iff I(q) in R_j
    if (!in_phase_space(iq, mp)) return 2;
    if (region_of(iq, mp).n != j) return 2;
    return 0;
}

inline bool in_intersection(SectionPoint q, const MassParam& mp, int i, int j) {
    if (!in_phase_space(q, mp)) return false;
    if (region_of(q, mp).n != i) return false;
    const SectionPoint iq = involution(q, mp);
    return in_phase_space(iq, mp) && region_of(iq, mp).n == j;
}

}  // namespace detail

// Count the boundary arcs of R_i n T(R_j) on a grid: collect boundary cells,
// label each by which constraint fails just outside, order them by angle
// around the set's centroid and count maximal same-label runs.
inline int count_boundary_arcs(int i, int j, const MassParam& mp, int grid = 150) {
    const double zlo = sample_z_floor(mp);
    std::vector<unsigned char> inside(static_cast<std::size_t>(grid) * grid, 0);
    const auto at = [&](int a, int b) -> unsigned char& {
        return inside[static_cast<std::size_t>(a) * grid + b];
    };
    const auto hs = [&](int a) { return 1e-5 + (0.5 - 2e-5) * a / (grid - 1); };
    const auto zs = [&](int b) { return zlo + (-1e-5 - zlo) * b / (grid - 1); };
    for (int a = 0; a < grid; ++a)
        for (int b = 0; b < grid; ++b)
            at(a, b) = detail::in_intersection({hs(a), zs(b)}, mp, i, j) ? 1 : 0;

    struct BoundarySample { double h, z; int type; };
    std::vector<BoundarySample> bnd;
    constexpr int dio[4] = {1, -1, 0, 0};
    constexpr int djo[4] = {0, 0, 1, -1};
    for (int a = 0; a < grid; ++a) {
        for (int b = 0; b < grid; ++b) {
            if (!at(a, b)) continue;
            for (int d = 0; d < 4; ++d) {
                const int a2 = a + dio[d], b2 = b + djo[d];
                int type = 3;  // falling off the grid = phase-space boundary
                if (a2 >= 0 && a2 < grid && b2 >= 0 && b2 < grid) {
                    if (at(a2, b2)) continue;
                    type = detail::escape_type({hs(a2), zs(b2)}, mp, i, j);
                    if (type == 0) continue;  // rounding at a corner cell
                }
                bnd.push_back({hs(a), zs(b), type});
                break;
            }
        }
    }
    if (bnd.empty()) return 0;

    double ch = 0.0, cz = 0.0;
    for (const auto& p : bnd) { ch += p.h; cz += p.z; }
    ch /= bnd.size();
    cz /= bnd.size();
    double sh = 0.0, szz = 0.0;
    for (const auto& p : bnd) { sh += sq(p.h - ch); szz += sq(p.z - cz); }
    sh = std::sqrt(sh / bnd.size()) + 1e-12;
    szz = std::sqrt(szz / bnd.size()) + 1e-12;
    std::sort(bnd.begin(), bnd.end(), [&](const auto& p, const auto& q) {
        return std::atan2((p.z - cz) / szz, (p.h - ch) / sh)
             < std::atan2((q.z - cz) / szz, (q.h - ch) / sh);
    });

    // run-length census with pruning of sampling noise
    std::vector<std::pair<int, int>> runs;
    for (const auto& p : bnd) {
        if (!runs.empty() && runs.back().first == p.type) ++runs.back().second;
        else runs.push_back({p.type, 1});
    }
    const auto merge_wrap = [&]() {
        if (runs.size() > 1 && runs.front().first == runs.back().first) {
            runs.front().second += runs.back().second;
            runs.pop_back();
        }
    };
    merge_wrap();
    std::vector<std::pair<int, int>> pruned;
    for (const auto& r : runs) {
        if (r.second < 4) continue;  // fewer than 4 cells: sampling noise
        if (!pruned.empty() && pruned.back().first == r.first) pruned.back().second += r.second;
        else pruned.push_back(r);
    }
    runs = std::move(pruned);
    merge_wrap();
    return static_cast<int>(runs.size());
}

// Primary classification by the parameter thresholds (R_0 n T(R_0) is
// quadrangular for every m), cross-checked by the independent arc census.
inline ShapeReport classify_intersection_shape(int i, int j, const MassParam& mp,
                                               int grid = 150) {
    if ((i != 0 && i != 1) || (j != 0 && j != 1))
        throw domain_error("classify_intersection_shape: indices must be 0 or 1");
    ShapeReport out;
    const double m = mp.m;
    out.near_threshold = std::fabs(m - 7.0 / 12.0) < 1e-9 || std::fabs(m - 2.0 / 3.0) < 1e-9;
    if (i == 0 && j == 0) {
        out.by_threshold = ShapeKind::quadrangular;
    } else if (m <= 7.0 / 12.0) {
        out.by_threshold = ShapeKind::triangular;
    } else if (m < 2.0 / 3.0) {
        out.by_threshold = ShapeKind::pentagonal;
    } else {
        out.by_threshold = ShapeKind::quadrangular;
    }
    out.arc_count = count_boundary_arcs(i, j, mp, grid);
    const int expect = out.by_threshold == ShapeKind::triangular ? 3
                     : out.by_threshold == ShapeKind::quadrangular ? 4 : 5;
    out.agree = out.arc_count == expect;
    return out;
}

}  // namespace fbl
