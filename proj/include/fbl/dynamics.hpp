#pragma once

// Closed forms for the return map and everything derived from it.
//
//   T(h,z)   = (mF, -(2n+2) sqrt(2F) - z)                     on R_n
//   tau(h,z) = (2n+1) sqrt(2F) + sqrt(2h/m) - 2(m-1) z        on R_n
//   I(h,z)   = (mF, z),  T^{-1} = I o T o I
//
// with F = 1 - h/m + alpha z^2 and alpha = 1 - 3m + 2m^2.  The region index
// n (the number of floor bumps before the next return) has no closed-form
// inequality; it is read off the event simulator, which doubles as the
// physical oracle for T and tau themselves.

#include <optional>

#include "fbl/event_sim.hpp"

namespace fbl {

struct Region {
    int n = 0;
    bool ambiguous = false;  // candidates {n, n+1}: the r_n singularity band
};

inline Region region_of(SectionPoint p, const MassParam& mp,
                        double eps_boundary = defaults::eps_boundary) {
    const ReturnResult r = poincare_return(p, mp, eps_boundary);
    return {r.bumps, r.ambiguous};
}

// --- branch-pinned closed forms (n fixed by the caller) ---

inline SectionPoint return_map(SectionPoint p, const MassParam& mp, int n) {
    const double f = bump_energy(p, mp);
    return {mp.m * f, -(2.0 * n + 2.0) * std::sqrt(2.0 * f) - p.z};
}

inline double return_time(SectionPoint p, const MassParam& mp, int n) {
    const double f = bump_energy(p, mp);
    return (2.0 * n + 1.0) * std::sqrt(2.0 * f) + std::sqrt(2.0 * p.h / mp.m)
         - 2.0 * (mp.m - 1.0) * p.z;
}

inline Mat2 jacobian(SectionPoint p, const MassParam& mp, int n) {
    const double f = bump_energy(p, mp);
    const double sf = std::sqrt(f);
    return {-1.0,
            2.0 * mp.m * mp.alpha * p.z,
            std::sqrt(2.0) * (n + 1.0) / (mp.m * sf),
            -1.0 - (2.0 * n + 2.0) * std::sqrt(2.0) * mp.alpha * p.z / sf};
}

// dT/dm holding (h, z) and the branch fixed
inline Vec2 map_dm(SectionPoint p, const MassParam& mp, int n) {
    const double f = bump_energy(p, mp);
    return {1.0 + p.z * p.z * (1.0 - 6.0 * mp.m + 6.0 * mp.m * mp.m),
            -(2.0 * n + 2.0) / std::sqrt(2.0 * f)
                * (p.h / sq(mp.m) + p.z * p.z * (4.0 * mp.m - 3.0))};
}

struct TauGradient {
    double dh = 0.0;
    double dz = 0.0;
    double dm = 0.0;
};

inline TauGradient tau_gradient(SectionPoint p, const MassParam& mp, int n) {
    if (!(p.h > 0.0)) throw invalid_state("tau_gradient: h must be positive");
    const double f = bump_energy(p, mp);
    const double s2f = std::sqrt(2.0 * f);
    TauGradient g;
    g.dh = 1.0 / std::sqrt(2.0 * mp.m * p.h) - (2.0 * n + 1.0) / (mp.m * s2f);
    g.dz = 2.0 * (1.0 - mp.m) + (2.0 * n + 1.0) * 2.0 * mp.alpha * p.z / s2f;
    g.dm = (2.0 * n + 1.0) / s2f * (p.h / sq(mp.m) + (4.0 * mp.m - 3.0) * p.z * p.z)
         - std::sqrt(p.h / (2.0 * mp.m * mp.m * mp.m)) - 2.0 * p.z;
    return g;
}

// --- region-resolving wrappers ---

struct MapImage {
    SectionPoint image;                 // branch region.n
    Region region;
    std::optional<SectionPoint> alt;    // branch region.n + 1, set when ambiguous
};

inline MapImage return_map(SectionPoint p, const MassParam& mp) {
    const Region r = region_of(p, mp);
    MapImage out{return_map(p, mp, r.n), r, std::nullopt};
    if (r.ambiguous) out.alt = return_map(p, mp, r.n + 1);
    return out;
}

struct TimeValue {
    double value = 0.0;
    Region region;
    std::optional<double> alt;
};

inline TimeValue return_time(SectionPoint p, const MassParam& mp) {
    const Region r = region_of(p, mp);
    TimeValue out{return_time(p, mp, r.n), r, std::nullopt};
    if (r.ambiguous) out.alt = return_time(p, mp, r.n + 1);
    return out;
}

// --- involution and inverse ---

inline SectionPoint involution(SectionPoint p, const MassParam& mp) {
    return {mp.m * bump_energy(p, mp), p.z};
}

// T^{-1} = I o T o I; the inner branch is the region of I(p)
inline SectionPoint inverse_map(SectionPoint p, const MassParam& mp, int branch) {
    return involution(return_map(involution(p, mp), mp, branch), mp);
}

inline MapImage inverse_map(SectionPoint p, const MassParam& mp) {
    const SectionPoint ip = involution(p, mp);
    const Region r = region_of(ip, mp);
    MapImage out{involution(return_map(ip, mp, r.n), mp), r, std::nullopt};
    if (r.ambiguous) out.alt = involution(return_map(ip, mp, r.n + 1), mp);
    return out;
}

// --- fixed points F_n and their flow periods ---

// solves T(h,z) = (h,z) on branch n; not every candidate is physical
inline SectionPoint fixed_point_candidate(int n, const MassParam& mp) {
    const double d = 1.0 - mp.alpha * sq(n + 1.0);
    if (!(d > 0.0)) throw domain_error("fixed_point: degenerate denominator");
    return {mp.m / (2.0 * d), -(n + 1.0) / std::sqrt(d)};
}

struct FixedPoint {
    SectionPoint point;
    bool physical = false;  // lies in the phase space with the right bump count
};

inline FixedPoint fixed_point(int n, const MassParam& mp) {
    const SectionPoint p = fixed_point_candidate(n, mp);
    FixedPoint out{p, false};
    if (in_phase_space(p, mp)) {
        const Region r = region_of(p, mp);
        out.physical = !r.ambiguous && r.n == n;
    }
    return out;
}

// tau(F_n) = 2m(n+1) / sqrt(1 - alpha (n+1)^2)
inline double fixed_point_period(int n, const MassParam& mp) {
    const double d = 1.0 - mp.alpha * sq(n + 1.0);
    if (!(d > 0.0)) throw domain_error("fixed_point_period: degenerate denominator");
    return 2.0 * mp.m * (n + 1.0) / std::sqrt(d);
}

// d/dm of tau(F_0(m), m) along the fixed-point branch
inline double fixed_point0_period_dm(const MassParam& mp) {
    const double u = 3.0 * mp.m - 2.0 * mp.m * mp.m;
    return 3.0 * mp.m / (u * std::sqrt(u));
}

// --- endpoints of the singularity curves ---

// r_n runs increasing from r_left to r_right; its image under the involution
// I(r_n) runs decreasing from ir_top to ir_bottom.  I maps r_left to
// ir_bottom and r_right to ir_top (same z, h replaced by mF).
struct CornerPoints {
    SectionPoint r_left;
    SectionPoint r_right;
    SectionPoint ir_top;
    SectionPoint ir_bottom;
};

inline CornerPoints corner_points(int n, const MassParam& mp) {
    const double m = mp.m;
    const double den_left = 2.0 * (1.0 - m) * n * (n + 2.0) + 2.0;
    const double den_right = 2.0 * sq(n + 2.0) - 2.0 * m * (n + 1.0) * (n + 3.0);
    const double rad_left = 1.0 - (m - 1.0) * n * (n + 2.0);
    const double rad_right = sq(n + 2.0) - m * (n + 1.0) * (n + 3.0);
    if (!(den_left > 0.0 && den_right > 0.0 && rad_left > 0.0 && rad_right > 0.0))
        throw domain_error("corner_points: degenerate denominator");
    CornerPoints c;
    c.r_left = {m * sq(-2.0 * m * (n + 2.0) + 2.0 * n + 3.0) / den_left,
                -(n + 2.0) / std::sqrt(rad_left)};
    c.r_right = {m * sq(3.0 + 2.0 * n - 2.0 * m * (n + 1.0)) / den_right,
                 -(n + 1.0) / std::sqrt(rad_right)};
    c.ir_top = {m / den_right, c.r_right.z};
    c.ir_bottom = {m / den_left, c.r_left.z};
    return c;
}

// z-coordinate of T^{-1}(r_right of r_1), through the branch-0 inverse;
// equals the closed form 8(m-1)/sqrt(9-8m)
inline double inverse_image_r1_right_z(const MassParam& mp) {
    return 8.0 * (mp.m - 1.0) / std::sqrt(9.0 - 8.0 * mp.m);
}

}  // namespace fbl
