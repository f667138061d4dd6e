#pragma once

// Phase space of the two-falling-balls Poincare section.
//
// Two point masses move on the vertical half-line under unit gravity and
// collide elastically with each other and with the floor.  Masses are
// rescaled to m (lower) and 1-m (upper) with m in (1/2, 1), total energy is
// normalized to 1/2.  Section coordinates: h = energy of the lower ball,
// z = velocity difference v2 - v1, taken at outgoing floor hits whose next
// collision is ball-ball.

#include <random>

#include "fbl/common.hpp"

namespace fbl {

struct SectionPoint {
    double h = 0.0;
    double z = 0.0;
};

// mass ratio of the lower ball, restricted to the ergodic regime
struct MassParam {
    double m;
    double alpha;  // 1 - 3m + 2m^2, always <= 0 here

    explicit MassParam(double mass) : m(mass), alpha(1.0 - 3.0 * mass + 2.0 * mass * mass) {
        if (!(mass > 0.5 && mass < 1.0))
            throw domain_error("mass parameter must lie in (1/2, 1)");
    }
};

inline double alpha_of(double m) { return 1.0 - 3.0 * m + 2.0 * m * m; }

// floor speed of the lower ball at the section: v1 = sqrt(2h/m)
inline double floor_speed(SectionPoint p, const MassParam& mp) {
    return std::sqrt(2.0 * p.h / mp.m);
}

// F = 1 - h/m + alpha z^2.  The lower ball's per-unit-mass kinetic energy in
// the bump phase is F; the image point has energy mF.
inline double bump_energy(SectionPoint p, const MassParam& mp) {
    const double f = 1.0 - p.h / mp.m + mp.alpha * p.z * p.z;
    if (!(f > 0.0))
        throw invalid_state("bump energy F <= 0: point outside the section domain");
    return f;
}

// the three defining inequalities, all strict:
//   1. 0 < h < 1/2                       (lower-ball energy positive, below total)
//   2. 1/2 - h > (1-m)(z + v1)^2 / 2     (upper ball strictly above the floor)
//   3. m(1-m) z (2 v1 - z) - 2h + m < 0  (balls collide before the floor return)
inline bool in_phase_space(SectionPoint p, const MassParam& mp) {
    if (!(p.h > 0.0 && p.h < 0.5)) return false;
    const double v1 = std::sqrt(2.0 * p.h / mp.m);
    if (!(0.5 - p.h > 0.5 * (1.0 - mp.m) * sq(p.z + v1))) return false;
    return mp.m * (1.0 - mp.m) * p.z * (2.0 * v1 - p.z) - 2.0 * p.h + mp.m < 0.0;
}

// individual inequality margins, used by the geometry module to label which
// boundary curve an escaping point crossed
inline bool upper_ball_above_floor(SectionPoint p, const MassParam& mp) {
    const double v1 = std::sqrt(2.0 * p.h / mp.m);
    return 0.5 - p.h > 0.5 * (1.0 - mp.m) * sq(p.z + v1);
}

inline bool collision_before_floor_return(SectionPoint p, const MassParam& mp) {
    const double v1 = std::sqrt(2.0 * p.h / mp.m);
    return mp.m * (1.0 - mp.m) * p.z * (2.0 * v1 - p.z) - 2.0 * p.h + mp.m < 0.0;
}

// Tangent-space cones.  DT's eigenvector computation puts the expanding
// direction among the decreasing vectors (dh*dz < 0) and the contracting one
// among the increasing vectors, matching the monotonicity of unstable and
// stable curves.
using TangentVector = Vec2;

inline bool in_unstable_cone(TangentVector v) { return v.x * v.y < 0.0; }
inline bool in_stable_cone(TangentVector v) { return v.x * v.y > 0.0; }

// bounding box used for rejection sampling; z range follows from inequality 2
inline double sample_z_floor(const MassParam& mp) {
    return -(std::sqrt(1.0 / mp.m) + std::sqrt(1.0 / (1.0 - mp.m)));
}

template <typename Rng>
SectionPoint sample_phase_space(const MassParam& mp, Rng& rng) {
    std::uniform_real_distribution<double> uh(0.0, 0.5);
    std::uniform_real_distribution<double> uz(sample_z_floor(mp), 0.0);
    for (int tries = 0; tries < 1000000; ++tries) {
        const SectionPoint p{uh(rng), uz(rng)};
        if (in_phase_space(p, mp)) return p;
    }
    throw internal_error("rejection sampling failed to hit the phase space");
}

}  // namespace fbl
