#pragma once

// Periodic orbits with prescribed itineraries.
//
// Orbits are found by multi-point shooting: Newton on the coupled system
// { T(x_i) - x_{i+1} = 0, i mod K } with the analytic Jacobian in a
// block-cyclic linear solve.  Single shooting is useless here: the k-fold
// map's unstable multiplier grows like |lambda|^K and swamps binary64 long
// before the orbits of interest, while the cyclic system keeps every entry
// at single-step magnitude.  The same structure yields the m-derivative of
// the orbit by implicit differentiation, evaluated in the per-step
// stable/unstable eigenbasis so no full-period product is ever formed.

#include <cstdint>
#include <vector>

#include "fbl/symbolic.hpp"

namespace fbl {

struct PeriodicOrbit {
    std::vector<SectionPoint> points;  // length = discrete period K
    Itinerary itinerary;               // periodic, offset aligned to points[0]
    double m = 0.0;
    double flow_period = 0.0;          // Birkhoff sum of tau over the cycle
    double lambda_total = 0.0;         // expanding multiplier of DT^K
    double mu_total = 0.0;             // contracting multiplier
    double residual = 0.0;             // max |T(x_i) - x_{i+1}|
    int newton_iterations = 0;
};

struct OrbitOptions {
    double tol = defaults::newton_tol;
    double min_step = defaults::newton_min_step;
    int max_iterations = 60;
    int max_period = 200;
    bool verify_itinerary = true;
};

namespace detail {

inline std::vector<int> unroll_word(const Itinerary& itin) {
    if (!itin.periodic) throw domain_error("find_orbit: itinerary must be periodic");
    const int K = static_cast<int>(itin.symbols.size());
    std::vector<int> w(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) w[static_cast<std::size_t>(i)] = itin.at(i);
    return w;
}

inline double shooting_residual(const std::vector<SectionPoint>& pts,
                                const std::vector<int>& word, const MassParam& mp,
                                std::vector<double>& r) {
    const int K = static_cast<int>(word.size());
    double worst = 0.0;
    for (int i = 0; i < K; ++i) {
        const SectionPoint img = return_map(pts[static_cast<std::size_t>(i)], mp,
                                            word[static_cast<std::size_t>(i)]);
        const SectionPoint& nxt = pts[static_cast<std::size_t>((i + 1) % K)];
        r[static_cast<std::size_t>(2 * i)] = img.h - nxt.h;
        r[static_cast<std::size_t>(2 * i + 1)] = img.z - nxt.z;
        worst = std::max(worst, std::max(std::fabs(img.h - nxt.h), std::fabs(img.z - nxt.z)));
    }
    return worst;
}

// assemble the block-cyclic matrix; blocks accumulate so the K = 1 case
// (where the DT block and the -I block coincide) comes out as DT - I
inline void assemble_cyclic(const std::vector<SectionPoint>& pts,
                            const std::vector<int>& word, const MassParam& mp,
                            std::vector<double>& a) {
    const int K = static_cast<int>(word.size());
    const int n = 2 * K;
    std::fill(a.begin(), a.end(), 0.0);
    for (int i = 0; i < K; ++i) {
        const Mat2 J = jacobian(pts[static_cast<std::size_t>(i)], mp,
                                word[static_cast<std::size_t>(i)]);
        const int r = 2 * i;
        const int c = 2 * ((i + 1) % K);
        a[static_cast<std::size_t>(r) * n + r] += J.a11;
        a[static_cast<std::size_t>(r) * n + r + 1] += J.a12;
        a[static_cast<std::size_t>(r + 1) * n + r] += J.a21;
        a[static_cast<std::size_t>(r + 1) * n + r + 1] += J.a22;
        a[static_cast<std::size_t>(r) * n + c] += -1.0;
        a[static_cast<std::size_t>(r + 1) * n + c + 1] += -1.0;
    }
}

// solve the cyclic system with right-hand side rhs (overwritten)
inline void cyclic_solve(const std::vector<SectionPoint>& pts,
                         const std::vector<int>& word, const MassParam& mp,
                         std::vector<double>& rhs) {
    const int n = 2 * static_cast<int>(word.size());
    std::vector<double> a(static_cast<std::size_t>(n) * n);
    assemble_cyclic(pts, word, mp, a);
    solve_dense(a, rhs, n);
}

}  // namespace detail

// per-step invariant direction fields and expansion/contraction factors
struct OrbitEigenSystem {
    std::vector<Vec2> unstable;   // unit, canonical orientation dh > 0 (so dz < 0)
    std::vector<Vec2> stable;     // unit, dh > 0 and dz > 0
    std::vector<double> lambda;   // DT u(i) = lambda_i u(i+1), all < -1
    std::vector<double> mu;       // DT s(i) = mu_i s(i+1), all in (-1, 0)
    double log_abs_lambda_total = 0.0;
    double log_abs_mu_total = 0.0;
    bool conditioning_warning = false;  // |trace DT^K| close to 2
};

struct Multipliers {
    double lambda_total = 0.0;
    double mu_total = 0.0;
    OrbitEigenSystem steps;
};

namespace detail {

inline Vec2 canonical(Vec2 v) { return v.x < 0.0 ? Vec2{-v.x, -v.y} : v; }

}  // namespace detail

// Direction fields by power iteration around the cycle (forward for the
// unstable field, backward through the adjugate for the stable one).  The
// per-cycle direction error contracts like (mu/lambda)^K, so a fixed burn-in
// reaches machine precision for any period.
inline OrbitEigenSystem orbit_eigen_system(const std::vector<SectionPoint>& pts,
                                           const std::vector<int>& word,
                                           const MassParam& mp) {
    const int K = static_cast<int>(word.size());
    std::vector<Mat2> J(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i)
        J[static_cast<std::size_t>(i)] = jacobian(pts[static_cast<std::size_t>(i)], mp,
                                                  word[static_cast<std::size_t>(i)]);
    const int burn = std::max(4 * K, 64);

    OrbitEigenSystem out;
    out.unstable.resize(static_cast<std::size_t>(K));
    out.stable.resize(static_cast<std::size_t>(K));
    out.lambda.resize(static_cast<std::size_t>(K));
    out.mu.resize(static_cast<std::size_t>(K));

    Vec2 v{1.0, -1.0};
    int idx = 0;
    for (int t = 0; t < burn; ++t) {
        v = normalized(J[static_cast<std::size_t>(idx)] * v);
        idx = (idx + 1) % K;
    }
    while (idx != 0) {  // finish the cycle so v sits at index 0
        v = normalized(J[static_cast<std::size_t>(idx)] * v);
        idx = (idx + 1) % K;
    }
    out.unstable[0] = detail::canonical(v);
    for (int i = 0; i + 1 < K; ++i)
        out.unstable[static_cast<std::size_t>(i + 1)] = detail::canonical(
            normalized(J[static_cast<std::size_t>(i)] * out.unstable[static_cast<std::size_t>(i)]));

    v = Vec2{1.0, 1.0};
    idx = 0;
    for (int t = 0; t < burn; ++t) {
        idx = (idx - 1 + K) % K;
        v = normalized(J[static_cast<std::size_t>(idx)].inverse_unit_det() * v);
    }
    while (idx != 0) {
        idx = (idx - 1 + K) % K;
        v = normalized(J[static_cast<std::size_t>(idx)].inverse_unit_det() * v);
    }
    out.stable[0] = detail::canonical(v);
    for (int i = K - 1; i > 0; --i)
        out.stable[static_cast<std::size_t>(i)] = detail::canonical(
            normalized(J[static_cast<std::size_t>(i)].inverse_unit_det()
                       * out.stable[static_cast<std::size_t>((i + 1) % K)]));

    for (int i = 0; i < K; ++i) {
        const int nxt = (i + 1) % K;
        const Vec2 wu = J[static_cast<std::size_t>(i)] * out.unstable[static_cast<std::size_t>(i)];
        out.lambda[static_cast<std::size_t>(i)] = dot(wu, out.unstable[static_cast<std::size_t>(nxt)]);
        const Vec2 ws = J[static_cast<std::size_t>(i)] * out.stable[static_cast<std::size_t>(i)];
        out.mu[static_cast<std::size_t>(i)] = dot(ws, out.stable[static_cast<std::size_t>(nxt)]);
        out.log_abs_lambda_total += std::log(std::fabs(out.lambda[static_cast<std::size_t>(i)]));
        out.log_abs_mu_total += std::log(std::fabs(out.mu[static_cast<std::size_t>(i)]));
    }
    // expanding eigenvalue dwarfs the contracting one beyond tiny periods
    out.conditioning_warning = out.log_abs_lambda_total < std::log(2.5);
    return out;
}

// Multipliers of DT^K: the ordered product is accumulated with rebalancing
// (running max-abs scale factored out) and the trace gives the expanding
// eigenvalue; the contracting one is its reciprocal since det DT^K = 1.
inline Multipliers multipliers(const PeriodicOrbit& orbit) {
    const MassParam mp(orbit.m);
    const std::vector<int> word = detail::unroll_word(orbit.itinerary);
    const int K = static_cast<int>(word.size());

    Mat2 M = Mat2::identity();
    double log_scale = 0.0;
    for (int i = 0; i < K; ++i) {
        M = jacobian(orbit.points[static_cast<std::size_t>(i)], mp,
                     word[static_cast<std::size_t>(i)]) * M;
        const double s = M.max_abs();
        M = {M.a11 / s, M.a12 / s, M.a21 / s, M.a22 / s};
        log_scale += std::log(s);
    }
    Multipliers out;
    out.steps = orbit_eigen_system(orbit.points, word, mp);
    const double tr = M.trace();
    const double log_trace = std::log(std::fabs(tr)) + log_scale;
    const int sign = tr > 0 ? 1 : -1;
    if (log_trace < std::log(1e9)) {
        // moderate trace: exact eigenvalues of the unit-determinant product
        const double t = sign * std::exp(log_trace);
        if (std::fabs(t) <= 2.0) {
            // near-parabolic (only conceivable for even periods); fall back to
            // the per-step factor products
            out.steps.conditioning_warning = true;
            const int s2 = (K % 2 == 0) ? 1 : -1;
            out.lambda_total = s2 * std::exp(out.steps.log_abs_lambda_total);
            out.mu_total = s2 * std::exp(out.steps.log_abs_mu_total);
            return out;
        }
        std::tie(out.lambda_total, out.mu_total) = eigenvalues_unit_det(t);
    } else {
        // the contracting eigenvalue is below the trace's rounding noise
        out.lambda_total = sign * std::exp(log_trace);
        out.mu_total = sign * std::exp(-log_trace);
    }
    return out;
}

// damped multi-point shooting Newton, seeded from the per-symbol fixed points
inline PeriodicOrbit find_orbit(const Itinerary& itin, const MassParam& mp,
                                const OrbitOptions& opt = {},
                                const std::vector<SectionPoint>* seed = nullptr) {
    const std::vector<int> word = detail::unroll_word(itin);
    const int K = static_cast<int>(word.size());
    if (K > opt.max_period)
        throw domain_error("find_orbit: period exceeds the configured maximum");

    std::vector<SectionPoint> pts(static_cast<std::size_t>(K));
    if (seed) {
        if (static_cast<int>(seed->size()) != K)
            throw domain_error("find_orbit: seed length mismatch");
        pts = *seed;
    } else {
        for (int i = 0; i < K; ++i)
            pts[static_cast<std::size_t>(i)] =
                fixed_point_candidate(word[static_cast<std::size_t>(i)], mp);
    }

    std::vector<double> r(static_cast<std::size_t>(2 * K));
    double rn = detail::shooting_residual(pts, word, mp, r);
    int it = 0;
    for (; it < opt.max_iterations && rn >= opt.tol; ++it) {
        std::vector<double> rhs(r);
        for (double& x : rhs) x = -x;
        detail::cyclic_solve(pts, word, mp, rhs);
        double step = 1.0;
        std::vector<SectionPoint> cand(static_cast<std::size_t>(K));
        std::vector<double> rc(static_cast<std::size_t>(2 * K));
        double rc_n = rn;
        for (int halve = 0; halve <= 20; ++halve) {
            for (int i = 0; i < K; ++i)
                cand[static_cast<std::size_t>(i)] = {
                    pts[static_cast<std::size_t>(i)].h + step * rhs[static_cast<std::size_t>(2 * i)],
                    pts[static_cast<std::size_t>(i)].z + step * rhs[static_cast<std::size_t>(2 * i + 1)]};
            try {
                rc_n = detail::shooting_residual(cand, word, mp, rc);
                if (rc_n < rn) break;
            } catch (const invalid_state&) {
                // candidate left the F > 0 domain; shorten the step
            }
            step *= 0.5;
            if (step < opt.min_step) break;
        }
        if (!(rc_n < rn)) break;  // stagnated
        pts.swap(cand);
        r.swap(rc);
        rn = rc_n;
    }
    if (rn > 1e-10)
        throw solver_error("find_orbit: Newton failed to converge (residual "
                           + std::to_string(rn) + " after "
                           + std::to_string(it) + " iterations)");

    PeriodicOrbit orbit;
    orbit.points = std::move(pts);
    orbit.itinerary = itin;  // points[i] realises position i
    orbit.m = mp.m;
    orbit.residual = rn;
    orbit.newton_iterations = it;
    for (int i = 0; i < K; ++i)
        orbit.flow_period += return_time(orbit.points[static_cast<std::size_t>(i)], mp,
                                         word[static_cast<std::size_t>(i)]);

    if (opt.verify_itinerary) {
        for (int i = 0; i < K; ++i) {
            const Region reg = region_of(orbit.points[static_cast<std::size_t>(i)], mp);
            if (reg.ambiguous || reg.n != word[static_cast<std::size_t>(i)])
                throw solver_error("find_orbit: converged to an orbit with the wrong itinerary");
        }
    }
    const Multipliers mul = multipliers(orbit);
    orbit.lambda_total = mul.lambda_total;
    orbit.mu_total = mul.mu_total;
    return orbit;
}

inline double flow_period(const PeriodicOrbit& orbit) { return orbit.flow_period; }

// ---------------------------------------------------------------------------
// implicit m-derivatives

struct OrbitDerivative {
    std::vector<Vec2> dpoints_dm;
    double dtau_dm = 0.0;  // d/dm of the flow period
};

// d/dm of every orbit point from the periodic-point identity T^K(x) = x.
// Writing the i-th term of the textbook inverse-matrix sum in the per-step
// eigenbasis turns the exploding products into two geometric-decay products:
//   a_i = c_i * prod_{j>i} mu_j / (1 - prod mu)
//   b_i = -d_i / prod_{j<=i} lambda_j / (1 - prod mu)
// where (c_i, d_i) are the stable/unstable coordinates of dT/dm at step i+1.
inline OrbitDerivative orbit_dm(const PeriodicOrbit& orbit) {
    const MassParam mp(orbit.m);
    const std::vector<int> word = detail::unroll_word(orbit.itinerary);
    const int K = static_cast<int>(word.size());
    const OrbitEigenSystem es = orbit_eigen_system(orbit.points, word, mp);

    const double prod_mu = (std::fabs(orbit.mu_total) < 1.0) ? orbit.mu_total
                                                             : 1.0 / orbit.lambda_total;
    const double denom = 1.0 - prod_mu;
    if (std::fabs(denom) < 1e-12)
        throw solver_error("orbit_dm: eigenvalue-1 degeneracy in (I - DT^K)");

    // stable/unstable coordinates of dT/dm(x_i), attached at point i+1
    std::vector<double> c(static_cast<std::size_t>(K)), d(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        const Vec2 g = map_dm(orbit.points[static_cast<std::size_t>(i)], mp,
                              word[static_cast<std::size_t>(i)]);
        const int nxt = (i + 1) % K;
        const Vec2 s = es.stable[static_cast<std::size_t>(nxt)];
        const Vec2 u = es.unstable[static_cast<std::size_t>(nxt)];
        const double det = cross(s, u);
        c[static_cast<std::size_t>(i)] = cross(g, u) / det;
        d[static_cast<std::size_t>(i)] = cross(s, g) / det;
    }

    OrbitDerivative out;
    out.dpoints_dm.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        // suffix products of mu and of 1/lambda around the cycle from k
        double sum_a = 0.0, sum_b = 0.0;
        double pl = 1.0;
        std::vector<double> suffix_mu(static_cast<std::size_t>(K + 1), 1.0);
        for (int i = K - 1; i >= 0; --i)
            suffix_mu[static_cast<std::size_t>(i)] =
                suffix_mu[static_cast<std::size_t>(i + 1)]
                * es.mu[static_cast<std::size_t>((k + i) % K)];
        for (int i = 0; i < K; ++i) {
            const int gi = (k + i) % K;
            pl /= es.lambda[static_cast<std::size_t>(gi)];
            sum_a += c[static_cast<std::size_t>(gi)] * suffix_mu[static_cast<std::size_t>(i + 1)];
            sum_b += -d[static_cast<std::size_t>(gi)] * pl;
        }
        out.dpoints_dm[static_cast<std::size_t>(k)] =
            (sum_a / denom) * es.stable[static_cast<std::size_t>(k)]
            + (sum_b / denom) * es.unstable[static_cast<std::size_t>(k)];
    }

    for (int i = 0; i < K; ++i) {
        const TauGradient g = tau_gradient(orbit.points[static_cast<std::size_t>(i)], mp,
                                           word[static_cast<std::size_t>(i)]);
        const Vec2 w = out.dpoints_dm[static_cast<std::size_t>(i)];
        out.dtau_dm += g.dh * w.x + g.dz * w.y + g.dm;
    }
    return out;
}

// independent route for tests: the same implicit system solved directly
inline OrbitDerivative orbit_dm_linear_solve(const PeriodicOrbit& orbit) {
    const MassParam mp(orbit.m);
    const std::vector<int> word = detail::unroll_word(orbit.itinerary);
    const int K = static_cast<int>(word.size());
    std::vector<double> rhs(static_cast<std::size_t>(2 * K));
    for (int i = 0; i < K; ++i) {
        const Vec2 g = map_dm(orbit.points[static_cast<std::size_t>(i)], mp,
                              word[static_cast<std::size_t>(i)]);
        rhs[static_cast<std::size_t>(2 * i)] = -g.x;
        rhs[static_cast<std::size_t>(2 * i + 1)] = -g.y;
    }
    detail::cyclic_solve(orbit.points, word, mp, rhs);
    OrbitDerivative out;
    out.dpoints_dm.resize(static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        out.dpoints_dm[static_cast<std::size_t>(i)] = {rhs[static_cast<std::size_t>(2 * i)],
                                                       rhs[static_cast<std::size_t>(2 * i + 1)]};
        const TauGradient g = tau_gradient(orbit.points[static_cast<std::size_t>(i)], mp,
                                           word[static_cast<std::size_t>(i)]);
        out.dtau_dm += g.dh * rhs[static_cast<std::size_t>(2 * i)]
                     + g.dz * rhs[static_cast<std::size_t>(2 * i + 1)] + g.dm;
    }
    return out;
}

// ---------------------------------------------------------------------------
// event-sim replay: per-step simulation against the converged orbit

struct ReplayReport {
    double cumulative_point_dev = 0.0;
    double time_dev = 0.0;
    bool bumps_match = true;
};

inline ReplayReport replay_in_simulator(const PeriodicOrbit& orbit) {
    const MassParam mp(orbit.m);
    const int K = static_cast<int>(orbit.points.size());
    ReplayReport rep;
    double sim_time = 0.0;
    for (int i = 0; i < K; ++i) {
        const ReturnResult r = poincare_return(orbit.points[static_cast<std::size_t>(i)], mp);
        const SectionPoint& nxt = orbit.points[static_cast<std::size_t>((i + 1) % K)];
        rep.cumulative_point_dev += std::hypot(r.point.h - nxt.h, r.point.z - nxt.z);
        sim_time += r.time;
        rep.bumps_match = rep.bumps_match && r.bumps == orbit.itinerary.at(i);
    }
    rep.time_dev = std::fabs(sim_time - orbit.flow_period);
    return rep;
}

}  // namespace fbl
