#pragma once

// Quantitative diagnostics: period-ratio limits and their m-derivatives, the
// convergence of the shadowing family's ratios, continued-fraction reports,
// Lyapunov exponents, cone/angle contraction and the dynamical Holder
// continuity of invariant directions, plus a qualitative flow-correlation
// estimator on the suspension.

#include <functional>
#include <limits>
#include <random>

#include "fbl/geometry.hpp"
#include "fbl/orbit.hpp"

namespace fbl {

// ---------------------------------------------------------------------------
// period-ratio limits

// tau(F_1)/tau(F_0) = sqrt(3m - 2m^2) / sqrt(-3/4 + 3m - 2m^2)
inline double ratio_limit(const MassParam& mp) {
    const double u = 3.0 * mp.m - 2.0 * mp.m * mp.m;
    return std::sqrt(u) / std::sqrt(u - 0.75);
}

// tau(F_k)/tau(F_{k-1}) = (k+1) sqrt(1 - k^2 a) / (k sqrt(1 - (k+1)^2 a))
inline double ratio_limit_general(int k, const MassParam& mp) {
    if (k < 1) throw domain_error("ratio_limit_general: k must be >= 1");
    const double a = mp.alpha;
    return (k + 1.0) * std::sqrt(1.0 - k * static_cast<double>(k) * a)
         / (k * std::sqrt(1.0 - sq(k + 1.0) * a));
}

// d/dm of the general ratio; simplifies to
// (k+1)(2k+1)(4m-3) / (2k sqrt(1-k^2 a) (1-(k+1)^2 a)^{3/2})
inline double dratio_limit_general_dm(int k, const MassParam& mp) {
    if (k < 1) throw domain_error("dratio_limit_general_dm: k must be >= 1");
    const double a = mp.alpha;
    const double d1 = 1.0 - k * static_cast<double>(k) * a;
    const double d2 = 1.0 - sq(k + 1.0) * a;
    return (k + 1.0) * (2.0 * k + 1.0) * (4.0 * mp.m - 3.0)
         / (2.0 * k * std::sqrt(d1) * d2 * std::sqrt(d2));
}

inline double dratio_limit_dm(const MassParam& mp) { return dratio_limit_general_dm(1, mp); }

// ---------------------------------------------------------------------------
// ratio convergence of the shadowing orbits

struct RatioRecord {
    double m = 0.0;
    int n = 0;
    int period = 0;
    double ratio_n = 0.0;        // tau_K(P_n) / (K tau(F_0))
    double ratio_limit = 0.0;
    double err0 = 0.0;           // |ratio_n - ratio_limit|
    double dratio_n_dm = 0.0;    // implicit-differentiation route
    double dratio_n_dm_fd = 0.0; // finite-difference route (re-solved orbits)
    double dratio_limit_dm = 0.0;
    double err1 = 0.0;           // |dratio_n_dm - dratio_limit_dm|
    double residual = 0.0;
    double max_dpoint_dm = 0.0;
};

namespace detail {

inline void require_shift_interval(const MassParam& mp) {
    const auto [lo, hi] = full_shift_interval(1);
    if (mp.m < lo - 1e-12 || mp.m > hi + 1e-12)
        throw domain_error("mass parameter outside the {0,1} full-shift interval [2/3, 3/4]");
}

inline double ratio_of_orbit(const PeriodicOrbit& orbit) {
    const MassParam mp(orbit.m);
    return orbit.flow_period
         / (static_cast<double>(orbit.points.size()) * fixed_point_period(0, mp));
}

}  // namespace detail

inline RatioRecord ratio_record_for(const PeriodicOrbit& orbit, bool with_derivative,
                                    double fd_delta = defaults::fd_step) {
    const MassParam mp(orbit.m);
    RatioRecord rec;
    rec.m = orbit.m;
    rec.period = static_cast<int>(orbit.points.size());
    rec.ratio_n = detail::ratio_of_orbit(orbit);
    rec.ratio_limit = ratio_limit(mp);
    rec.err0 = std::fabs(rec.ratio_n - rec.ratio_limit);
    rec.residual = orbit.residual;
    rec.dratio_limit_dm = dratio_limit_dm(mp);
    if (!with_derivative) return rec;

    const OrbitDerivative der = orbit_dm(orbit);
    for (const Vec2& v : der.dpoints_dm)
        rec.max_dpoint_dm = std::max(rec.max_dpoint_dm, norm(v));
    const double k = rec.period;
    const double tau0 = fixed_point_period(0, mp);
    rec.dratio_n_dm = (tau0 * der.dtau_dm - orbit.flow_period * fixed_point0_period_dm(mp))
                    / (k * tau0 * tau0);

    // finite differences: re-solve the orbit at m +- delta by continuation
    OrbitOptions opt;
    const MassParam mhi(orbit.m + fd_delta);
    const MassParam mlo(orbit.m - fd_delta);
    const PeriodicOrbit up = find_orbit(orbit.itinerary, mhi, opt, &orbit.points);
    const PeriodicOrbit dn = find_orbit(orbit.itinerary, mlo, opt, &orbit.points);
    rec.dratio_n_dm_fd = (detail::ratio_of_orbit(up) - detail::ratio_of_orbit(dn))
                       / (2.0 * fd_delta);
    rec.err1 = std::fabs(rec.dratio_n_dm - rec.dratio_limit_dm);
    return rec;
}

inline std::vector<RatioRecord> c0_convergence(const MassParam& mp, int n_max,
                                               const OrbitOptions& opt = {}) {
    detail::require_shift_interval(mp);
    std::vector<RatioRecord> out;
    for (int n = 1; n <= n_max; ++n) {
        const PeriodicOrbit orbit = find_orbit(pn_itinerary(n), mp, opt);
        RatioRecord rec = ratio_record_for(orbit, false);
        rec.n = n;
        out.push_back(rec);
    }
    return out;
}

inline std::vector<RatioRecord> c1_convergence(const MassParam& mp, int n_max,
                                               const OrbitOptions& opt = {}) {
    detail::require_shift_interval(mp);
    std::vector<RatioRecord> out;
    for (int n = 1; n <= n_max; ++n) {
        const PeriodicOrbit orbit = find_orbit(pn_itinerary(n), mp, opt);
        RatioRecord rec = ratio_record_for(orbit, true);
        rec.n = n;
        out.push_back(rec);
    }
    return out;
}

// least-squares slope of log(err) against log(n), over records with n >= n_from
inline double log_error_slope(const std::vector<RatioRecord>& recs, int n_from,
                              bool first_derivative = false) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (const RatioRecord& r : recs) {
        if (r.n < n_from) continue;
        const double err = first_derivative ? r.err1 : r.err0;
        if (!(err > 0.0)) continue;
        const double x = std::log(static_cast<double>(r.n));
        const double y = std::log(err);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
        ++cnt;
    }
    if (cnt < 2) throw fit_error("log_error_slope: not enough points");
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// continued fractions

struct ContinuedFraction {
    double value = 0.0;
    std::vector<long long> quotients;
    bool truncated = false;  // binary64 precision exhausted before the depth
};

inline ContinuedFraction continued_fraction(double x, int depth) {
    if (!(x > 0.0)) throw domain_error("continued_fraction: x must be positive");
    if (depth < 1 || depth > 40) throw domain_error("continued_fraction: depth must be in [1, 40]");
    ContinuedFraction out;
    out.value = x;
    double y = x;
    for (int i = 0; i < depth; ++i) {
        const double a = std::floor(y);
        if (a > 9.0e15) {  // quotient beyond exact integer range: rational in binary64
            out.truncated = true;
            break;
        }
        out.quotients.push_back(static_cast<long long>(a));
        const double frac = y - a;
        if (frac < 1e-12) {
            out.truncated = true;
            break;
        }
        y = 1.0 / frac;
    }
    return out;
}

inline long long max_partial_quotient(const ContinuedFraction& cf) {
    long long best = 0;
    for (std::size_t i = 1; i < cf.quotients.size(); ++i)
        best = std::max(best, cf.quotients[i]);
    return best;
}

// convergents p_k/q_k from the standard recurrence
inline std::vector<std::pair<long long, long long>> convergents(const ContinuedFraction& cf) {
    std::vector<std::pair<long long, long long>> out;
    long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
    for (long long a : cf.quotients) {
        const long long p = a * p1 + p0;
        const long long q = a * q1 + q0;
        out.push_back({p, q});
        p0 = p1; q0 = q1; p1 = p; q1 = q;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Lyapunov exponents

struct LyapunovResult {
    double top = 0.0;
    double second = 0.0;  // from the area factor under Gram-Schmidt
    long iterations = 0;
    long resampled = 0;   // orbits abandoned after hitting the ambiguity band
};

inline LyapunovResult lyapunov_exponent(const MassParam& mp, long iterations,
                                        std::uint64_t seed, int burn_in = 64) {
    std::mt19937_64 rng(seed);
    LyapunovResult out;
    for (int attempt = 0; attempt < 64; ++attempt) {
        SectionPoint p = sample_phase_space(mp, rng);
        Vec2 v1{1.0, -1.0}, v2{1.0, 1.0};
        double sum1 = 0.0, sum2 = 0.0;
        long done = 0;
        bool failed = false;
        for (long i = 0; i < iterations + burn_in; ++i) {
            const ReturnResult r = poincare_return(p, mp);
            if (r.ambiguous) { failed = true; break; }
            const Mat2 J = jacobian(p, mp, r.bumps);
            v1 = J * v1;
            v2 = J * v2;
            const double n1 = norm(v1);
            v1 = v1 / n1;
            // Gram-Schmidt second direction
            v2 = v2 - dot(v2, v1) * v1;
            const double n2 = norm(v2);
            v2 = v2 / n2;
            if (i >= burn_in) {
                sum1 += std::log(n1);
                sum2 += std::log(n2);
                ++done;
            }
            p = r.point;
        }
        if (failed) {
            ++out.resampled;
            continue;
        }
        out.top = sum1 / done;
        out.second = sum2 / done;
        out.iterations = done;
        return out;
    }
    throw solver_error("lyapunov_exponent: every sampled orbit hit the ambiguity band");
}

// exponent of the period-1 orbit at F_n: tangent iteration at the fixed point
inline double lyapunov_at_fixed_point(int n, const MassParam& mp, int iterations = 128) {
    const SectionPoint p = fixed_point_candidate(n, mp);
    const Mat2 J = jacobian(p, mp, n);
    Vec2 v{1.0, -1.0};
    for (int i = 0; i < iterations; ++i) v = normalized(J * v);
    return std::log(norm(J * v));
}

// ---------------------------------------------------------------------------
// cone and angle contraction

struct AngleContractionReport {
    double max_angle_ratio = 0.0;  // sup of angle(DTv1, DTv2) / angle(v1, v2)
    double lambda_est = 0.0;       // min |DTv|^2 over sampled unstable unit vectors
    long samples = 0;
};

// The unstable cone is the decreasing quadrant pair.  Per point we scan a fan
// of cone directions for min |DTv|^2 and one random pair for the angle ratio.
inline AngleContractionReport angle_contraction_check(const MassParam& mp, long samples,
                                                      std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uang(-0.5 * 3.14159265358979323846, 0.0);
    AngleContractionReport rep;
    rep.lambda_est = std::numeric_limits<double>::infinity();
    constexpr int fan = 8;
    for (long s = 0; s < samples; ++s) {
        const SectionPoint p = sample_phase_space(mp, rng);
        const ReturnResult r = poincare_return(p, mp);
        if (r.ambiguous) continue;
        const Mat2 J = jacobian(p, mp, r.bumps);
        for (int f = 0; f <= fan; ++f) {
            const double a = -0.5 * 3.14159265358979323846 * f / fan;
            const Vec2 v{std::cos(a), std::sin(a)};
            rep.lambda_est = std::min(rep.lambda_est, dot(J * v, J * v));
        }
        const double a1 = uang(rng), a2 = uang(rng);
        if (std::fabs(a1 - a2) < 1e-8) continue;
        const Vec2 v1{std::cos(a1), std::sin(a1)};
        const Vec2 v2{std::cos(a2), std::sin(a2)};
        const double ratio = angle_between(J * v1, J * v2) / std::fabs(a1 - a2);
        rep.max_angle_ratio = std::max(rep.max_angle_ratio, ratio);
        ++rep.samples;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// finite-time invariant directions along itinerary-controlled orbits

namespace detail {

// unstable direction at orbit index `at`: push a cone vector forward `depth`
// steps from the orbit's known past
inline Vec2 finite_time_unstable(const PeriodicOrbit& orbit, int at, int depth = 60) {
    const MassParam mp(orbit.m);
    const int K = static_cast<int>(orbit.points.size());
    Vec2 v{1.0, -1.0};
    int idx = ((at - depth) % K + K) % K;
    for (int t = 0; t < depth; ++t) {
        v = normalized(jacobian(orbit.points[static_cast<std::size_t>(idx)], mp,
                                orbit.itinerary.at(idx)) * v);
        idx = (idx + 1) % K;
    }
    return canonical(v);
}

// stable direction: pull a vector back from the controlled future
inline Vec2 finite_time_stable(const PeriodicOrbit& orbit, int at, int depth = 60) {
    const MassParam mp(orbit.m);
    const int K = static_cast<int>(orbit.points.size());
    Vec2 v{1.0, 1.0};
    int idx = (at + depth) % K;
    for (int t = 0; t < depth; ++t) {
        idx = (idx - 1 + K) % K;
        v = normalized(jacobian(orbit.points[static_cast<std::size_t>(idx)], mp,
                                orbit.itinerary.at(idx)).inverse_unit_det() * v);
    }
    return canonical(v);
}

struct LogLinearFit {
    double rate = 0.0;       // exp(slope)
    double prefactor = 0.0;  // exp(intercept)
    double r2 = 0.0;
};

inline LogLinearFit fit_log_linear(const std::vector<std::pair<double, double>>& xy) {
    if (xy.size() < 3) throw fit_error("fit_log_linear: not enough samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, v] : xy) {
        const double y = std::log(v);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double n = static_cast<double>(xy.size());
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    const double mean = sy / n;
    for (const auto& [x, v] : xy) {
        const double y = std::log(v);
        ss_res += sq(y - (slope * x + icpt));
        ss_tot += sq(y - mean);
    }
    return {std::exp(slope), std::exp(icpt), ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

// Periodic words over {0,1} differing exactly at positions +-d (mod L), so
// both separation times equal d.  Families anchored at the constant words
// probe the weak-contraction windows around the fixed points.
struct WordPair {
    PeriodicOrbit a;
    PeriodicOrbit b;
};

template <typename Rng>
std::vector<WordPair> separation_pairs(const MassParam& mp, int L, int d,
                                       int count, Rng& rng) {
    std::vector<WordPair> out;
    std::uniform_int_distribution<int> bit(0, 1);
    for (int t = 0; t < count && static_cast<int>(out.size()) < count; ++t) {
        std::vector<int> base(static_cast<std::size_t>(L));
        if (t == 0) std::fill(base.begin(), base.end(), 0);
        else if (t == 1) std::fill(base.begin(), base.end(), 1);
        else for (int& s : base) s = bit(rng);
        std::vector<int> other = base;
        other[static_cast<std::size_t>(d)] ^= 1;
        other[static_cast<std::size_t>(L - d)] ^= 1;
        try {
            WordPair wp{find_orbit(Itinerary{base, 0, true, false}, mp),
                        find_orbit(Itinerary{other, 0, true, false}, mp)};
            out.push_back(std::move(wp));
        } catch (const solver_error&) {
            // skip unlucky words
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// symbolic metric estimate: d(pi(x), pi(y)) <= C theta^{s(x,y)}

struct SymbolicMetricEstimate {
    double c_est = 0.0;      // envelope constant: max d / theta^s over samples
    double theta_est = 0.0;  // fitted decay rate per unit separation time
    double r2 = 0.0;
    int depth_max = 0;
};

inline SymbolicMetricEstimate estimate_symbolic_metric(const MassParam& mp, int pairs_per_depth,
                                                       std::uint64_t seed, int depth_max = 11,
                                                       int word_length = 26) {
    detail::require_shift_interval(mp);
    if (pairs_per_depth < 3) throw fit_error("estimate_symbolic_metric: too few pairs");
    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> maxima;  // (s, max distance at s)
    std::vector<std::pair<double, double>> all;
    for (int d = 3; d <= depth_max; ++d) {
        const auto pairs = detail::separation_pairs(mp, word_length, d, pairs_per_depth, rng);
        double worst = 0.0;
        for (const auto& wp : pairs) {
            const double dist = std::hypot(wp.a.points[0].h - wp.b.points[0].h,
                                           wp.a.points[0].z - wp.b.points[0].z);
            worst = std::max(worst, dist);
            all.push_back({static_cast<double>(d), dist});
        }
        if (worst > 0.0) maxima.push_back({static_cast<double>(d), worst});
    }
    if (maxima.size() < 4) throw fit_error("estimate_symbolic_metric: insufficient spread of s");
    const detail::LogLinearFit fit = detail::fit_log_linear(maxima);
    SymbolicMetricEstimate out;
    out.theta_est = fit.rate;
    out.r2 = fit.r2;
    out.depth_max = depth_max;
    for (const auto& [s, dist] : all)
        out.c_est = std::max(out.c_est, dist / std::pow(out.theta_est, s));
    if (!(out.theta_est > 0.0 && out.theta_est < 1.0))
        throw fit_error("estimate_symbolic_metric: fitted rate not in (0,1)");
    return out;
}

// ---------------------------------------------------------------------------
// dynamical Holder continuity of the invariant directions

struct HolderDirectionFit {
    double c_u = 0.0, gamma_u = 0.0, r2_u = 0.0;
    double c_s = 0.0, gamma_s = 0.0, r2_s = 0.0;
};

inline HolderDirectionFit holder_direction_check(const MassParam& mp, int depth_max,
                                                 std::uint64_t seed,
                                                 int pairs_per_depth = 6,
                                                 int word_length = 26) {
    detail::require_shift_interval(mp);
    if (depth_max < 6 || depth_max >= word_length / 2)
        throw domain_error("holder_direction_check: depth_max out of range");
    std::mt19937_64 rng(seed);
    std::vector<std::pair<double, double>> us, ss;
    for (int d = 3; d <= depth_max; ++d) {
        const auto pairs = detail::separation_pairs(mp, word_length, d, pairs_per_depth, rng);
        double wu = 0.0, ws = 0.0;
        for (const auto& wp : pairs) {
            wu = std::max(wu, norm(detail::finite_time_unstable(wp.a, 0)
                                   - detail::finite_time_unstable(wp.b, 0)));
            ws = std::max(ws, norm(detail::finite_time_stable(wp.a, 0)
                                   - detail::finite_time_stable(wp.b, 0)));
        }
        if (wu > 0.0) us.push_back({static_cast<double>(d), wu});
        if (ws > 0.0) ss.push_back({static_cast<double>(d), ws});
    }
    if (us.size() < 4 || ss.size() < 4)
        throw fit_error("holder_direction_check: insufficient samples at large depth");
    const detail::LogLinearFit fu = detail::fit_log_linear(us);
    const detail::LogLinearFit fs = detail::fit_log_linear(ss);
    return {fu.prefactor, fu.rate, fu.r2, fs.prefactor, fs.rate, fs.r2};
}

// ---------------------------------------------------------------------------
// gradient bound of tau on (R_0 u R_1) n (T(R_0) u T(R_1)), by sampling

struct TauBoundReport {
    double grad_sup = 0.0;   // sup of |(dtau/dh, dtau/dz)| over the sampled domain
    double tau_sup = 0.0;    // sup of tau, expected <= 4/sqrt(m)
    double h_min = 0.0;      // observed domain minima, cross-checked against
    double f_min = 0.0;      // the closed-form corner bounds
    long kept = 0;
};

inline TauBoundReport tau_bound_estimate(const MassParam& mp, long samples,
                                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TauBoundReport rep;
    rep.h_min = 1.0;
    rep.f_min = 1.0;
    for (long i = 0; i < samples; ++i) {
        const SectionPoint p = sample_phase_space(mp, rng);
        const Region r = region_of(p, mp);
        if (r.ambiguous || r.n > 1) continue;
        const SectionPoint ip = involution(p, mp);
        if (!in_phase_space(ip, mp)) continue;
        const Region ri = region_of(ip, mp);  // p in T(R_j) iff I(p) in R_j
        if (ri.ambiguous || ri.n > 1) continue;
        const TauGradient g = tau_gradient(p, mp, r.n);
        rep.grad_sup = std::max(rep.grad_sup, std::hypot(g.dh, g.dz));
        rep.tau_sup = std::max(rep.tau_sup, return_time(p, mp, r.n));
        rep.h_min = std::min(rep.h_min, p.h);
        rep.f_min = std::min(rep.f_min, bump_energy(p, mp));
        ++rep.kept;
    }
    if (rep.kept == 0) throw solver_error("tau_bound_estimate: no sample hit the domain");
    return rep;
}

// ---------------------------------------------------------------------------
// qualitative flow-correlation diagnostic on the suspension space

struct CorrelationCurve {
    std::vector<double> t_grid;
    std::vector<double> correlation;  // |E[v w o Phi^t] - E[v] E[w]|
    double head_average = 0.0;        // t in [0, t_max/10]
    double tail_average = 0.0;        // t in [t_max/2, t_max]
    double mc_sigma = 0.0;            // rough Monte Carlo scale of the estimates
    bool mixing_direction = false;    // tail < head
    long samples = 0;
};

// built-in observables: smooth in (h, z, t/tau) and vanishing at the roof so
// they pass to the quotient space
inline double observable_v(SectionPoint p, double frac) {
    return std::sin(2.0 * 3.14159265358979323846 * frac) * std::exp(-8.0 * sq(p.h - 0.25));
}

inline double observable_w(SectionPoint p, double frac) {
    return std::sin(2.0 * 3.14159265358979323846 * frac) * p.z;
}

using Observable = std::function<double(SectionPoint, double)>;

inline CorrelationCurve correlation_diagnostic(const MassParam& mp, double t_max,
                                               long samples, std::uint64_t seed,
                                               int grid_points = 25,
                                               const Observable& obs_v = observable_v,
                                               const Observable& obs_w = observable_w) {
    if (!(t_max > 0.0)) throw domain_error("correlation_diagnostic: t_max must be positive");
    if (grid_points < 5) throw domain_error("correlation_diagnostic: need at least 5 grid points");

    // roof cap for rejection sampling of the suspension measure: points with
    // tau above the cap lose the excess range (measure-negligible tail)
    std::mt19937_64 cap_rng(chunk_seed(seed, 0xC0FFEE));
    double cap = 0.0;
    for (int i = 0; i < 512; ++i) {
        const SectionPoint p = sample_phase_space(mp, cap_rng);
        cap = std::max(cap, poincare_return(p, mp).time);
    }
    cap *= 1.5;

    CorrelationCurve out;
    out.t_grid.resize(static_cast<std::size_t>(grid_points));
    for (int g = 0; g < grid_points; ++g)
        out.t_grid[static_cast<std::size_t>(g)] = t_max * g / (grid_points - 1);

    const long chunk_size = 4096;
    const std::size_t n_chunks =
        static_cast<std::size_t>((samples + chunk_size - 1) / chunk_size);
    struct ChunkAccum {
        std::vector<double> vw;
        double v = 0.0, w = 0.0, v2 = 0.0;
        long n = 0;
    };
    std::vector<ChunkAccum> acc(n_chunks);
    for (auto& a : acc) a.vw.assign(static_cast<std::size_t>(grid_points), 0.0);

    for_each_chunk(n_chunks, [&](std::size_t c) {
        std::mt19937_64 rng(chunk_seed(seed, c));
        std::uniform_real_distribution<double> uoff(0.0, cap);
        ChunkAccum& a = acc[c];
        const long want = std::min(chunk_size, samples - static_cast<long>(c) * chunk_size);
        while (a.n < want) {
            const SectionPoint p = sample_phase_space(mp, rng);
            const ReturnResult r0 = poincare_return(p, mp);
            const double offset = uoff(rng);
            if (offset >= r0.time) continue;
            ++a.n;
            const double v0 = obs_v(p, offset / r0.time);
            a.v += v0;
            a.w += obs_w(p, offset / r0.time);
            a.v2 += v0 * v0;
            SectionPoint base = p;
            ReturnResult cur = r0;  // cur.time is the roof over `base`
            double consumed = 0.0;
            for (int g = 0; g < grid_points; ++g) {
                double local = offset + out.t_grid[static_cast<std::size_t>(g)] - consumed;
                while (local >= cur.time) {
                    consumed += cur.time;
                    base = cur.point;
                    cur = poincare_return(base, mp);
                    local = offset + out.t_grid[static_cast<std::size_t>(g)] - consumed;
                }
                a.vw[static_cast<std::size_t>(g)] += v0 * obs_w(base, local / cur.time);
            }
        }
    });

    double mean_v = 0.0, mean_w = 0.0, mean_v2 = 0.0;
    long n = 0;
    std::vector<double> vw(static_cast<std::size_t>(grid_points), 0.0);
    for (const auto& a : acc) {
        mean_v += a.v;
        mean_w += a.w;
        mean_v2 += a.v2;
        n += a.n;
        for (int g = 0; g < grid_points; ++g)
            vw[static_cast<std::size_t>(g)] += a.vw[static_cast<std::size_t>(g)];
    }
    mean_v /= n;
    mean_w /= n;
    mean_v2 /= n;
    out.samples = n;
    out.mc_sigma = std::sqrt(std::max(mean_v2 - sq(mean_v), 0.0) / n);
    out.correlation.resize(static_cast<std::size_t>(grid_points));
    double head = 0.0, tail = 0.0;
    int nh = 0, nt = 0;
    for (int g = 0; g < grid_points; ++g) {
        const double cval = std::fabs(vw[static_cast<std::size_t>(g)] / n - mean_v * mean_w);
        out.correlation[static_cast<std::size_t>(g)] = cval;
        if (out.t_grid[static_cast<std::size_t>(g)] <= t_max / 10.0) { head += cval; ++nh; }
        if (out.t_grid[static_cast<std::size_t>(g)] >= t_max / 2.0) { tail += cval; ++nt; }
    }
    out.head_average = head / std::max(nh, 1);
    out.tail_average = tail / std::max(nt, 1);
    out.mixing_direction = out.tail_average < out.head_average;
    return out;
}

}  // namespace fbl
