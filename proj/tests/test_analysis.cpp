#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fbl/analysis.hpp"

using namespace fbl;

TEST_CASE("period-ratio limit") {
    CHECK(ratio_limit(MassParam(0.75)) == Catch::Approx(std::sqrt(3.0)).margin(1e-12));
    CHECK(ratio_limit(MassParam(0.7)) == Catch::Approx(1.7398353448033601).margin(1e-12));
    // 3m - 2m^2 is symmetric about 3/4
    for (double m : {0.55, 0.6, 0.7}) {
        CHECK(ratio_limit(MassParam(m))
              == Catch::Approx(ratio_limit(MassParam(1.5 - m))).margin(1e-13));
    }
    // matches tau(F_1)/tau(F_0) built from the period formulas
    for (double m : {0.52, 0.7, 0.95}) {
        MassParam mp(m);
        CHECK(ratio_limit(mp)
              == Catch::Approx(fixed_point_period(1, mp) / fixed_point_period(0, mp))
                     .margin(1e-12));
    }
}

TEST_CASE("general ratio family") {
    for (double m : {0.55, 0.7, 0.9}) {
        MassParam mp(m);
        CHECK(ratio_limit_general(1, mp) == Catch::Approx(ratio_limit(mp)).margin(1e-13));
        // independent route through the fixed-point periods
        for (int k = 1; k <= 4; ++k)
            CHECK(ratio_limit_general(k, mp)
                  == Catch::Approx(fixed_point_period(k, mp) / fixed_point_period(k - 1, mp))
                         .margin(1e-12));
    }
    CHECK(ratio_limit_general(2, MassParam(0.8))
          == Catch::Approx(1.2652910884304601).margin(1e-12));
    // alpha -> 0 limit: ratio -> (k+1)/k
    MassParam near_half(0.5000001);
    for (int k = 1; k <= 5; ++k)
        CHECK(ratio_limit_general(k, near_half)
              == Catch::Approx((k + 1.0) / k).margin(1e-5));
    CHECK_THROWS_AS(ratio_limit_general(0, MassParam(0.7)), domain_error);
}

TEST_CASE("ratio monotonicity: decreasing then increasing about 3/4") {
    for (int k = 1; k <= 5; ++k) {
        double prev = ratio_limit_general(k, MassParam(0.51));
        for (int i = 1; i < 50; ++i) {
            const double m = 0.51 + (0.75 - 0.51) * i / 49.0;
            const double cur = ratio_limit_general(k, MassParam(m));
            CHECK(cur < prev);
            prev = cur;
        }
        prev = ratio_limit_general(k, MassParam(0.75));
        for (int i = 1; i < 50; ++i) {
            const double m = 0.75 + (0.99 - 0.75) * i / 49.0;
            const double cur = ratio_limit_general(k, MassParam(m));
            CHECK(cur > prev);
            prev = cur;
        }
    }
}

TEST_CASE("ratio derivative") {
    CHECK(dratio_limit_dm(MassParam(0.75)) == 0.0);
    CHECK(dratio_limit_dm(MassParam(0.7))
          == Catch::Approx(-0.31488332736547300).margin(1e-12));
    // finite-difference cross-check across k and m
    const double d = 1e-6;
    for (int k : {1, 2, 3}) {
        for (double m : {0.6, 0.7, 0.85}) {
            const double fd = (ratio_limit_general(k, MassParam(m + d))
                               - ratio_limit_general(k, MassParam(m - d))) / (2 * d);
            CHECK(dratio_limit_general_dm(k, MassParam(m)) == Catch::Approx(fd).margin(1e-7));
        }
    }
}

TEST_CASE("ratio convergence of the shadowing family") {
    MassParam mp(0.7);
    const auto recs = c0_convergence(mp, 6);
    REQUIRE(recs.size() == 6);
    for (std::size_t i = 3; i < recs.size(); ++i) CHECK(recs[i].err0 < recs[i - 1].err0);
    for (const RatioRecord& r : recs) {
        CHECK(r.ratio_n > 0.0);
        CHECK(r.residual < 1e-10);
        CHECK(r.period == r.n * r.n + 2 * r.n);
    }
    CHECK_THROWS_AS(c0_convergence(MassParam(0.55), 3), domain_error);
}

TEST_CASE("roof values along P_n stay under the 4/sqrt(m) bound") {
    MassParam mp(0.7);
    const PeriodicOrbit orbit = find_orbit(pn_itinerary(4), mp);
    for (std::size_t i = 0; i < orbit.points.size(); ++i) {
        const double tau = return_time(orbit.points[i], mp,
                                       orbit.itinerary.at(static_cast<long>(i)));
        CHECK(tau <= 4.0 / std::sqrt(mp.m));
    }
}

TEST_CASE("distances along P_n to F_1 decay with the agreement depth") {
    MassParam mp(0.7);
    const int n = 5;
    const PeriodicOrbit orbit = find_orbit(pn_itinerary(n), mp);
    const SectionPoint f1 = fixed_point_candidate(1, mp);
    const int K = static_cast<int>(orbit.points.size());
    std::vector<std::pair<double, double>> decay;
    for (int pos = n; pos < n * n + n; ++pos) {
        const int idx = pos;  // points[i] realises position i
        const int depth = std::min(pos - n + 1, n * n + n - pos);
        const double dist = std::hypot(orbit.points[static_cast<std::size_t>(idx)].h - f1.h,
                                       orbit.points[static_cast<std::size_t>(idx)].z - f1.z);
        if (dist > 0.0) decay.push_back({static_cast<double>(depth), dist});
    }
    const detail::LogLinearFit fit = detail::fit_log_linear(decay);
    CHECK(fit.rate < 0.8);  // two geometric tails peaking at the block ends
    CHECK(fit.r2 > 0.9);
}

TEST_CASE("derivative convergence: two routes and the limit") {
    MassParam mp(0.7);
    const auto recs = c1_convergence(mp, 5);
    for (const RatioRecord& r : recs) {
        CHECK(std::fabs(r.dratio_n_dm - r.dratio_n_dm_fd)
              < 1e-3 * std::fabs(r.dratio_n_dm));
        CHECK(r.dratio_limit_dm == Catch::Approx(dratio_limit_dm(mp)).margin(1e-14));
    }
    for (std::size_t i = 3; i < recs.size(); ++i) CHECK(recs[i].err1 < recs[i - 1].err1);
}

TEST_CASE("log-error slope of the C0 family sits near 1/n") {
    MassParam mp(0.7);
    const auto recs = c0_convergence(mp, 8);
    const double slope = log_error_slope(recs, 3);
    CHECK(slope < -0.5);
    CHECK(slope > -1.6);
}

TEST_CASE("continued fractions") {
    const ContinuedFraction sqrt3 = continued_fraction(std::sqrt(3.0), 12);
    REQUIRE(sqrt3.quotients.size() == 12);
    CHECK(sqrt3.quotients[0] == 1);
    for (std::size_t i = 1; i < sqrt3.quotients.size(); ++i)
        CHECK(sqrt3.quotients[i] == (i % 2 == 1 ? 1 : 2));

    const ContinuedFraction golden = continued_fraction((1.0 + std::sqrt(5.0)) / 2.0, 25);
    for (std::size_t i = 0; i < golden.quotients.size(); ++i)
        CHECK(golden.quotients[i] == 1);

    const ContinuedFraction ratio = continued_fraction(ratio_limit(MassParam(0.7)), 20);
    CHECK(max_partial_quotient(ratio) > 0);
    CHECK(ratio.quotients[0] == 1);

    // rational input truncates
    const ContinuedFraction r = continued_fraction(1.5, 10);
    CHECK(r.truncated);
    REQUIRE(r.quotients.size() == 2);
    CHECK(r.quotients[0] == 1);
    CHECK(r.quotients[1] == 2);

    CHECK_THROWS_AS(continued_fraction(-1.0, 5), domain_error);
    CHECK_THROWS_AS(continued_fraction(1.5, 41), domain_error);
}

TEST_CASE("convergents approximate and never land exactly") {
    for (double x : {std::sqrt(3.0), ratio_limit(MassParam(0.7)), ratio_limit(MassParam(0.67))}) {
        const ContinuedFraction cf = continued_fraction(x, 18);
        const auto cs = convergents(cf);
        for (std::size_t i = 0; i + 1 < cs.size(); ++i) {
            const auto [p, q] = cs[i];
            const auto [p2, q2] = cs[i + 1];
            CHECK(std::fabs(x - static_cast<double>(p) / q)
                  <= 1.0 / (static_cast<double>(q) * q2) + 1e-15);
            // fma keeps the sign of x*q - p exact down to the last convergent
            CHECK(std::fabs(std::fma(x, static_cast<double>(q),
                                     -static_cast<double>(p))) > 0.0);
        }
    }
}

TEST_CASE("lyapunov exponent") {
    // the fixed orbit's exponent is exactly log of the expanding multiplier
    CHECK(lyapunov_at_fixed_point(0, MassParam(0.75))
          == Catch::Approx(std::log(2.0)).margin(1e-12));

    MassParam mp(0.7);
    const LyapunovResult a = lyapunov_exponent(mp, 60000, 1);
    const LyapunovResult b = lyapunov_exponent(mp, 60000, 2);
    CHECK(a.top > 0.0);
    CHECK(std::fabs(a.top - b.top) / a.top < 0.01);
    // area preservation: the two exponents cancel
    CHECK(std::fabs(a.top + a.second) < 1e-12);
}

TEST_CASE("angle contraction on the unstable cone") {
    MassParam mp(0.7);
    const AngleContractionReport rep = angle_contraction_check(mp, 5000, 12345);
    CHECK(rep.samples > 4000);
    CHECK(rep.max_angle_ratio < 1.0);
    CHECK(rep.lambda_est > 1.0);
    CHECK(rep.max_angle_ratio <= 1.0 / rep.lambda_est + 1e-9);
    // parallel vectors map to parallel vectors
    CHECK(angle_between({1.0, -2.0}, {1.0, -2.0}) == 0.0);
}

TEST_CASE("symbolic metric estimate") {
    MassParam mp(0.7);
    const SymbolicMetricEstimate est = estimate_symbolic_metric(mp, 5, 77);
    CHECK(est.theta_est > 0.0);
    CHECK(est.theta_est < 1.0);
    CHECK(est.r2 > 0.9);

    // the shadowing family is exponentially close to F_0: d <= C theta^n
    const SectionPoint f0 = fixed_point_candidate(0, mp);
    for (int n = 1; n <= 8; ++n) {
        const PeriodicOrbit orbit = find_orbit(pn_itinerary(n), mp);
        const SectionPoint p0 = orbit.points[0];  // realises position 0

        const double dist = std::hypot(p0.h - f0.h, p0.z - f0.z);
        CHECK(dist <= 1.25 * est.c_est * std::pow(est.theta_est, n));
    }
    CHECK_THROWS_AS(estimate_symbolic_metric(MassParam(0.55), 5, 1), domain_error);
}

TEST_CASE("points on one stable manifold approach each other forward") {
    MassParam mp(0.7);
    // two periodic words differing only deep in the past
    const int L = 26;
    std::vector<int> w1(L, 0);
    for (int i = 0; i < L; i += 3) w1[static_cast<std::size_t>(i)] = 1;
    std::vector<int> w2 = w1;
    w2[L - 3] ^= 1;
    const PeriodicOrbit a = find_orbit(Itinerary{w1, 0, true, false}, mp);
    const PeriodicOrbit b = find_orbit(Itinerary{w2, 0, true, false}, mp);
    double prev = std::hypot(a.points[0].h - b.points[0].h, a.points[0].z - b.points[0].z);
    int shrank = 0;
    for (int k = 1; k <= 9; ++k) {
        const double cur = std::hypot(a.points[static_cast<std::size_t>(k)].h
                                          - b.points[static_cast<std::size_t>(k)].h,
                                      a.points[static_cast<std::size_t>(k)].z
                                          - b.points[static_cast<std::size_t>(k)].z);
        if (cur < 0.8 * prev) ++shrank;
        prev = cur;
    }
    CHECK(shrank >= 7);
}

TEST_CASE("holder continuity of the invariant directions") {
    MassParam mp(0.7);
    const HolderDirectionFit fit = holder_direction_check(mp, 10, 99, 4);
    CHECK(fit.gamma_u < 1.0);
    CHECK(fit.gamma_u > 0.0);
    CHECK(fit.r2_u > 0.9);
    CHECK(fit.gamma_s < 1.0);
    CHECK(fit.r2_s > 0.9);
}

TEST_CASE("correlation diagnostic") {
    MassParam mp(0.7);

    // constant observables have identically zero correlation
    const Observable ones = [](SectionPoint, double) { return 1.0; };
    const CorrelationCurve flat = correlation_diagnostic(mp, 10.0, 2000, 5, 11, ones, ones);
    for (double c : flat.correlation) CHECK(std::fabs(c) < 1e-12);

    // v = w: the t = 0 value is the variance, positive for non-constant v
    const CorrelationCurve var = correlation_diagnostic(mp, 10.0, 4000, 5, 11,
                                                        observable_v, observable_v);
    CHECK(var.correlation.front() > 0.01);

    const CorrelationCurve c = correlation_diagnostic(mp, 24.0, 20000, 7);
    CHECK(c.samples == 20000);
    CHECK(c.mixing_direction);
    CHECK(c.tail_average < c.head_average);
}

TEST_CASE("monte carlo results are reproducible and thread-independent") {
    MassParam mp(0.7);
    const CorrelationCurve a = correlation_diagnostic(mp, 8.0, 6000, 42, 9);
    const CorrelationCurve b = correlation_diagnostic(mp, 8.0, 6000, 42, 9);
    for (std::size_t i = 0; i < a.correlation.size(); ++i)
        CHECK(a.correlation[i] == b.correlation[i]);

#ifdef __unix__
    setenv("FBL_THREADS", "1", 1);
    const CorrelationCurve c1 = correlation_diagnostic(mp, 8.0, 6000, 42, 9);
    setenv("FBL_THREADS", "4", 1);
    const CorrelationCurve c4 = correlation_diagnostic(mp, 8.0, 6000, 42, 9);
    unsetenv("FBL_THREADS");
    for (std::size_t i = 0; i < c1.correlation.size(); ++i)
        CHECK(c1.correlation[i] == c4.correlation[i]);
#endif
}
