#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fbl/symbolic.hpp"

using namespace fbl;

TEST_CASE("shadowing itinerary family") {
    const Itinerary p1 = pn_itinerary(1);
    REQUIRE(p1.symbols.size() == 3);
    CHECK(p1.at(-1) == 0);
    CHECK(p1.at(0) == 0);
    CHECK(p1.at(1) == 1);
    CHECK(p1.at(2) == 0);  // periodic wrap

    const Itinerary p2 = pn_itinerary(2);
    REQUIRE(p2.symbols.size() == 8);
    for (int i = -2; i <= 1; ++i) CHECK(p2.at(i) == 0);
    for (int i = 2; i <= 5; ++i) CHECK(p2.at(i) == 1);

    for (int n = 1; n <= 10; ++n)
        CHECK(pn_itinerary(n).symbols.size()
              == static_cast<std::size_t>(n * n + 2 * n));
    CHECK_THROWS_AS(pn_itinerary(0), domain_error);
}

TEST_CASE("itineraries of the fixed points") {
    MassParam mp(0.7);
    const Itinerary i0 = itinerary_of(fixed_point_candidate(0, mp), mp, 8, 8);
    CHECK_FALSE(i0.truncated);
    for (int k = -8; k < 8; ++k) CHECK(i0.at(k) == 0);
    const Itinerary i1 = itinerary_of(fixed_point_candidate(1, mp), mp, 8, 8);
    for (int k = -8; k < 8; ++k) CHECK(i1.at(k) == 1);
}

TEST_CASE("involution conjugates the coding: (I x)_i = x_{-i-1}") {
    MassParam mp(0.7);
    std::mt19937_64 rng(71);
    int done = 0;
    for (int t = 0; t < 40 && done < 12; ++t) {
        const SectionPoint p = sample_phase_space(mp, rng);
        const Itinerary a = itinerary_of(p, mp, 6, 6);
        if (a.truncated) continue;
        const Itinerary b = itinerary_of(involution(p, mp), mp, 6, 6);
        if (b.truncated) continue;
        ++done;
        for (int i = -5; i < 5; ++i) CHECK(b.at(i) == a.at(-i - 1));
    }
    CHECK(done == 12);
}

TEST_CASE("separation times") {
    const Itinerary zeros = constant_itinerary(0);
    const Itinerary ones = constant_itinerary(1);
    CHECK(separation(zeros, ones).s == 0);

    for (int n = 1; n <= 8; ++n) {
        const SeparationRecord rec = separation(pn_itinerary(n), zeros);
        CHECK(rec.s_plus == n);
        CHECK(rec.s_minus == n + 1);
        CHECK(rec.s == n);
    }

    // shifted P_n against all-ones inside the one-block: the separation is
    // min(i - n + 1, n^2 + n - i), read off the block ends
    for (int n : {2, 3}) {
        const Itinerary pn = pn_itinerary(n);
        for (int i = n; i <= n * n + n; ++i) {
            const SeparationRecord rec = separation(pn.shifted(i), ones);
            const long expect = std::min<long>(i - n + 1, n * n + n - i);
            CHECK(rec.s == expect);
        }
    }

    // identical sequences saturate
    const SeparationRecord sat = separation(pn_itinerary(2), pn_itinerary(2));
    CHECK(sat.saturated);
    CHECK(sat.s == 8);

    // finite overlap saturation: same symbols over the comparable window
    Itinerary fa{{0, 0, 0}, 1, false, false};
    Itinerary fb{{0, 0, 0, 0, 0}, 2, false, false};
    const SeparationRecord rec = separation(fa, fb);
    CHECK(rec.saturated);
    CHECK(rec.s == 1);  // backward overlap is one step
}

TEST_CASE("shifted itineraries realign positions") {
    const Itinerary p2 = pn_itinerary(2);
    const Itinerary s = p2.shifted(3);
    for (int i = -4; i <= 8; ++i) CHECK(s.at(i) == p2.at(i + 3));
}

TEST_CASE("itinerary of an orbit point matches the bump counts") {
    MassParam mp(0.7);
    std::mt19937_64 rng(73);
    const SectionPoint p = sample_phase_space(mp, rng);
    const Itinerary itin = itinerary_of(p, mp, 5, 0);
    SectionPoint q = p;
    for (int i = 0; i < static_cast<int>(itin.symbols.size()); ++i) {
        const Region r = region_of(q, mp);
        CHECK(itin.at(i) == r.n);
        q = return_map(q, mp, r.n);
    }
}
