#include <catch2/catch_amalgamated.hpp>

#include "fbl/geometry.hpp"

using namespace fbl;

TEST_CASE("full shift intervals") {
    const auto [lo1, hi1] = full_shift_interval(1);
    CHECK(lo1 == 2.0 / 3.0);
    CHECK(hi1 == 0.75);
    const auto [lo2, hi2] = full_shift_interval(2);
    CHECK(lo2 == 0.75);
    CHECK(hi2 == Catch::Approx(11.0 / 12.0).margin(1e-15));

    for (int k = 1; k <= 50; ++k)
        CHECK(full_shift_interval(k + 1).first <= full_shift_interval(k).second);
    CHECK_THROWS_AS(full_shift_interval(0), domain_error);
}

TEST_CASE("quadrangular crossing margins") {
    // zero margin exactly at the interval endpoints, positive inside
    for (int k = 1; k <= 10; ++k) {
        const auto [lo, hi] = full_shift_interval(k);
        const QuadrangularCheck at_lo = verify_quadrangular(k, MassParam(lo));
        const QuadrangularCheck at_hi = verify_quadrangular(k, MassParam(hi));
        CHECK(std::fabs(at_lo.margin_lo) < 1e-9);
        CHECK(at_lo.margin_hi > 0.0);
        CHECK(at_lo.boundary);
        CHECK(std::fabs(at_hi.margin_hi) < 1e-9);
        CHECK(at_hi.margin_lo > 0.0);
        for (int t = 1; t < 100; ++t) {
            const QuadrangularCheck inside =
                verify_quadrangular(k, MassParam(lo + (hi - lo) * t / 100.0));
            CHECK(inside.holds);
            CHECK(inside.margin_lo > 0.0);
            CHECK(inside.margin_hi > 0.0);
        }
    }

    // the k = 1 right-endpoint identity: T^{-1}(X_1) meets Ix_1 at m = 3/4
    const QuadrangularCheck c34 = verify_quadrangular(1, MassParam(0.75));
    CHECK(std::fabs(c34.margin_hi) < 1e-14);
    CHECK(verify_quadrangular(1, MassParam(0.70)).holds);

    // outside: k = 2 at m = 0.7 < 3/4 fails the first inequality
    const QuadrangularCheck c2 = verify_quadrangular(2, MassParam(0.70));
    CHECK_FALSE(c2.holds);
    CHECK(c2.margin_lo < 0.0);
}

TEST_CASE("singularity tracing") {
    MassParam m34(0.75);
    for (int n : {0, 1}) {
        const SingularityPolyline line = trace_singularity(n, m34, 60);
        const CornerPoints c = corner_points(n, m34);
        REQUIRE(line.vertices.size() >= 50);
        CHECK(std::hypot(line.vertices.front().h - c.r_left.h,
                         line.vertices.front().z - c.r_left.z) < 1e-6);
        CHECK(std::hypot(line.vertices.back().h - c.r_right.h,
                         line.vertices.back().z - c.r_right.z) < 1e-6);
        // r_n is increasing in both coordinates
        for (std::size_t i = 0; i + 1 < line.vertices.size(); ++i) {
            CHECK(line.vertices[i + 1].h > line.vertices[i].h);
            CHECK(line.vertices[i + 1].z > line.vertices[i].z);
        }
        // its involution image approximates I(r_n); the curve is decreasing,
        // traversed here from its bottom-right end to its top-left end
        const SingularityPolyline img = involution_image(line, m34);
        for (std::size_t i = 0; i + 1 < img.vertices.size(); ++i) {
            CHECK(img.vertices[i + 1].h < img.vertices[i].h);
            CHECK(img.vertices[i + 1].z > img.vertices[i].z);
        }
        CHECK(std::hypot(img.vertices.front().h - c.ir_bottom.h,
                         img.vertices.front().z - c.ir_bottom.z) < 1e-5);
        CHECK(std::hypot(img.vertices.back().h - c.ir_top.h,
                         img.vertices.back().z - c.ir_top.z) < 1e-5);
    }
}

TEST_CASE("shape census of R_i n T(R_j)") {
    // R_0 n T(R_0) is quadrangular for every m
    for (double m : {0.55, 0.60, 0.70, 0.85}) {
        const ShapeReport r = classify_intersection_shape(0, 0, MassParam(m));
        CHECK(r.by_threshold == ShapeKind::quadrangular);
        CHECK(r.arc_count == 4);
        CHECK(r.agree);
    }

    // triangular cases present below 7/12
    {
        int triangles = 0;
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j)
                if (i + j > 0 && classify_intersection_shape(i, j, MassParam(0.55)).arc_count == 3)
                    ++triangles;
        CHECK(triangles >= 1);
    }
    // pentagonal cases present in (7/12, 2/3)
    {
        int pentagons = 0;
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j)
                if (i + j > 0 && classify_intersection_shape(i, j, MassParam(0.60)).arc_count == 5)
                    ++pentagons;
        CHECK(pentagons >= 1);
    }
    // all four quadrangular at m = 0.70
    for (int i = 0; i <= 1; ++i)
        for (int j = 0; j <= 1; ++j) {
            const ShapeReport r = classify_intersection_shape(i, j, MassParam(0.70));
            CHECK(r.by_threshold == ShapeKind::quadrangular);
            CHECK(r.arc_count == 4);
            CHECK(r.agree);
        }

    CHECK(classify_intersection_shape(0, 1, MassParam(2.0 / 3.0)).near_threshold);
    CHECK_FALSE(classify_intersection_shape(0, 1, MassParam(0.7)).near_threshold);
    CHECK_THROWS_AS(classify_intersection_shape(2, 0, MassParam(0.7)), domain_error);
}
