#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fbl {

// ---------------------------------------------------------------------------
// errors

struct domain_error : std::domain_error {
    using std::domain_error::domain_error;
};

struct invalid_state : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct solver_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// shared numeric defaults

namespace defaults {
// width of the ambiguity band around coincident events, in event-time gap
inline constexpr double eps_boundary = 1e-11;
// central finite-difference step for derivative cross-checks
inline constexpr double fd_step = 1e-6;
// bisection tolerance when tracing singularity curves
inline constexpr double bisect_tol = 1e-10;
// Newton convergence / stagnation thresholds for orbit solves
inline constexpr double newton_tol = 1e-12;
inline constexpr double newton_min_step = 1e-14;
}  // namespace defaults

inline double sq(double x) { return x * x; }

// ---------------------------------------------------------------------------
// small fixed-size linear algebra; everything in this project is 2x2 or a
// block-cyclic system assembled from 2x2 pieces.

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2 operator/(double s) const { return {x / s, y / s}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 normalized(Vec2 v) { return v / norm(v); }

// unsigned angle between two nonzero vectors, robust for small angles
inline double angle_between(Vec2 a, Vec2 b) {
    return std::atan2(std::fabs(cross(a, b)), dot(a, b));
}

struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Vec2 operator*(Vec2 v) const {
        return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y};
    }
    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }
    Mat2 operator-(const Mat2& o) const {
        return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22};
    }
    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }
    double max_abs() const {
        return std::max(std::max(std::fabs(a11), std::fabs(a12)),
                        std::max(std::fabs(a21), std::fabs(a22)));
    }
    // inverse of a unit-determinant matrix (adjugate)
    Mat2 inverse_unit_det() const { return {a22, -a12, -a21, a11}; }
};

// real eigenvalues of a 2x2 with unit determinant and |trace| > 2, as
// (expanding, contracting).  The contracting one is recovered as 1/lambda,
// which avoids the cancellation in (trace +- sqrt(trace^2-4))/2.
inline std::pair<double, double> eigenvalues_unit_det(double trace) {
    if (std::fabs(trace) <= 2.0)
        throw domain_error("eigenvalues_unit_det: matrix is not hyperbolic");
    const double disc = std::sqrt(trace * trace - 4.0);
    const double lambda = trace > 0 ? 0.5 * (trace + disc) : 0.5 * (trace - disc);
    return {lambda, 1.0 / lambda};
}

// ---------------------------------------------------------------------------
// dense LU solve with partial pivoting (row-major).  The orbit solver's
// block-cyclic systems stay small (2K x 2K with K <= ~100), so a plain dense
// factorization is both simplest and numerically safe: every entry keeps
// single-step magnitude.

inline void solve_dense(std::vector<double>& a, std::vector<double>& b, int n) {
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
        int best = col;
        double best_v = std::fabs(a[col * n + col]);
        for (int r = col + 1; r < n; ++r) {
            const double v = std::fabs(a[r * n + col]);
            if (v > best_v) { best = r; best_v = v; }
        }
        if (best_v == 0.0) throw solver_error("singular linear system");
        if (best != col) {
            for (int c = 0; c < n; ++c) std::swap(a[best * n + c], a[col * n + c]);
            std::swap(b[best], b[col]);
        }
        const double pivot = a[col * n + col];
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / pivot;
            if (f == 0.0) continue;
            a[r * n + col] = 0.0;
            for (int c = col + 1; c < n; ++c) a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r * n + c] * b[c];
        b[r] = s / a[r * n + r];
    }
}

// ---------------------------------------------------------------------------
// reproducible RNG streams: one splitmix64-derived seed per chunk so results
// do not depend on the number of worker threads.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
    std::uint64_t s = seed ^ (0x5851f42d4c957f2dull * (chunk + 1));
    return splitmix64(s);
}

// pairwise summation; MC reductions use this for order stability
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline unsigned worker_count() {
    if (const char* env = std::getenv("FBL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// run fn(chunk_index) for chunk_index in [0, n_chunks); chunks are
// independent and results must be written to per-chunk slots.
inline void for_each_chunk(std::size_t n_chunks,
                           const std::function<void(std::size_t)>& fn) {
    const unsigned workers = std::min<std::size_t>(worker_count(), n_chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < n_chunks; c += workers) fn(c);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace fbl
