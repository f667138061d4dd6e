#pragma once

// Event-driven simulator for the two balls.  Free flight is exactly
// parabolic, so the trajectory is reconstructed only at event times: floor
// bounces of the lower ball and elastic ball-ball collisions.  This module
// never uses the closed-form return map; it is the independent physical
// oracle the closed forms are tested against.

#include <functional>
#include <limits>
#include <optional>

#include "fbl/section.hpp"

namespace fbl {

struct FlowState {
    double x1 = 0.0;
    double v1 = 0.0;
    double x2 = 0.0;
    double v2 = 0.0;
    double t = 0.0;
};

enum class EventKind { floor_bounce, ball_ball, section_return };

struct Event {
    EventKind kind;
    double time;       // absolute time of the event
    FlowState after;   // state just after the collision rule was applied
    bool ambiguous;    // floor and ball-ball closer than eps_boundary
};

inline double total_energy(const FlowState& s, const MassParam& mp) {
    return 0.5 * mp.m * sq(s.v1) + 0.5 * (1.0 - mp.m) * sq(s.v2)
         + mp.m * s.x1 + (1.0 - mp.m) * s.x2;
}

// elastic exchange with m1 + m2 = 1; valid for any mass split, also equal masses
inline std::pair<double, double> ball_collision(double v1, double v2, double m) {
    return {(2.0 * m - 1.0) * v1 + 2.0 * (1.0 - m) * v2,
            2.0 * m * v1 - (2.0 * m - 1.0) * v2};
}

// positive root of x + v t - t^2/2 = 0, evaluated without cancellation
inline double time_to_floor(double x, double v) {
    const double disc = std::sqrt(v * v + 2.0 * x);
    if (v >= 0.0) return v + disc;
    return 2.0 * x / (disc - v);
}

// time until contact; infinity when the balls are separating
inline double time_to_contact(const FlowState& s) {
    const double closing = s.v1 - s.v2;
    if (closing <= 0.0) return std::numeric_limits<double>::infinity();
    return (s.x2 - s.x1) / closing;
}

inline FlowState free_flight(const FlowState& s, double dt) {
    return {s.x1 + s.v1 * dt - 0.5 * dt * dt, s.v1 - dt,
            s.x2 + s.v2 * dt - 0.5 * dt * dt, s.v2 - dt,
            s.t + dt};
}

inline Event next_event(const FlowState& s, const MassParam& mp,
                        double eps_boundary = defaults::eps_boundary) {
    const double tf = time_to_floor(s.x1, s.v1);
    const double tb = time_to_contact(s);
    if (!(tf > 0.0) || !std::isfinite(tf))
        throw internal_error("no future floor event from a valid state");
    Event ev;
    ev.ambiguous = std::isfinite(tb) && std::fabs(tf - tb) < eps_boundary;
    if (tb < tf) {
        FlowState a = free_flight(s, tb);
        const double contact = 0.5 * (a.x1 + a.x2);
        a.x1 = a.x2 = contact;
        std::tie(a.v1, a.v2) = ball_collision(a.v1, a.v2, mp.m);
        ev.kind = EventKind::ball_ball;
        ev.time = a.t;
        ev.after = a;
    } else {
        FlowState a = free_flight(s, tf);
        a.x1 = 0.0;  // land exactly; kills accumulated position drift
        a.v1 = -a.v1;
        ev.kind = EventKind::floor_bounce;
        ev.time = a.t;
        ev.after = a;
    }
    return ev;
}

// section coordinates of a floor state (x1 = 0, v1 outgoing)
inline SectionPoint section_coords(const FlowState& s, const MassParam& mp) {
    return {0.5 * mp.m * sq(s.v1), s.v2 - s.v1};
}

// inverse: place the system at the section.  x2 follows from total energy 1/2.
inline FlowState lift_to_flow(SectionPoint p, const MassParam& mp) {
    const double v1 = std::sqrt(2.0 * p.h / mp.m);
    const double v2 = p.z + v1;
    const double x2 = (0.5 - p.h - 0.5 * (1.0 - mp.m) * v2 * v2) / (1.0 - mp.m);
    if (!(x2 > 0.0))
        throw invalid_state("lift_to_flow: upper ball at or below the floor");
    return {0.0, v1, x2, v2, 0.0};
}

struct ReturnResult {
    SectionPoint point;
    double time = 0.0;
    int bumps = 0;
    bool ambiguous = false;
};

// Simulate one full return to the section.  From a section state the balls
// first collide, then the lower one bumps on the floor until a floor hit
// whose next collision is ball-ball; that hit is the return.  The bump count
// is the number of floor hits strictly before it.
inline ReturnResult poincare_return(SectionPoint p, const MassParam& mp,
                                    double eps_boundary = defaults::eps_boundary) {
    if (!in_phase_space(p, mp))
        throw invalid_state("poincare_return: point outside the section domain");
    FlowState s = lift_to_flow(p, mp);
    ReturnResult out;

    Event ev = next_event(s, mp, eps_boundary);
    out.ambiguous = ev.ambiguous;
    if (ev.kind != EventKind::ball_ball)
        throw internal_error("section point whose first event is not ball-ball");
    s = ev.after;

    for (;;) {
        ev = next_event(s, mp, eps_boundary);
        out.ambiguous = out.ambiguous || ev.ambiguous;
        if (ev.kind != EventKind::floor_bounce)
            throw internal_error("ball-ball collision before the next floor hit");
        s = ev.after;
        // at the floor: does the ball-ball collision come before the next hit?
        const double tb = time_to_contact(s);
        const double tf = time_to_floor(0.0, s.v1);
        if (std::isfinite(tb) && std::fabs(tf - tb) < eps_boundary)
            out.ambiguous = true;
        if (tb < tf) {
            out.point = section_coords(s, mp);
            out.time = s.t;
            return out;
        }
        ++out.bumps;
    }
}

// event log for trajectory dumps: start row, then one row per event, with the
// returning floor hits labelled section_return
inline void simulate_trajectory(
    SectionPoint p, const MassParam& mp, int returns,
    const std::function<void(const FlowState&, const char*)>& sink,
    double eps_boundary = defaults::eps_boundary) {
    if (!in_phase_space(p, mp))
        throw invalid_state("simulate_trajectory: point outside the section domain");
    FlowState s = lift_to_flow(p, mp);
    sink(s, "start");
    for (int r = 0; r < returns;) {
        Event ev = next_event(s, mp, eps_boundary);
        s = ev.after;
        if (ev.kind == EventKind::ball_ball) {
            sink(s, "ball_ball");
            continue;
        }
        const double tb = time_to_contact(s);
        const double tf = time_to_floor(0.0, s.v1);
        if (tb < tf) {
            sink(s, "section_return");
            ++r;
        } else {
            sink(s, "floor_bounce");
        }
    }
}

// ---------------------------------------------------------------------------
// suspension flow over the section, advanced by whole returns plus remainder

struct FlowPoint {
    SectionPoint base;
    double offset = 0.0;  // time since the section crossing, in [0, tau(base))
    bool ambiguous = false;
};

inline FlowPoint flow_evolve(FlowPoint x, double t, const MassParam& mp,
                             double eps_boundary = defaults::eps_boundary) {
    if (t < 0.0) throw domain_error("flow_evolve: negative duration");
    double remaining = x.offset + t;
    SectionPoint base = x.base;
    bool amb = x.ambiguous;
    for (;;) {
        const ReturnResult r = poincare_return(base, mp, eps_boundary);
        amb = amb || r.ambiguous;
        if (remaining < r.time) return {base, remaining, amb};
        remaining -= r.time;  // (x, tau(x)) ~ (Tx, 0)
        base = r.point;
    }
}

}  // namespace fbl
