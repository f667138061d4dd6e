#pragma once

// Symbolic coding of orbits: the itinerary of a point lists the region index
// of every iterate, indexed relative to the point itself (position 0).

#include <algorithm>
#include <limits>
#include <numeric>
#include <vector>

#include "fbl/dynamics.hpp"

namespace fbl {

struct Itinerary {
    std::vector<int> symbols;
    int offset = 0;        // list index holding position 0
    bool periodic = false; // bi-infinite periodic extension of `symbols`
    bool truncated = false;

    int first_position() const { return -offset; }
    int last_position() const { return static_cast<int>(symbols.size()) - offset - 1; }

    bool has(long pos) const {
        return periodic || (pos >= first_position() && pos <= last_position());
    }

    int at(long pos) const {
        const long n = static_cast<long>(symbols.size());
        long idx = pos + offset;
        if (periodic) {
            idx %= n;
            if (idx < 0) idx += n;
        } else if (idx < 0 || idx >= n) {
            throw domain_error("itinerary position out of range");
        }
        return symbols[static_cast<std::size_t>(idx)];
    }

    Itinerary shifted(long by) const {
        Itinerary out = *this;
        out.offset = static_cast<int>(offset + by);
        if (periodic) {
            const long n = static_cast<long>(symbols.size());
            long o = out.offset % n;
            if (o < 0) o += n;
            out.offset = static_cast<int>(o);
        }
        return out;
    }
};

inline Itinerary constant_itinerary(int symbol, int period = 1) {
    return {std::vector<int>(static_cast<std::size_t>(period), symbol), 0, true, false};
}

// the shadowing family: 2n zeros then n^2 ones, one period starting at
// position -n, so positions -n..n-1 are 0 and n..n^2+n-1 are 1
inline Itinerary pn_itinerary(int n) {
    if (n < 1) throw domain_error("pn_itinerary: n must be >= 1");
    std::vector<int> w(static_cast<std::size_t>(n) * n + 2 * n, 1);
    std::fill(w.begin(), w.begin() + 2 * n, 0);
    return {std::move(w), n, true, false};
}

// forward/backward region symbols of a concrete point; stops early with the
// truncated flag if an iterate lands in an ambiguity band
inline Itinerary itinerary_of(SectionPoint p, const MassParam& mp,
                              int n_fwd, int n_bwd,
                              double eps_boundary = defaults::eps_boundary) {
    Itinerary out;
    out.offset = n_bwd;
    out.symbols.assign(static_cast<std::size_t>(n_fwd + n_bwd), 0);

    SectionPoint q = p;
    for (int i = 0; i < n_fwd; ++i) {
        const Region r = region_of(q, mp, eps_boundary);
        if (r.ambiguous) {
            out.symbols.resize(static_cast<std::size_t>(n_bwd + i));
            out.truncated = true;
            break;
        }
        out.symbols[static_cast<std::size_t>(n_bwd + i)] = r.n;
        if (i + 1 < n_fwd) q = return_map(q, mp, r.n);
    }
    q = p;
    for (int i = 1; i <= n_bwd && !out.truncated; ++i) {
        const SectionPoint ip = involution(q, mp);
        const Region r = region_of(ip, mp, eps_boundary);
        if (r.ambiguous) {
            // drop the unfilled backward tail
            out.symbols.erase(out.symbols.begin(),
                              out.symbols.begin() + (n_bwd - i + 1));
            out.offset = i - 1;
            out.truncated = true;
            break;
        }
        q = involution(return_map(ip, mp, r.n), mp);
        out.symbols[static_cast<std::size_t>(n_bwd - i)] = r.n;
    }
    return out;
}

struct SeparationRecord {
    long s_plus = 0;
    long s_minus = 0;
    long s = 0;
    bool saturated = false;  // identical over the whole comparable range
};

// past and future separation times:
//   s+ = min{ k >= 0 : a_k != b_k },  s- = min{ |k| : k < 0, a_k != b_k }
inline SeparationRecord separation(const Itinerary& a, const Itinerary& b) {
    long fwd_limit, bwd_limit;
    if (a.periodic && b.periodic) {
        // differences repeat with the joint period
        long pa = static_cast<long>(a.symbols.size());
        long pb = static_cast<long>(b.symbols.size());
        long l = pa / std::gcd(pa, pb) * pb;
        fwd_limit = l;
        bwd_limit = l;
    } else {
        fwd_limit = std::min(a.periodic ? std::numeric_limits<long>::max()
                                        : static_cast<long>(a.last_position()) + 1,
                             b.periodic ? std::numeric_limits<long>::max()
                                        : static_cast<long>(b.last_position()) + 1);
        bwd_limit = std::min(a.periodic ? std::numeric_limits<long>::max()
                                        : -static_cast<long>(a.first_position()),
                             b.periodic ? std::numeric_limits<long>::max()
                                        : -static_cast<long>(b.first_position()));
        if (fwd_limit < 0) fwd_limit = 0;
        if (bwd_limit < 0) bwd_limit = 0;
    }
    SeparationRecord rec;
    rec.s_plus = fwd_limit;
    rec.s_minus = bwd_limit;
    bool fwd_found = false, bwd_found = false;
    for (long k = 0; k < fwd_limit; ++k) {
        if (a.at(k) != b.at(k)) { rec.s_plus = k; fwd_found = true; break; }
    }
    for (long k = 1; k <= bwd_limit; ++k) {
        if (a.at(-k) != b.at(-k)) { rec.s_minus = k; bwd_found = true; break; }
    }
    rec.saturated = !(fwd_found && bwd_found);
    rec.s = std::min(rec.s_plus, rec.s_minus);
    return rec;
}

}  // namespace fbl
