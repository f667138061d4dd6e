// Command-line front end: wires the library modules into reproducible
// experiments that emit CSV/JSON artifacts.
//
// Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 assertion
// failure (a monotonicity or direction check did not hold).

#include <CLI11.hpp>

#include "fbl/fbl.hpp"
#include "fbl/io.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid_input = 2;
constexpr int exit_solver_failure = 3;
constexpr int exit_assertion_failure = 4;

struct MGrid {
    double lo = 0.0;
    double hi = 0.0;
    int steps = 1;

    std::vector<double> values() const {
        std::vector<double> v;
        if (steps <= 1) {
            v.push_back(lo);
            return v;
        }
        for (int i = 0; i < steps; ++i)
            v.push_back(lo + (hi - lo) * i / (steps - 1));
        return v;
    }
};

MGrid parse_grid(const std::string& spec) {
    MGrid g;
    const auto c1 = spec.find(':');
    const auto c2 = spec.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
        throw fbl::domain_error("--m-grid expects lo:hi:steps");
    g.lo = std::stod(spec.substr(0, c1));
    g.hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
    g.steps = std::stoi(spec.substr(c2 + 1));
    if (g.steps < 1) throw fbl::domain_error("--m-grid needs at least one step");
    return g;
}

// "pn:<n>" or a comma/compact digit word like "0,1,1" / "011"
fbl::Itinerary parse_itinerary(const std::string& spec) {
    if (spec.rfind("pn:", 0) == 0)
        return fbl::pn_itinerary(std::stoi(spec.substr(3)));
    std::vector<int> symbols;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (spec[i] == ',') continue;
        if (!std::isdigit(static_cast<unsigned char>(spec[i]))) {
            std::size_t used = 0;
            const int v = std::stoi(spec.substr(i), &used);
            symbols.push_back(v);
            i += used - 1;
            continue;
        }
        symbols.push_back(spec[i] - '0');
    }
    if (symbols.empty()) throw fbl::domain_error("empty itinerary");
    return fbl::Itinerary{symbols, 0, true, false};
}

// orbit solves only make sense when the itinerary's alphabet lives in a
// full-shift interval containing m (fixed points are checked directly)
void require_alphabet_interval(const fbl::Itinerary& itin, const fbl::MassParam& mp) {
    int lo = itin.symbols[0], hi = itin.symbols[0];
    for (int s : itin.symbols) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    if (lo == hi) {
        if (!fbl::fixed_point(lo, mp).physical)
            throw fbl::domain_error("fixed point F_" + std::to_string(lo)
                                    + " is not physical at this m");
        return;
    }
    if (hi != lo + 1)
        throw fbl::domain_error("itinerary alphabet must be {k-1, k} for some k");
    const auto [a, b] = fbl::full_shift_interval(hi);
    if (mp.m < a || mp.m > b)
        throw fbl::domain_error("m outside the full-shift interval ["
                                + std::to_string(a) + ", " + std::to_string(b)
                                + "] for alphabet {" + std::to_string(lo) + ","
                                + std::to_string(hi) + "}");
}

fbl::json orbit_to_json(const fbl::PeriodicOrbit& orbit, const fbl::OrbitDerivative& der) {
    fbl::json j;
    j["m"] = orbit.m;
    j["period_discrete"] = orbit.points.size();
    std::vector<int> symbols;
    for (std::size_t i = 0; i < orbit.points.size(); ++i)
        symbols.push_back(orbit.itinerary.at(static_cast<long>(i)));
    j["itinerary"] = symbols;
    fbl::json pts = fbl::json::array();
    for (const auto& p : orbit.points) pts.push_back({p.h, p.z});
    j["points"] = pts;
    j["flow_period"] = orbit.flow_period;
    j["multipliers"] = {orbit.lambda_total, orbit.mu_total};
    j["residual"] = orbit.residual;
    j["dtau_dm"] = der.dtau_dm;
    return j;
}

void write_json(const std::string& out_path, const fbl::json& j) {
    fbl::OutputTarget target(out_path);
    target.stream() << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------

int cmd_simulate(double m, double h, double z, int returns, const std::string& out,
                 const std::string& format) {
    const fbl::MassParam mp(m);
    const fbl::SectionPoint p{h, z};
    if (!fbl::in_phase_space(p, mp))
        throw fbl::domain_error("initial point is outside the phase space");
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"h", fbl::fmt_full(h)},
                        {"z", fbl::fmt_full(z)}, {"returns", std::to_string(returns)}};
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("simulate", cfg);
        fbl::json rows = fbl::json::array();
        fbl::simulate_trajectory(p, mp, returns, [&](const fbl::FlowState& s, const char* kind) {
            rows.push_back({{"t", s.t}, {"x1", s.x1}, {"v1", s.v1},
                            {"x2", s.x2}, {"v2", s.v2}, {"event", kind},
                            {"energy", fbl::total_energy(s, mp)}});
        });
        j["events"] = rows;
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "simulate", cfg);
        csv.header({"t", "x1", "v1", "x2", "v2", "event", "energy"});
        fbl::simulate_trajectory(p, mp, returns, [&](const fbl::FlowState& s, const char* kind) {
            csv.field(s.t).field(s.x1).field(s.v1).field(s.x2).field(s.v2)
               .field(std::string(kind)).field(fbl::total_energy(s, mp));
            csv.end_row();
        });
    }
    return exit_ok;
}

int cmd_map(double m, double h, double z, int iterations, const std::string& out,
            const std::string& format) {
    const fbl::MassParam mp(m);
    fbl::SectionPoint p{h, z};
    if (!fbl::in_phase_space(p, mp))
        throw fbl::domain_error("initial point is outside the phase space");
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"h", fbl::fmt_full(h)},
                        {"z", fbl::fmt_full(z)}, {"iterations", std::to_string(iterations)}};
    struct Row { int i; fbl::SectionPoint p; int region; bool amb; double tau; };
    std::vector<Row> rows;
    for (int i = 0; i < iterations; ++i) {
        const fbl::Region r = fbl::region_of(p, mp);
        const double tau = fbl::return_time(p, mp, r.n);
        rows.push_back({i, p, r.n, r.ambiguous, tau});
        if (r.ambiguous) break;
        p = fbl::return_map(p, mp, r.n);
    }
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("map", cfg);
        fbl::json arr = fbl::json::array();
        for (const Row& r : rows)
            arr.push_back({{"i", r.i}, {"h", r.p.h}, {"z", r.p.z},
                           {"region", r.region}, {"ambiguous", r.amb}, {"tau", r.tau}});
        j["iterates"] = arr;
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "map", cfg);
        csv.header({"i", "h", "z", "region", "ambiguous", "tau"});
        for (const Row& r : rows) {
            csv.field(r.i).field(r.p.h).field(r.p.z).field(r.region)
               .field(r.amb).field(r.tau);
            csv.end_row();
        }
    }
    return exit_ok;
}

int cmd_orbit(const std::string& itin_spec, double m, const std::string& out,
              const std::string& format) {
    const fbl::MassParam mp(m);
    const fbl::Itinerary itin = parse_itinerary(itin_spec);
    require_alphabet_interval(itin, mp);
    const fbl::PeriodicOrbit orbit = fbl::find_orbit(itin, mp);
    const fbl::OrbitDerivative der = fbl::orbit_dm(orbit);
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"itinerary", itin_spec}};
    if (format == "csv") {
        fbl::OutputTarget target(out);
        fbl::CsvWriter csv(target.stream(), "orbit", cfg);
        csv.header({"i", "symbol", "h", "z", "dh_dm", "dz_dm"});
        for (std::size_t i = 0; i < orbit.points.size(); ++i) {
            csv.field(static_cast<int>(i)).field(orbit.itinerary.at(static_cast<long>(i)))
               .field(orbit.points[i].h).field(orbit.points[i].z)
               .field(der.dpoints_dm[i].x).field(der.dpoints_dm[i].y);
            csv.end_row();
        }
        csv.comment("flow_period=" + fbl::fmt_full(orbit.flow_period));
        csv.comment("residual=" + fbl::fmt_full(orbit.residual));
        csv.comment("dtau_dm=" + fbl::fmt_full(der.dtau_dm));
    } else {
        fbl::json j = fbl::artifact_envelope("orbit", cfg);
        j["orbit"] = orbit_to_json(orbit, der);
        write_json(out, j);
    }
    return orbit.residual < 1e-10 ? exit_ok : exit_solver_failure;
}

int cmd_geometry(int k_max, const MGrid& grid, int shape_grid, const std::string& out,
                 const std::string& format) {
    fbl::ConfigEcho cfg{{"k_max", std::to_string(k_max)},
                        {"m_grid", fbl::fmt_full(grid.lo) + ":" + fbl::fmt_full(grid.hi)
                                   + ":" + std::to_string(grid.steps)}};
    struct IntervalRow { int k; double lo, hi; };
    struct MarginRow { int k; double m; fbl::QuadrangularCheck chk; };
    struct ShapeRow { int i, j; double m; fbl::ShapeReport rep; };
    std::vector<IntervalRow> intervals;
    std::vector<MarginRow> margins;
    std::vector<ShapeRow> shapes;

    for (int k = 1; k <= k_max; ++k) {
        const auto [lo, hi] = fbl::full_shift_interval(k);
        intervals.push_back({k, lo, hi});
    }
    for (double m : grid.values()) {
        const fbl::MassParam mp(m);
        for (int k = 1; k <= k_max; ++k)
            margins.push_back({k, m, fbl::verify_quadrangular(k, mp)});
        for (int i = 0; i <= 1; ++i)
            for (int j = 0; j <= 1; ++j)
                shapes.push_back({i, j, m, fbl::classify_intersection_shape(i, j, mp, shape_grid)});
    }

    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("geometry", cfg);
        for (const auto& r : intervals)
            j["intervals"].push_back({{"k", r.k}, {"m_lo", r.lo}, {"m_hi", r.hi}});
        for (const auto& r : margins)
            j["margins"].push_back({{"k", r.k}, {"m", r.m}, {"holds", r.chk.holds},
                                    {"margin_lo", r.chk.margin_lo},
                                    {"margin_hi", r.chk.margin_hi}});
        for (const auto& r : shapes)
            j["shapes"].push_back({{"i", r.i}, {"j", r.j}, {"m", r.m},
                                   {"by_threshold", fbl::to_string(r.rep.by_threshold)},
                                   {"arc_count", r.rep.arc_count}, {"agree", r.rep.agree}});
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "geometry", cfg);
        csv.header({"record", "k", "m", "m_lo", "m_hi", "margin_lo", "margin_hi",
                    "holds", "i", "j", "shape", "arc_count", "agree"});
        for (const auto& r : intervals) {
            csv.field(std::string("interval")).field(r.k).field(std::string(""))
               .field(r.lo).field(r.hi).field(std::string("")).field(std::string(""))
               .field(std::string("")).field(std::string("")).field(std::string(""))
               .field(std::string("")).field(std::string("")).field(std::string(""));
            csv.end_row();
        }
        for (const auto& r : margins) {
            csv.field(std::string("margin")).field(r.k).field(r.m)
               .field(std::string("")).field(std::string(""))
               .field(r.chk.margin_lo).field(r.chk.margin_hi).field(r.chk.holds)
               .field(std::string("")).field(std::string("")).field(std::string(""))
               .field(std::string("")).field(std::string(""));
            csv.end_row();
        }
        for (const auto& r : shapes) {
            csv.field(std::string("shape")).field(std::string("")).field(r.m)
               .field(std::string("")).field(std::string("")).field(std::string(""))
               .field(std::string("")).field(std::string("")).field(r.i).field(r.j)
               .field(std::string(fbl::to_string(r.rep.by_threshold)))
               .field(r.rep.arc_count).field(r.rep.agree);
            csv.end_row();
        }
    }
    return exit_ok;
}

int cmd_ratio_scan(int k_max, const MGrid& grid, int cf_depth, const std::string& out,
                   const std::string& format) {
    fbl::ConfigEcho cfg{{"k_max", std::to_string(k_max)}, {"depth", std::to_string(cf_depth)},
                        {"m_grid", fbl::fmt_full(grid.lo) + ":" + fbl::fmt_full(grid.hi)
                                   + ":" + std::to_string(grid.steps)}};
    struct Row {
        int k; double m, ratio, dratio; long long maxq; std::string quotients;
    };
    std::vector<Row> rows;
    for (int k = 1; k <= k_max; ++k) {
        for (double m : grid.values()) {
            const fbl::MassParam mp(m);
            const double ratio = fbl::ratio_limit_general(k, mp);
            const fbl::ContinuedFraction cf = fbl::continued_fraction(ratio, cf_depth);
            std::string qs;
            for (std::size_t i = 0; i < cf.quotients.size(); ++i)
                qs += (i ? ";" : "") + std::to_string(cf.quotients[i]);
            rows.push_back({k, m, ratio, fbl::dratio_limit_general_dm(k, mp),
                            fbl::max_partial_quotient(cf), qs});
        }
    }
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("ratio-scan", cfg);
        for (const auto& r : rows)
            j["rows"].push_back({{"k", r.k}, {"m", r.m}, {"ratio", r.ratio},
                                 {"dratio_dm", r.dratio}, {"cf_max_quotient", r.maxq},
                                 {"cf_quotients", r.quotients}});
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "ratio-scan", cfg);
        csv.header({"k", "m", "ratio", "dratio_dm", "cf_max_quotient", "cf_quotients"});
        for (const auto& r : rows) {
            csv.field(r.k).field(r.m).field(r.ratio).field(r.dratio)
               .field(r.maxq).field(r.quotients);
            csv.end_row();
        }
    }
    return exit_ok;
}

int cmd_convergence(const MGrid& grid, int n_max, const std::string& out,
                    const std::string& format) {
    fbl::ConfigEcho cfg{{"n_max", std::to_string(n_max)},
                        {"m_grid", fbl::fmt_full(grid.lo) + ":" + fbl::fmt_full(grid.hi)
                                   + ":" + std::to_string(grid.steps)}};
    bool monotone_ok = true;
    bool partial = false;
    std::vector<fbl::RatioRecord> rows;
    for (double m : grid.values()) {
        const fbl::MassParam mp(m);
        try {
            const auto recs = fbl::c1_convergence(mp, n_max);
            for (std::size_t i = 3; i < recs.size(); ++i) {
                monotone_ok = monotone_ok && recs[i].err0 < recs[i - 1].err0
                                          && recs[i].err1 < recs[i - 1].err1;
            }
            rows.insert(rows.end(), recs.begin(), recs.end());
        } catch (const fbl::solver_error&) {
            partial = true;
        }
    }
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("convergence", cfg);
        for (const auto& r : rows)
            j["rows"].push_back({{"m", r.m}, {"n", r.n}, {"period", r.period},
                                 {"ratio_n", r.ratio_n}, {"ratio_limit", r.ratio_limit},
                                 {"err0", r.err0}, {"dratio_n_dm", r.dratio_n_dm},
                                 {"dratio_n_dm_fd", r.dratio_n_dm_fd},
                                 {"dratio_limit_dm", r.dratio_limit_dm},
                                 {"err1", r.err1}, {"residual", r.residual}});
        j["monotone_from_n4"] = monotone_ok;
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "convergence", cfg);
        csv.header({"m", "n", "period", "ratio_n", "ratio_limit", "err0",
                    "dratio_n_dm", "dratio_n_dm_fd", "dratio_limit_dm", "err1", "residual"});
        for (const auto& r : rows) {
            csv.field(r.m).field(r.n).field(r.period).field(r.ratio_n).field(r.ratio_limit)
               .field(r.err0).field(r.dratio_n_dm).field(r.dratio_n_dm_fd)
               .field(r.dratio_limit_dm).field(r.err1).field(r.residual);
            csv.end_row();
        }
        csv.comment(std::string("monotone_from_n4=") + (monotone_ok ? "1" : "0"));
    }
    if (partial || !monotone_ok) return exit_assertion_failure;  // partial table or broken monotonicity
    return exit_ok;
}

int cmd_lyapunov(double m, long iterations, std::uint64_t seed, const std::string& out,
                 const std::string& format) {
    const fbl::MassParam mp(m);
    const fbl::LyapunovResult r = fbl::lyapunov_exponent(mp, iterations, seed);
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"iterations", std::to_string(iterations)},
                        {"seed", std::to_string(seed)}};
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("lyapunov", cfg);
        j["top"] = r.top;
        j["second"] = r.second;
        j["sum"] = r.top + r.second;
        j["iterations"] = r.iterations;
        j["resampled"] = r.resampled;
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "lyapunov", cfg);
        csv.header({"m", "seed", "iterations", "top", "second", "sum"});
        csv.field(m).field(static_cast<long long>(seed)).field(r.iterations)
           .field(r.top).field(r.second).field(r.top + r.second);
        csv.end_row();
    }
    return r.top > 0.0 ? exit_ok : exit_assertion_failure;
}

int cmd_appendix(double m, long samples, int depth, std::uint64_t seed,
                 const std::string& out) {
    const fbl::MassParam mp(m);
    const fbl::AngleContractionReport angle = fbl::angle_contraction_check(mp, samples, seed);
    const fbl::HolderDirectionFit holder = fbl::holder_direction_check(mp, depth, seed + 1);
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"samples", std::to_string(samples)},
                        {"depth", std::to_string(depth)}, {"seed", std::to_string(seed)}};
    fbl::json j = fbl::artifact_envelope("appendix", cfg);
    j["lambda_est"] = angle.lambda_est;
    j["max_angle_ratio"] = angle.max_angle_ratio;
    j["c_u"] = holder.c_u;
    j["gamma_u"] = holder.gamma_u;
    j["fit_quality"] = holder.r2_u;
    j["c_s"] = holder.c_s;
    j["gamma_s"] = holder.gamma_s;
    j["fit_quality_stable"] = holder.r2_s;
    write_json(out, j);
    const bool ok = angle.max_angle_ratio < 1.0 && angle.lambda_est > 1.0
                 && holder.gamma_u < 1.0;
    return ok ? exit_ok : exit_assertion_failure;
}

int cmd_correlate(double m, double t_max, long samples, std::uint64_t seed,
                  const std::string& out, const std::string& format) {
    const fbl::MassParam mp(m);
    const fbl::CorrelationCurve c = fbl::correlation_diagnostic(mp, t_max, samples, seed);
    fbl::ConfigEcho cfg{{"m", fbl::fmt_full(m)}, {"t_max", fbl::fmt_full(t_max)},
                        {"samples", std::to_string(samples)}, {"seed", std::to_string(seed)}};
    fbl::OutputTarget target(out);
    if (format == "json") {
        fbl::json j = fbl::artifact_envelope("correlate", cfg);
        j["t"] = c.t_grid;
        j["correlation"] = c.correlation;
        j["head_average"] = c.head_average;
        j["tail_average"] = c.tail_average;
        j["mc_sigma"] = c.mc_sigma;
        j["mixing_direction"] = c.mixing_direction;
        j["samples"] = c.samples;
        target.stream() << j.dump(2) << "\n";
    } else {
        fbl::CsvWriter csv(target.stream(), "correlate", cfg);
        csv.header({"t", "correlation"});
        for (std::size_t i = 0; i < c.t_grid.size(); ++i) {
            csv.field(c.t_grid[i]).field(c.correlation[i]);
            csv.end_row();
        }
        csv.comment("head_average=" + fbl::fmt_full(c.head_average));
        csv.comment("tail_average=" + fbl::fmt_full(c.tail_average));
        csv.comment("mc_sigma=" + fbl::fmt_full(c.mc_sigma));
        csv.comment(std::string("mixing_direction=") + (c.mixing_direction ? "1" : "0"));
    }
    return c.mixing_direction ? exit_ok : exit_assertion_failure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fbl: numerical laboratory for the two-falling-balls system"};
    app.require_subcommand(1);
    app.set_config("--config");

    double m = 0.7, h = 0.0, z = 0.0, t_max = 30.0;
    std::string m_grid_spec, itin_spec = "pn:2", out = "-", format = "csv";
    int returns = 10, iterations_i = 10, n_max = 8, k_max = 10, depth = 11, shape_grid = 150;
    long samples = 100000, lyap_iters = 1000000;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* cmd, bool needs_seed) {
        cmd->add_option("--out", out, "output path, - for stdout");
        cmd->add_option("--format", format, "csv or json")
            ->check(CLI::IsMember({"csv", "json"}));
        cmd->add_option("--seed", seed, needs_seed ? "RNG seed (required)" : "RNG seed")
            ->required(needs_seed);
    };

    auto* sim = app.add_subcommand("simulate", "event log of the continuous-time system");
    sim->add_option("--m", m, "mass of the lower ball, in (1/2, 1)");
    sim->add_option("--h0", h, "initial lower-ball energy")->required();
    sim->add_option("--z0", z, "initial velocity difference")->required();
    sim->add_option("--returns", returns, "number of section returns to simulate");
    add_common(sim, false);

    auto* mapc = app.add_subcommand("map", "iterate the return map from a point");
    mapc->add_option("--m", m, "mass parameter");
    mapc->add_option("--h0", h, "initial h")->required();
    mapc->add_option("--z0", z, "initial z")->required();
    mapc->add_option("--iterations", iterations_i, "number of iterates");
    add_common(mapc, false);

    auto* orb = app.add_subcommand("orbit", "solve a periodic orbit by its itinerary");
    orb->add_option("--m", m, "mass parameter");
    orb->add_option("--itinerary", itin_spec, "pn:<n> or a digit word like 011");
    add_common(orb, false);

    auto* geo = app.add_subcommand("geometry", "full-shift intervals, margins, shapes");
    geo->add_option("--m-grid", m_grid_spec, "lo:hi:steps");
    geo->add_option("--m", m, "single m (used when no grid is given)");
    geo->add_option("--k-max", k_max, "largest shift index k");
    geo->add_option("--shape-grid", shape_grid, "grid resolution for the arc census");
    add_common(geo, false);

    auto* rs = app.add_subcommand("ratio-scan", "fixed-point period ratios and CF reports");
    rs->add_option("--m-grid", m_grid_spec, "lo:hi:steps");
    rs->add_option("--m", m, "single m");
    rs->add_option("--k-max", k_max, "largest k");
    rs->add_option("--depth", depth, "continued-fraction depth");
    add_common(rs, false);

    auto* conv = app.add_subcommand("convergence", "ratio convergence of the shadowing orbits");
    conv->add_option("--m-grid", m_grid_spec, "lo:hi:steps, inside [2/3, 3/4]");
    conv->add_option("--m", m, "single m");
    conv->add_option("--n-max", n_max, "largest family index n");
    add_common(conv, false);

    auto* lyap = app.add_subcommand("lyapunov", "top Lyapunov exponent of the return map");
    lyap->add_option("--m", m, "mass parameter");
    lyap->add_option("--iterations", lyap_iters, "orbit length");
    add_common(lyap, true);

    auto* apx = app.add_subcommand("appendix", "cone contraction and direction regularity");
    apx->add_option("--m", m, "mass parameter");
    apx->add_option("--samples", samples, "angle-contraction sample count");
    apx->add_option("--depth", depth, "largest itinerary-agreement depth");
    add_common(apx, true);

    auto* corr = app.add_subcommand("correlate", "qualitative flow-correlation diagnostic");
    corr->add_option("--m", m, "mass parameter");
    corr->add_option("--t-max", t_max, "largest correlation time");
    corr->add_option("--samples", samples, "Monte Carlo sample count");
    add_common(corr, true);

    CLI11_PARSE(app, argc, argv);

    try {
        const MGrid grid = m_grid_spec.empty() ? MGrid{m, m, 1} : parse_grid(m_grid_spec);
        if (sim->parsed()) return cmd_simulate(m, h, z, returns, out, format);
        if (mapc->parsed()) return cmd_map(m, h, z, iterations_i, out, format);
        if (orb->parsed()) return cmd_orbit(itin_spec, m, out, format);
        if (geo->parsed()) return cmd_geometry(k_max, grid, shape_grid, out, format);
        if (rs->parsed()) return cmd_ratio_scan(k_max, grid, depth, out, format);
        if (conv->parsed()) return cmd_convergence(grid, n_max, out, format);
        if (lyap->parsed()) return cmd_lyapunov(m, lyap_iters, seed, out, format);
        if (apx->parsed()) return cmd_appendix(m, samples, depth, seed, out);
        if (corr->parsed()) return cmd_correlate(m, t_max, samples, seed, out, format);
    } catch (const fbl::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid_input;
    } catch (const fbl::invalid_state& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid_input;
    } catch (const fbl::solver_error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const fbl::fit_error& e) {
        std::cerr << "fit error: " << e.what() << "\n";
        return exit_solver_failure;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return exit_ok;
}
