#pragma once

/**
 * @file commands.hpp
 * @brief Command dispatch for the `pnp` tool: each command turns a RunConfig into a RunReport
 * (JSON results plus CSV tables) without touching the file system.
 */

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/fast_dynamics.hpp"
#include "pnpchan/io/config.hpp"
#include "pnpchan/io/report.hpp"
#include "pnpchan/steady_asymptotics.hpp"
#include "pnpchan/transient_solver.hpp"
#include "pnpchan/validation.hpp"

namespace pnpchan::io {

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"steady-asymptotic", "steady-bvp", "layers", "transient", "sweep", "validate"};
    return names;
}

/// Process exit status for a library error: 2 validation, 3 non-convergence, 4 I/O.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::IoError: return 4;
        case ErrorKind::NonConvergence:
        case ErrorKind::NotConverged:
        case ErrorKind::StagnantStep:
        case ErrorKind::StepRejected:
        case ErrorKind::DivergentOrbit:
        case ErrorKind::QuadratureFailure:
        case ErrorKind::RootFindFailure:
        case ErrorKind::SingularSystem: return 3;
        default: return 2;
    }
}

namespace detail {

inline const char* flux_note() {
    return "J1, J2: reduced flux densities (independent of D); Jbar_k = D_k J_k: physical flux densities; "
           "dimensionless units of the scaled problem";
}

inline nlohmann::json flux_json(const FluxPair& f) {
    return {{"J1", f.J1}, {"J2", f.J2}, {"Jbar1", f.Jbar1}, {"Jbar2", f.Jbar2}, {"scaling", flux_note()}};
}

inline nlohmann::json endpoint_json(const BoundaryLayerEndpoint& e) {
    return {{"side", to_string(e.side)},
            {"has_layer", e.has_layer},
            {"u_amplitude", e.u_amplitude},
            {"phi_limit", e.phi_limit},
            {"w_limit", e.w_limit}};
}

/// Worker count for parallel sweeps: PNP_NUM_THREADS when set (>= 1), else the hardware count.
inline unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("PNP_NUM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1) fail(ErrorKind::ValidationError, "PNP_NUM_THREADS must be a positive integer");
        n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, count) on up to `workers` threads. Results go to caller-owned slots.
template <class Job>
void parallel_for(std::size_t count, unsigned workers, Job&& job) {
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) job(i);
        });
    }
    for (auto& t : pool) t.join();
}

/// splitmix64 step: independent per-point seeds from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline RunReport steady_asymptotic(const RunConfig& cfg) {
    const auto p = cfg.effective_problem();
    const auto layer = regular_layer(p);
    const auto check = check_regular_layer(p, layer);
    RunReport r;
    r.results["rho0"] = layer.rho0();
    r.results["fluxes"] = flux_json(layer.fluxes());
    r.results["endpoints"] = {{"left", endpoint_json(boundary_layer_endpoint(p, Side::Left))},
                              {"right", endpoint_json(boundary_layer_endpoint(p, Side::Right))}};
    r.results["regular_layer"] = {{"nu0", layer.nu0()},
                                  {"w0", layer.w0()},
                                  {"w_end_error", check.w_end_error},
                                  {"phi_end_error", check.phi_end_error}};
    Table t{"regular_layer.csv", {"x", "phi", "c1", "c2", "w", "p"}, {}};
    for (int i = 0; i <= 200; ++i) {
        const double x = i / 200.0;
        const double S = layer.inverse_area(x);
        const double w = layer.w_from_area(S);
        t.add({x, layer.phi_from_area(S), layer.c1(x), layer.c2(x), w, layer.p(x)});
    }
    r.tables.push_back(std::move(t));
    return r;
}

inline RunReport steady_bvp(const RunConfig& cfg) {
    const auto p = cfg.effective_problem();
    const auto sol = solve_steady_bvp(p, cfg.solver);
    const auto ex = extract_fluxes_with_spread(sol);
    const auto limit = limiting_fluxes(p);
    RunReport r;
    r.results["fluxes"] = flux_json(ex.fluxes);
    r.results["limit_fluxes"] = flux_json(limit);
    r.results["rel_err_vs_limit"] = {{"J1", validation::detail::rel_err(ex.fluxes.J1, limit.J1)},
                                     {"J2", validation::detail::rel_err(ex.fluxes.J2, limit.J2)}};
    r.results["flux_spread"] = {{"J1", ex.spread1}, {"J2", ex.spread2}};
    r.results["residual_norm"] = sol.residual_norm;
    r.results["newton_iterations"] = sol.newton_iterations;
    r.results["nodes"] = sol.x.size();
    auto stages = nlohmann::json::array();
    for (const auto& s : sol.stages) {
        stages.push_back({{"mu", s.mu}, {"iterations", s.iterations}, {"converged", s.converged}, {"residual", s.residual}});
    }
    r.results["continuation"] = stages;
    Table t{"solution.csv", {"x", "phi", "c1", "c2"}, {}};
    for (std::size_t i = 0; i < sol.x.size(); ++i) t.add({sol.x[i], sol.fields.phi[i], sol.fields.c1[i], sol.fields.c2[i]});
    r.tables.push_back(std::move(t));
    return r;
}

inline RunReport layers(const RunConfig& cfg) {
    const auto p = cfg.effective_problem();
    RunReport r;
    for (Side side : {Side::Left, Side::Right}) {
        const auto orbit = integrate_layer(p, side, cfg.layers.xi_max, cfg.layers.tol);
        Table t{std::string(to_string(side)) + "_layer.csv", {"xi", "phi", "u", "v", "w", "H1", "H2", "H3"}, {}};
        for (std::size_t i = 0; i < orbit.states.size(); ++i) {
            const auto& z = orbit.states[i];
            const auto H = integrals(z, p.profile, p.species);
            t.add({orbit.xi[i], z.phi, z.u, z.v, z.w, H.H1, H.H2, H.H3});
        }
        const auto& d = orbit.diagnostics;
        nlohmann::json j = {{"has_layer", orbit.branch != 0.0},
                            {"branch", orbit.branch},
                            {"samples", orbit.states.size()},
                            {"terminal", {{"phi", orbit.terminal.phi}, {"u", orbit.terminal.u}, {"v", orbit.terminal.v}, {"w", orbit.terminal.w}}},
                            {"landing", {{"phi", orbit.landing.phi}, {"w", orbit.landing.w}}},
                            {"terminal_error", d.terminal_error},
                            {"max_integral_drift", d.max_integral_drift},
                            {"accumulated_step_defect", d.accumulated_step_defect},
                            {"accepted_steps", d.accepted_steps},
                            {"rejected_steps", d.rejected_steps}};
        if (orbit.branch != 0.0) j["tail_decay_rate"] = tail_decay_rate(orbit);
        r.results[to_string(side)] = j;
        r.tables.push_back(std::move(t));
    }
    return r;
}

inline RunReport transient(const RunConfig& cfg) {
    const auto p = cfg.effective_problem();
    TransientSystem sys(p, cfg.transient);
    const auto& x = sys.mesh().nodes;
    const auto& bd = p.boundary;
    const auto& sp = p.species;
    std::vector<double> c1(x.size()), c2(x.size());
    if (cfg.initial.kind == "random") {
        const double M = invariant_region_bound(bd, sp);
        std::mt19937_64 rng(derive_seed(cfg.seed, 0));
        std::uniform_real_distribution<double> U(cfg.initial.low, cfg.initial.high);
        for (std::size_t i = 0; i < x.size(); ++i) {
            c1[i] = M * U(rng) / sp.alpha1;
            c2[i] = M * U(rng) / sp.alpha2;
        }
    } else {
        const double pi = std::numbers::pi;
        for (std::size_t i = 0; i < x.size(); ++i) {
            c1[i] = (bd.l1 + (bd.r1 - bd.l1) * x[i]) * (1.0 + cfg.initial.amplitude1 * std::sin(cfg.initial.mode1 * pi * x[i]));
            c2[i] = (bd.l2 + (bd.r2 - bd.l2) * x[i]) * (1.0 + cfg.initial.amplitude2 * std::sin(cfg.initial.mode2 * pi * x[i]));
        }
    }
    const auto run = run_transient(sys, sys.initial_state(std::move(c1), std::move(c2)));
    RunReport r;
    r.results["lambda"] = p.lambda();
    r.results["final_time"] = run.final_state.t;
    r.results["accepted_steps"] = run.accepted_steps;
    r.results["rejected_steps"] = run.rejected_steps;
    r.results["last_dt"] = run.last_dt;
    r.results["monitor"] = {{"M", run.monitor.M},
                            {"tolerance", run.monitor.tol},
                            {"min_alpha_c", run.monitor.min_charge},
                            {"max_alpha_c", run.monitor.max_charge},
                            {"violated", run.monitor.violated}};
    Table traj{"trajectory.csv", {"t", "x", "c1", "c2", "phi"}, {}};
    for (const auto& s : run.snapshots) {
        for (std::size_t i = 0; i < s.x.size(); ++i) traj.add({s.t, s.x[i], s.fields.c1[i], s.fields.c2[i], s.fields.phi[i]});
    }
    r.tables.push_back(std::move(traj));
    if (run.lyapunov) {
        const auto& tr = *run.lyapunov;
        const auto fit = fit_log_tail(tr);
        double sup = 0.0;
        const auto& f = run.final_state.fields;
        for (std::size_t i = 0; i < f.size(); ++i) {
            sup = std::max({sup, std::abs(f.c1[i] - tr.reference.c1[i]), std::abs(f.c2[i] - tr.reference.c2[i]),
                            std::abs(f.phi[i] - tr.reference.phi[i])});
        }
        // L is comparable to the squared L2 distance to the reference; the ratio is a diagnostic only.
        double l2 = 0.0;
        const auto& m = sys.metrics();
        for (std::size_t i = 0; i < f.size(); ++i) {
            l2 += m.hv[i] * (std::pow(f.c1[i] - tr.reference.c1[i], 2) + std::pow(f.c2[i] - tr.reference.c2[i], 2));
        }
        r.results["lyapunov"] = {{"k", tr.k},
                                 {"initial", tr.L.front()},
                                 {"final", tr.L.back()},
                                 {"max_increase", tr.max_increase()},
                                 {"tail_slope", fit.slope},
                                 {"tail_r_squared", fit.r_squared},
                                 {"final_sup_distance", sup},
                                 {"final_L_over_L2_squared", l2 > 0.0 ? tr.L.back() / l2 : 0.0}};
        Table lt{"lyapunov.csv", {"t", "L"}, {}};
        for (std::size_t i = 0; i < tr.t.size(); ++i) lt.add({tr.t[i], tr.L[i]});
        r.tables.push_back(std::move(lt));
    }
    return r;
}

/// Problem with the sweep axis set to `value`.
inline SteadyProblem sweep_point(const RunConfig& cfg, double value) {
    RunConfig c = cfg;
    auto& p = c.problem;
    const auto& axis = cfg.sweep.axis;
    if (axis == "mu") {
        p.mu = value;
    } else if (axis == "phi0") {
        p.boundary.phi0 = value;
    } else if (axis == "l1") {
        p.boundary.l1 = value;
    } else if (axis == "l2") {
        p.boundary.l2 = value;
    } else if (axis == "r1") {
        p.boundary.r1 = value;
    } else if (axis == "r2") {
        p.boundary.r2 = value;
    } else if (axis == "bump_amplitude") {
        const auto* b = std::get_if<profile::Bump>(&p.profile.kind());
        if (!b) fail(ErrorKind::ValidationError, "sweep axis bump_amplitude needs a bump geometry");
        p.profile = ChannelProfile::bump(b->base, value, b->width);
    } else if (axis == "affine_slope") {
        const auto* a = std::get_if<profile::AffineArea>(&p.profile.kind());
        if (!a) fail(ErrorKind::ValidationError, "sweep axis affine_slope needs an affine geometry");
        p.profile = ChannelProfile::affine(a->a, value);
    }
    validate(p);
    return c.effective_problem();
}

inline RunReport sweep(const RunConfig& cfg) {
    const auto& values = cfg.sweep.values;
    if (values.empty()) fail(ErrorKind::ValidationError, "'sweep.values' must list at least one value");
    const bool bvp = cfg.sweep.command == "steady-bvp";
    struct Point {
        std::vector<double> row;
        std::string error;
        int code = 0;
    };
    std::vector<Point> points(values.size());
    const unsigned workers = worker_count(values.size());
    parallel_for(values.size(), workers, [&](std::size_t i) {
        auto& pt = points[i];
        try {
            const auto p = sweep_point(cfg, values[i]);
            const double rho0 = geometry_factor(p.profile).rho0;
            const auto limit = limiting_fluxes(p, rho0);
            if (bvp) {
                const auto f = extract_fluxes(solve_steady_bvp(p, cfg.solver));
                const double err = std::max(validation::detail::rel_err(f.J1, limit.J1), validation::detail::rel_err(f.J2, limit.J2));
                pt.row = {values[i], rho0, f.J1, f.J2, f.Jbar1, f.Jbar2, limit.J1, limit.J2, err};
            } else {
                pt.row = {values[i], rho0, limit.J1, limit.J2, limit.Jbar1, limit.Jbar2};
            }
        } catch (const Error& e) {
            pt.error = e.what();
            pt.code = exit_code(e.kind());
        }
    });
    std::vector<std::string> columns{"value", "rho0", "J1", "J2", "Jbar1", "Jbar2"};
    if (bvp) columns.insert(columns.end(), {"J1_limit", "J2_limit", "rel_err"});
    Table t{"sweep.csv", columns, {}};
    RunReport r;
    auto failures = nlohmann::json::array();
    auto seeds = nlohmann::json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        seeds.push_back(derive_seed(cfg.seed, i));
        if (points[i].error.empty()) {
            t.add(points[i].row);
        } else {
            std::vector<double> row(columns.size(), std::numeric_limits<double>::quiet_NaN());
            row[0] = values[i];
            t.add(row);
            failures.push_back({{"value", values[i]}, {"error", points[i].error}});
        }
    }
    r.results["axis"] = cfg.sweep.axis;
    r.results["command"] = cfg.sweep.command;
    r.results["points"] = values.size();
    r.results["point_seeds"] = seeds;
    r.results["failures"] = failures;
    r.results["scaling"] = flux_note();
    r.passed = failures.empty();
    r.tables.push_back(std::move(t));
    return r;
}

inline RunReport validate_suite(const RunConfig& cfg) {
    const auto checks = validation::run_suite(cfg.seed, cfg.validate.random_trials);
    RunReport r;
    auto arr = nlohmann::json::array();
    std::size_t passed = 0;
    for (const auto& c : checks) {
        nlohmann::json values = nlohmann::json::array();
        for (const auto& [k, v] : c.values) values.push_back({{"quantity", k}, {"value", v}});
        arr.push_back({{"name", c.name}, {"passed", c.passed}, {"values", values}, {"detail", c.detail}});
        passed += c.passed ? 1 : 0;
    }
    r.results["checks"] = arr;
    r.results["passed_count"] = passed;
    r.results["total"] = checks.size();
    r.passed = passed == checks.size();
    return r;
}

}  // namespace detail

/// Runs one command. Library errors propagate as pnpchan::Error.
inline RunReport dispatch(const std::string& command, const RunConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    RunReport r;
    if (command == "steady-asymptotic") {
        r = detail::steady_asymptotic(cfg);
    } else if (command == "steady-bvp") {
        r = detail::steady_bvp(cfg);
    } else if (command == "layers") {
        r = detail::layers(cfg);
    } else if (command == "transient") {
        r = detail::transient(cfg);
    } else if (command == "sweep") {
        r = detail::sweep(cfg);
    } else if (command == "validate") {
        r = detail::validate_suite(cfg);
    } else {
        fail(ErrorKind::ValidationError, "unknown command '" + command + "'");
    }
    r.command = command;
    r.config = to_json(cfg);
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

}  // namespace pnpchan::io
