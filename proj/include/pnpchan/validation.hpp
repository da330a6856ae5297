#pragma once

/**
 * @file validation.hpp
 * @brief End-to-end checks of the library against closed-form oracles and structural
 * properties. Used by the `validate` CLI command and by the acceptance program.
 *
 * Every check is deterministic for a given seed and records the measured quantities it
 * compared, so reports can be diffed byte for byte.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/fast_dynamics.hpp"
#include "pnpchan/foliation.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/singular_orbit.hpp"
#include "pnpchan/steady_asymptotics.hpp"
#include "pnpchan/transient_solver.hpp"

namespace pnpchan::validation {

struct CheckResult {
    std::string name;
    bool passed = true;
    std::vector<std::pair<std::string, double>> values;  ///< measured quantities, in insertion order
    std::string detail;

    /// Records `value` and folds `ok` into the verdict.
    void expect(const std::string& key, double value, bool ok) {
        values.emplace_back(key, value);
        passed = passed && ok;
    }
    void record(const std::string& key, double value) { values.emplace_back(key, value); }
};

namespace detail {

inline SteadyProblem make_problem(BoundaryData b, double mu = 0.01, ChannelProfile profile = ChannelProfile::constant(1.0),
                                  IonSpecies sp = {}) {
    SteadyProblem p;
    p.profile = std::move(profile);
    p.species = sp;
    p.boundary = b;
    p.mu = mu;
    return p;
}

/// Runs `body`, turning a library error into a failed check with the message as detail.
template <class F>
CheckResult guarded(const std::string& name, F&& body) {
    CheckResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = e.what();
    }
    return r;
}

inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(salt)};
    return std::mt19937_64(seq);
}

inline double rel_err(double value, double ref) { return std::abs(value - ref) / std::max(std::abs(ref), 1e-300); }

}  // namespace detail

/// Reference problem alpha = (1,1), D = (1,1), l = (1,1), r = (2,2), phi0 = 0, h = 1.
inline SteadyProblem standard_problem(double mu = 0.01) { return detail::make_problem({0.0, 1.0, 1.0, 2.0, 2.0}, mu); }

/// Reference problem with s = 0: l = (4,1), r = (2,2), phi0 = 1.
inline SteadyProblem s0_problem(double mu = 0.01) { return detail::make_problem({1.0, 4.0, 1.0, 2.0, 2.0}, mu); }

/// Finite-mu fluxes approach the limiting fluxes monotonically and at first order.
inline CheckResult flux_convergence(const std::string& name, const SteadyProblem& problem,
                                    const std::vector<double>& mus = {0.04, 0.02, 0.01}) {
    return detail::guarded(name, [&](CheckResult& r) {
        const auto study = mu_convergence_study(problem, mus);
        r.record("limit_J1", study.limit.J1);
        r.record("limit_J2", study.limit.J2);
        for (std::size_t i = 0; i < study.rows.size(); ++i) {
            const auto& row = study.rows[i];
            const std::string tag = "mu=" + std::to_string(row.mu).substr(0, 6);
            r.expect(tag + " converged", row.ok ? 1.0 : 0.0, row.ok);
            r.record(tag + " J1", row.J1);
            r.record(tag + " J2", row.J2);
            r.record(tag + " rel_err", row.rel_err);
            if (i > 0) {
                r.expect(tag + " rel_err decreased", row.rel_err < study.rows[i - 1].rel_err ? 1.0 : 0.0,
                         row.rel_err < study.rows[i - 1].rel_err);
                r.expect(tag + " order", row.order, row.order >= 0.7 && row.order <= 1.3);
            }
        }
        r.expect("terminal rel_err", study.rows.back().rel_err, study.rows.back().rel_err < 0.02);
    });
}

/// s = 0: closed-form flux equals the regular-layer oracle; the BVP agrees within 5%.
inline CheckResult removable_singularity() {
    return detail::guarded("removable singularity at s = 0", [](CheckResult& r) {
        const auto p = s0_problem(0.01);
        const auto f = limiting_fluxes(p);
        // Oracle from the layer landing points alone: w is constant on the regular layer, phi is
        // linear in \int h^{-1}, and J1 = -J2 = -w (phi(1) - phi(0)) / (2 rho0).
        const auto left = boundary_layer_endpoint(p, Side::Left);
        const auto right = boundary_layer_endpoint(p, Side::Right);
        const double oracle = -0.5 * left.w_limit * (right.phi_limit - left.phi_limit);
        r.expect("|J1 - oracle|", std::abs(f.J1 - oracle), std::abs(f.J1 - oracle) < 1e-12);
        r.expect("|J1 - 2(1+ln2)|", std::abs(f.J1 - 2.0 * (1.0 + std::numbers::ln2)),
                 std::abs(f.J1 - 2.0 * (1.0 + std::numbers::ln2)) < 1e-12);
        const auto num = extract_fluxes(solve_steady_bvp(p));
        r.expect("bvp J1 rel_err", detail::rel_err(num.J1, f.J1), detail::rel_err(num.J1, f.J1) < 0.05);
        r.expect("bvp J2 rel_err", detail::rel_err(num.J2, f.J2), detail::rel_err(num.J2, f.J2) < 0.05);
    });
}

/// Equal boundary charges: the exact solution is reproduced for several profiles and mu.
inline CheckResult exact_solution_reproduction() {
    return detail::guarded("equal-k exact solution", [](CheckResult& r) {
        const IonSpecies sp{1.0, 1.0, 1.5, 0.7};
        const double k = 1.5, phi0 = 0.8;
        const std::vector<std::pair<std::string, ChannelProfile>> profiles{
            {"constant", ChannelProfile::constant(1.0)},
            {"affine", ChannelProfile::affine(0.5, 1.0)},
            {"bump", ChannelProfile::bump(1.0, 0.5, 0.15)}};
        double field_err = 0.0, flux_err = 0.0;
        for (const auto& [label, profile] : profiles) {
            for (double mu : {0.1, 0.01}) {
                const auto p = detail::make_problem({phi0, k, k, k, k}, mu, profile, sp);
                const auto sol = solve_steady_bvp(p);
                const double rho0 = geometry_factor(profile).rho0;
                for (std::size_t i = 0; i < sol.x.size(); ++i) {
                    // independent evaluation of phi0 \int_x^1 h^{-1} / rho0
                    const double phi = phi0 * inverse_area_integral(profile, sol.x[i], 1.0, 1e-13) / rho0;
                    field_err = std::max({field_err, std::abs(sol.fields.phi[i] - phi),
                                          std::abs(sol.fields.c1[i] - k / sp.alpha1),
                                          std::abs(sol.fields.c2[i] - k / sp.alpha2)});
                }
                const auto J = extract_fluxes(sol);
                flux_err = std::max({flux_err, std::abs(J.Jbar1 - sp.D1 * k * phi0 / rho0),
                                     std::abs(J.Jbar2 + sp.D2 * k * phi0 / rho0)});
            }
        }
        r.expect("max nodal error", field_err, field_err < 1e-6);
        r.expect("max flux error", flux_err, flux_err < 1e-6);
    });
}

/// Layer orbits of l = (4,1) (left) and r = (2,2) (right) land on the predicted equilibria.
inline CheckResult layer_orbit_landing() {
    return detail::guarded("layer orbit landing", [](CheckResult& r) {
        const auto p = s0_problem(0.01);
        const auto left = integrate_layer(p, Side::Left, 0.0, 1e-10);
        const auto right = integrate_layer(p, Side::Right, 0.0, 1e-10);
        const auto dist = [](const FastState& z, double phi, double w) {
            return std::max({std::abs(z.phi - phi), std::abs(z.u), std::abs(z.v), std::abs(z.w - w)});
        };
        const double dl = dist(left.terminal, 1.0 + std::numbers::ln2, 4.0);  // phi0 + ln(sqrt(l1 / l2))
        const double dr = dist(right.terminal, 0.0, 4.0);
        r.expect("left terminal distance", dl, dl < 1e-6);
        r.expect("right terminal distance", dr, dr < 1e-6);
        double drift = 0.0, defect = 0.0;
        for (const auto* o : {&left, &right}) {
            for (int k = 0; k < 3; ++k) {
                drift = std::max(drift, o->diagnostics.max_integral_drift[k]);
                defect = std::max(defect, o->diagnostics.accumulated_step_defect[k]);
            }
        }
        r.expect("max H drift", drift, drift < 1e-8);
        r.expect("accumulated step defect", defect, defect < 1e-8);
        // The right side is electroneutral: its orbit is the constant equilibrium and has no tail.
        const double slope = tail_decay_rate(left);
        r.expect("left tail slope", slope, std::abs(slope + 2.0) < 0.05 * 2.0);
        r.record("right orbit samples", static_cast<double>(right.states.size()));
    });
}

/// Random volume-normalized profiles have rho0 >= 1 (equality only when constant), and fluxes
/// scale as 1/rho0.
inline CheckResult geometry_inequality(std::uint64_t seed, int trials = 100) {
    return detail::guarded("geometry factor inequality", [&](CheckResult& r) {
        auto rng = detail::stream(seed, 5);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        const auto base = s0_problem(0.01);
        const double JR1 = limiting_fluxes(base).J1;  // rho0 = 1
        double min_excess = std::numeric_limits<double>::infinity(), scale_err = 0.0;
        int nonconstant_equal = 0;
        for (int i = 0; i < trials; ++i) {
            ChannelProfile p;
            switch (i % 3) {
                case 0: p = ChannelProfile::affine(0.2 + U(rng), 2.0 * U(rng) - 0.15); break;
                case 1: p = ChannelProfile::bump(0.3 + U(rng), 2.0 * U(rng) - 0.25, 0.05 + 0.3 * U(rng)); break;
                default: {
                    std::vector<double> x(9), y(9);
                    for (int j = 0; j < 9; ++j) {
                        x[j] = j / 8.0;
                        y[j] = 0.3 + U(rng);
                    }
                    p = ChannelProfile::sampled(x, y);
                }
            }
            const auto normalized = normalize_volume(p);
            const double rho0 = geometry_factor(normalized, 1e-12).rho0;
            min_excess = std::min(min_excess, rho0 - 1.0);
            if (!(rho0 > 1.0)) ++nonconstant_equal;
            auto q = base;
            q.profile = normalized;
            const auto f = limiting_fluxes(q);
            scale_err = std::max(scale_err, detail::rel_err(f.J1 * rho0, JR1));
        }
        const double constant_excess = geometry_factor(normalize_volume(ChannelProfile::constant(3.7)), 1e-12).rho0 - 1.0;
        r.expect("min rho0 - 1 (nonconstant)", min_excess, min_excess >= -1e-10);
        r.expect("nonconstant with rho0 <= 1", nonconstant_equal, nonconstant_equal == 0);
        r.expect("|rho0 - 1| (constant)", std::abs(constant_excess), std::abs(constant_excess) < 1e-10);
        r.expect("max rel err of J rho0", scale_err, scale_err < 1e-12);
    });
}

/// Random transient runs started in the invariant region stay in it.
inline CheckResult invariant_region(std::uint64_t seed, int trials = 50) {
    return detail::guarded("invariant region", [&](CheckResult& r) {
        auto rng = detail::stream(seed, 6);
        std::uniform_real_distribution<double> conc(0.2, 3.0), bias(-2.0, 2.0), logmu(std::log(0.01), std::log(0.2)),
            unit(0.0, 1.0);
        double worst_low = std::numeric_limits<double>::infinity(), worst_high = -std::numeric_limits<double>::infinity();
        int violations = 0;
        for (int trial = 0; trial < trials; ++trial) {
            SteadyProblem p;
            p.boundary = {bias(rng), conc(rng), conc(rng), conc(rng), conc(rng)};
            p.species = {trial % 3 == 0 ? 2.0 : 1.0, trial % 5 == 0 ? 2.0 : 1.0, 1.0, trial % 2 == 0 ? 0.5 : 1.0};
            p.mu = std::exp(logmu(rng));
            const double M = invariant_region_bound(p.boundary, p.species);
            TransientOptions o;
            o.N = 100;
            o.T = 0.1;
            TransientSystem sys(p, o);
            const std::size_t n = sys.mesh().size();
            std::vector<double> c1(n), c2(n);
            for (std::size_t i = 0; i < n; ++i) {
                c1[i] = M * (0.01 + 0.99 * unit(rng)) / p.species.alpha1;
                c2[i] = M * (0.01 + 0.99 * unit(rng)) / p.species.alpha2;
            }
            const auto run = run_transient(sys, sys.initial_state(c1, c2));
            worst_low = std::min(worst_low, run.monitor.min_charge);
            worst_high = std::max(worst_high, run.monitor.max_charge - M);
            if (run.monitor.violated) ++violations;
        }
        r.expect("runs with excursions", violations, violations == 0);
        r.expect("min alpha c", worst_low, worst_low >= -1e-10);
        r.expect("max alpha c - M", worst_high, worst_high <= 1e-10);
    });
}

/// Equal-charge transient run: monotone Lyapunov functional with exponential decay.
inline CheckResult lyapunov_decay() {
    return detail::guarded("Lyapunov decay", [](CheckResult& r) {
        const auto p = detail::make_problem({1.0, 1.0, 1.0, 1.0, 1.0}, 0.01);  // k = 1, phi0 = 1, lambda = 1e4
        TransientOptions o;
        o.N = 400;
        o.T = 1.5;
        const auto run = run_transient(
            p, [](double x) { return 1.0 + 0.3 * std::sin(std::numbers::pi * x); },
            [](double x) { return 1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * x); }, o);
        const auto& tr = *run.lyapunov;
        const auto fit = fit_log_tail(tr);
        double err = 0.0;
        const auto& f = run.final_state.fields;
        for (std::size_t i = 0; i < f.size(); ++i) {
            err = std::max({err, std::abs(f.phi[i] - tr.reference.phi[i]), std::abs(f.c1[i] - tr.reference.c1[i]),
                            std::abs(f.c2[i] - tr.reference.c2[i])});
        }
        r.record("L(0)", tr.L.front());
        r.record("steps", static_cast<double>(run.accepted_steps));
        r.expect("max L increase per step", tr.max_increase(), tr.max_increase() <= 1e-12);
        r.expect("final L", tr.L.back(), tr.L.back() < 1e-10);
        r.expect("tail R^2", fit.r_squared, fit.r_squared > 0.99);
        r.expect("tail slope", fit.slope, fit.slope < 0.0);
        r.expect("final sup error", err, err < 1e-5);
    });
}

/// Jacobian determinant, eigen-data linearization and manifold membership.
inline CheckResult structural_identities(std::uint64_t seed) {
    return detail::guarded("structural identities", [&](CheckResult& r) {
        auto rng = detail::stream(seed, 8);
        std::uniform_real_distribution<double> G(0.05, 5.0), S(-3.0, 3.0), Y(-1.0, 1.0);
        double det_err = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const double g = G(rng);
            const auto J = jacobian_products(g, S(rng), Y(rng), Y(rng));
            det_err = std::max(det_err, std::abs(J.det_J_inv - g * g) / (g * g));
        }
        r.expect("max rel |det J^-1 - g^2|", det_err, det_err < 1e-13);

        std::uniform_real_distribution<double> W(0.2, 6.0), A(0.5, 3.0), T(0.0, 1.0);
        const auto prof = ChannelProfile::bump(0.8, 0.5, 0.25);
        double lin_err = 0.0;
        for (int i = 0; i < 50; ++i) {
            const IonSpecies sp{A(rng), A(rng), 1.0, 1.0};
            const FastState eq{0.2, 0.0, 0.0, W(rng), 0.1, 0.3, T(rng)};
            const auto e = eigen_normal(eq, prof, sp);
            for (const auto& [lam, n] : {std::pair{e.lambda_plus, e.n_plus}, std::pair{e.lambda_minus, e.n_minus}}) {
                const double eps = 1e-6;
                auto zp = eq.to_array(), zm = eq.to_array();
                for (int k = 0; k < 7; ++k) {
                    zp[k] += eps * n[k];
                    zm[k] -= eps * n[k];
                }
                const auto fp = fast_field(FastState::from_array(zp), prof, sp, 0.0).to_array();
                const auto fm = fast_field(FastState::from_array(zm), prof, sp, 0.0).to_array();
                for (int k = 0; k < 7; ++k) lin_err = std::max(lin_err, std::abs((fp[k] - fm[k]) / (2 * eps) - lam * n[k]));
            }
        }
        r.expect("max linearization residual", lin_err, lin_err < 1e-6);

        const auto p = s0_problem(0.01);
        const auto orbit = integrate_layer(p, Side::Left, 0.0, 1e-10);
        int on = 0, off = 0;
        for (const auto& z : orbit.states) {
            if (manifold_membership(z, orbit.landing, p.profile, p.species, 1e-3)) ++on;
            auto moved = z;
            moved.w += 0.1;
            if (!manifold_membership(moved, orbit.landing, p.profile, p.species, 1e-3)) ++off;
        }
        const double n = static_cast<double>(orbit.states.size());
        r.expect("fraction of orbit states on the manifold", on / n, on == static_cast<int>(orbit.states.size()));
        r.expect("fraction of perturbed states rejected", off / n, off == static_cast<int>(orbit.states.size()));
    });
}

/// Foliation with a nonconstant flat-ended wall: zero normal derivative, axis values = data.
inline CheckResult foliation_construction() {
    return detail::guarded("foliation construction", [](CheckResult& r) {
        const auto h = [](double X) { return 1.0 + 0.5 * std::sin(3.0 * X) + X * X; };
        const auto H = build_foliation(h, WallFunction::flared(0.2, 0.6));
        double normal = 0.0, axis = 0.0;
        for (double X : {0.1, 0.3, 0.5, 0.72, 0.9}) {
            for (double theta : {0.0, 1.1, 2.5, 4.0}) normal = std::max(normal, std::abs(wall_normal_derivative(H, X, theta)));
        }
        for (int i = 0; i <= 20; ++i) axis = std::max(axis, std::abs(H(i / 20.0, 0.0, 0.0) - h(i / 20.0)));
        r.expect("max |dH/dn| on the wall", normal, normal < 1e-5);
        r.expect("max |H(X,0,0) - h(X)|", axis, axis < 1e-8);
    });
}

/// Invariant suite run by the `validate` command.
inline std::vector<CheckResult> run_suite(std::uint64_t seed, int random_trials) {
    std::vector<CheckResult> out;
    out.push_back(flux_convergence("first-order flux convergence (s = 0 problem)", s0_problem()));
    out.push_back(removable_singularity());
    out.push_back(exact_solution_reproduction());
    out.push_back(layer_orbit_landing());
    out.push_back(geometry_inequality(seed, std::max(random_trials, 3)));
    out.push_back(invariant_region(seed, random_trials));
    out.push_back(lyapunov_decay());
    out.push_back(structural_identities(seed));
    out.push_back(foliation_construction());
    return out;
}

}  // namespace pnpchan::validation
