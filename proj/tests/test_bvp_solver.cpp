#include "catch_amalgamated.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/singular_orbit.hpp"
#include "pnpchan/transient_solver.hpp"

using namespace pnpchan;

namespace {

SteadyProblem standard_problem(double mu) {
    SteadyProblem p;
    p.boundary = {0.0, 1.0, 1.0, 2.0, 2.0};
    p.mu = mu;
    return p;
}

SteadyProblem s0_problem(double mu) {
    SteadyProblem p;
    p.boundary = {1.0, 4.0, 1.0, 2.0, 2.0};
    p.mu = mu;
    return p;
}

std::vector<ChannelProfile> test_profiles() {
    return {ChannelProfile::constant(1.0), ChannelProfile::affine(0.5, 1.0), ChannelProfile::bump(1.0, 0.5, 0.15)};
}

}  // namespace

TEST_CASE("uniform mesh has nodes k/N", "[mesh]") {
    const auto m = build_layer_mesh(10, 0.01, Grading::Uniform);
    REQUIRE(m.size() == 11);
    for (std::size_t k = 0; k <= 10; ++k) CHECK(m[k] == Catch::Approx(k / 10.0).margin(1e-15));
}

TEST_CASE("tanh mesh clusters nodes in the layers", "[mesh]") {
    const auto m = build_layer_mesh(801, 0.01, Grading::Tanh);
    const auto in_layer = std::count_if(m.nodes.begin(), m.nodes.end(), [](double x) { return x <= 0.08; });
    CHECK(in_layer >= 200);
    CHECK(m.layer_width == Catch::Approx(0.08));
}

TEST_CASE("meshes are symmetric and strictly increasing", "[mesh][property]") {
    for (auto g : {Grading::Uniform, Grading::Tanh}) {
        for (std::size_t N : {10u, 11u, 64u, 801u}) {
            for (double mu : {0.3, 0.05, 0.01, 0.001}) {
                const auto m = build_layer_mesh(N, mu, g);
                REQUIRE_NOTHROW(validate(m));
                CHECK(m.nodes.front() == 0.0);
                CHECK(m.nodes.back() == 1.0);
                for (std::size_t i = 0; i <= N; ++i) CHECK(std::abs(m[i] + m[N - i] - 1.0) < 1e-14);
            }
        }
    }
}

TEST_CASE("mesh parameter checks", "[mesh]") {
    CHECK_THROWS_AS(build_layer_mesh(9, 0.01, Grading::Uniform), Error);
    CHECK_THROWS_AS(build_layer_mesh(100, 0.0, Grading::Tanh), Error);
    CHECK_THROWS_AS(build_layer_mesh(100, 0.01, Grading::Tanh, 1.0), Error);
    Mesh bad;
    bad.nodes = {0.0, 0.5, 0.5, 1.0};
    CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("solver option validation", "[bvp]") {
    SolverOptions o;
    CHECK_NOTHROW(validate(o));
    CHECK(o.N == 801);
    o.N = 10;
    CHECK_THROWS_AS(validate(o), Error);
    o = {};
    o.newton_tol = 0.0;
    CHECK_THROWS_AS(validate(o), Error);
    CHECK_THROWS_AS(solve_steady_bvp(standard_problem(0.0)), Error);
}

TEST_CASE("equal-k data is reproduced exactly", "[bvp][property]") {
    const IonSpecies sp{2.0, 1.0, 1.5, 0.7};
    const double k = 1.5;
    for (const auto& profile : test_profiles()) {
        for (double mu : {0.1, 0.01}) {
            SteadyProblem p;
            p.profile = profile;
            p.species = sp;
            p.boundary = {0.8, k / sp.alpha1, k / sp.alpha2, k / sp.alpha1, k / sp.alpha2};
            p.mu = mu;
            const auto sol = solve_steady_bvp(p);
            REQUIRE(sol.converged);
            const auto ref = equal_charge_reference(mesh_metrics(build_layer_mesh(801, mu, Grading::Tanh), profile),
                                                    p.boundary, sp);
            double err = 0.0;
            for (std::size_t i = 0; i < sol.x.size(); ++i) {
                err = std::max({err, std::abs(sol.fields.phi[i] - ref.phi[i]), std::abs(sol.fields.c1[i] - ref.c1[i]),
                                std::abs(sol.fields.c2[i] - ref.c2[i])});
            }
            CHECK(err < 1e-6);
            const double rho0 = geometry_factor(profile).rho0;
            const auto J = extract_fluxes(sol);
            CHECK(std::abs(J.J1 - k * p.boundary.phi0 / rho0) < 1e-6);
            CHECK(std::abs(J.J2 + k * p.boundary.phi0 / rho0) < 1e-6);
            CHECK(std::abs(J.Jbar1 - sp.D1 * k * p.boundary.phi0 / rho0) < 1e-6);
        }
    }
}

TEST_CASE("boundary values are pinned and concentrations stay positive", "[bvp][property]") {
    const auto sol = solve_steady_bvp(s0_problem(0.01));
    const auto& f = sol.fields;
    const std::size_t n = f.size() - 1;
    CHECK(f.phi[0] == 1.0);
    CHECK(f.phi[n] == 0.0);
    CHECK(f.c1[0] == 4.0);
    CHECK(f.c2[0] == 1.0);
    CHECK(f.c1[n] == 2.0);
    CHECK(f.c2[n] == 2.0);
    CHECK(*std::min_element(f.c1.begin(), f.c1.end()) > 0.0);
    CHECK(*std::min_element(f.c2.begin(), f.c2.end()) > 0.0);
}

TEST_CASE("zero bias with equal ends gives zero flux", "[bvp]") {
    SteadyProblem p;
    p.boundary = {0.0, 1.3, 0.65, 1.3, 0.65};
    p.species = {1.0, 2.0, 1.0, 1.0};
    p.mu = 0.02;
    const auto J = extract_fluxes(solve_steady_bvp(p));
    CHECK(std::abs(J.J1) < 1e-8);
    CHECK(std::abs(J.J2) < 1e-8);
}

TEST_CASE("standard problem matches the limiting flux", "[bvp]") {
    const auto ex = extract_fluxes_with_spread(solve_steady_bvp(standard_problem(0.005)));
    CHECK(std::abs(ex.fluxes.J1 + 1.0) < 0.02);
    CHECK(std::abs(ex.fluxes.J2 + 1.0) < 0.02);
    CHECK(ex.spread1 < 1e-6);
    CHECK(ex.spread2 < 1e-6);
}

TEST_CASE("cell fluxes are constant on converged solutions", "[bvp][property]") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> conc(0.5, 3.0), bias(-2.0, 2.0), mu(0.01, 0.1);
    for (int trial = 0; trial < 6; ++trial) {
        SteadyProblem p;
        p.boundary = {bias(rng), conc(rng), conc(rng), conc(rng), conc(rng)};
        p.mu = mu(rng);
        SolverOptions o;
        o.N = 401;
        const auto sol = solve_steady_bvp(p, o);
        const auto ex = extract_fluxes_with_spread(sol);
        CHECK(ex.spread1 < 1e-6);
        CHECK(ex.spread2 < 1e-6);
        // maximum-principle surrogate
        const double M = invariant_region_bound(p.boundary, p.species);
        for (std::size_t i = 0; i < sol.x.size(); ++i) {
            CHECK(sol.fields.c1[i] >= 0.0);
            CHECK(sol.fields.c2[i] >= 0.0);
            CHECK(p.species.alpha1 * sol.fields.c1[i] <= M + 1e-8);
            CHECK(p.species.alpha2 * sol.fields.c2[i] <= M + 1e-8);
        }
    }
}

TEST_CASE("mesh refinement changes fluxes by less than 0.1 percent", "[bvp][property]") {
    for (const auto& p : {standard_problem(0.01), s0_problem(0.01)}) {
        SolverOptions coarse, fine;
        coarse.N = 801;
        fine.N = 1601;
        const auto a = extract_fluxes(solve_steady_bvp(p, coarse));
        const auto b = extract_fluxes(solve_steady_bvp(p, fine));
        CHECK(std::abs(a.J1 - b.J1) < 1e-3 * std::abs(b.J1));
        CHECK(std::abs(a.J2 - b.J2) < 1e-3 * std::abs(b.J2));
    }
}

TEST_CASE("continuation converges within 50 Newton iterations per stage", "[bvp][property]") {
    for (double mu : {0.04, 0.01, 0.005}) {
        const auto sol = solve_steady_bvp(s0_problem(mu));
        REQUIRE(sol.converged);
        for (const auto& st : sol.stages) CHECK(st.iterations <= 50);
    }
}

TEST_CASE("continuation schedule is geometric and ends at the target", "[bvp]") {
    const auto s = continuation_schedule(0.01, 0.5, 0.5);
    REQUIRE(s.size() >= 2);
    CHECK(s.front() == 0.5);
    CHECK(s.back() == 0.01);
    for (std::size_t i = 1; i + 1 < s.size(); ++i) CHECK(s[i] == Catch::Approx(0.5 * s[i - 1]));
}

TEST_CASE("first-order convergence to the limiting fluxes", "[bvp]") {
    const auto study = mu_convergence_study(s0_problem(0.04), {0.04, 0.02, 0.01});
    REQUIRE(study.rows.size() == 3);
    for (const auto& r : study.rows) CHECK(r.ok);
    CHECK(study.rows[1].rel_err < study.rows[0].rel_err);
    CHECK(study.rows[2].rel_err < study.rows[1].rel_err);
    CHECK(study.rows[2].rel_err < 0.05);
    for (std::size_t i = 1; i < 3; ++i) {
        CHECK(study.rows[i].order >= 0.7);
        CHECK(study.rows[i].order <= 1.3);
    }
}

TEST_CASE("equal-k convergence study is exact at every mu", "[bvp]") {
    SteadyProblem p;
    p.profile = ChannelProfile::bump(1.0, 0.5, 0.15);
    p.boundary = {0.6, 2.0, 2.0, 2.0, 2.0};
    const auto study = mu_convergence_study(p, {0.04, 0.02, 0.01});
    for (const auto& r : study.rows) CHECK(r.rel_err < 1e-6);
}

TEST_CASE("convergence study rejects bad mu lists", "[bvp]") {
    CHECK_THROWS_AS(mu_convergence_study(s0_problem(0.01), {}), Error);
    CHECK_THROWS_AS(mu_convergence_study(s0_problem(0.01), {0.01, 0.02}), Error);
    CHECK_THROWS_AS(mu_convergence_study(s0_problem(0.01), {0.01, -0.01}), Error);
}

TEST_CASE("flux extraction requires convergence", "[bvp]") {
    DiscreteSolution s;
    s.converged = false;
    CHECK_THROWS_AS(extract_fluxes(s), Error);
}

TEST_CASE("composite initial guess converges to the same solution", "[bvp]") {
    SolverOptions lin, comp;
    comp.initial_guess = InitialGuess::Composite;
    const auto a = extract_fluxes(solve_steady_bvp(s0_problem(0.01), lin));
    const auto b = extract_fluxes(solve_steady_bvp(s0_problem(0.01), comp));
    CHECK(std::abs(a.J1 - b.J1) < 1e-8);
    CHECK(std::abs(a.J2 - b.J2) < 1e-8);
}

TEST_CASE("composite approximation stays within 5 mu of the discrete solution", "[bvp][asymptotics]") {
    for (const auto& p : {standard_problem(0.01), s0_problem(0.01)}) {
        const auto sol = solve_steady_bvp(p);
        const auto orbit = singular_orbit(p);
        double dist = 0.0;
        for (std::size_t i = 0; i < sol.x.size(); ++i) {
            const auto c = orbit.composite(sol.x[i], p.mu);
            dist = std::max({dist, std::abs(c.phi - sol.fields.phi[i]), std::abs(c.c1 - sol.fields.c1[i]),
                             std::abs(c.c2 - sol.fields.c2[i])});
        }
        CHECK(dist < 5.0 * p.mu);
    }
}
