#include "catch_amalgamated.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "pnpchan/fast_dynamics.hpp"
#include "pnpchan/singular_orbit.hpp"

using namespace pnpchan;
using Catch::Approx;

namespace {

constexpr double ln2 = std::numbers::ln2;

SteadyProblem make(BoundaryData b, IonSpecies s = {}, ChannelProfile p = ChannelProfile::constant(1.0)) {
    SteadyProblem pr;
    pr.profile = std::move(p);
    pr.species = s;
    pr.boundary = b;
    return pr;
}

FastState state(double phi, double u, double v, double w, double J1 = 0, double J2 = 0, double tau = 0) {
    return {phi, u, v, w, J1, J2, tau};
}

/// Central-difference Jacobian of the limiting field applied to a direction.
FastState::Array jacobian_times(const FastState& z, const FastState::Array& n, const ChannelProfile& prof,
                                const IonSpecies& sp) {
    const double eps = 1e-6;
    auto plus = z.to_array();
    auto minus = z.to_array();
    for (int k = 0; k < 7; ++k) {
        plus[k] += eps * n[k];
        minus[k] -= eps * n[k];
    }
    const auto fp = fast_field(FastState::from_array(plus), prof, sp, 0.0).to_array();
    const auto fm = fast_field(FastState::from_array(minus), prof, sp, 0.0).to_array();
    FastState::Array out{};
    for (int k = 0; k < 7; ++k) out[k] = (fp[k] - fm[k]) / (2 * eps);
    return out;
}

}  // namespace

TEST_CASE("fast field hand evaluations", "[fast]") {
    const auto h1 = ChannelProfile::constant(1.0);
    const IonSpecies sp{};
    const auto d = fast_field(state(0, 1, 0, 2), h1, sp, 0.0);
    CHECK(d.phi == 1.0);
    CHECK(d.u == 0.0);
    CHECK(d.v == 2.0);
    CHECK(d.w == 0.0);
    CHECK(d.tau == 0.0);

    const auto m = fast_field(state(0, 1, 0, 2, 1, 1), h1, sp, 0.1);
    CHECK(m.v == Approx(2.0));
    CHECK(m.w == Approx(-0.2));
    CHECK(m.tau == 0.1);
}

TEST_CASE("slow manifold is the equilibrium set of the limiting field", "[fast][property]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-2.0, 2.0), W(0.1, 5.0), T(0.0, 1.0);
    const auto prof = ChannelProfile::bump(1.0, 0.4, 0.2);
    const IonSpecies sp{1.0, 2.0, 1.0, 1.0};
    for (int i = 0; i < 200; ++i) {
        const auto eq = fast_field(state(U(rng), 0, 0, W(rng), U(rng), U(rng), T(rng)), prof, sp, 0.0);
        CHECK(eq.phi == 0.0);
        CHECK(eq.u == 0.0);
        CHECK(eq.v == 0.0);
        CHECK(eq.w == 0.0);
        const double u = U(rng), v = U(rng);
        if (u == 0.0 && v == 0.0) continue;
        const auto off = fast_field(state(0, u, v, W(rng), 0, 0, T(rng)), prof, sp, 0.0);
        CHECK((off.phi != 0.0 || off.u != 0.0 || off.v != 0.0 || off.w != 0.0));
    }
}

TEST_CASE("integrals by hand", "[fast]") {
    const auto h1 = ChannelProfile::constant(1.0);
    const auto H = integrals(state(0, 1, 0, 2), h1, IonSpecies{});
    CHECK(H.H1 == Approx(1.5));
    CHECK(H.H2 == Approx(-ln2));
    CHECK(H.H3 == Approx(ln2));

    const IonSpecies sp{1.0, 2.0, 1.0, 1.0};
    const auto Z = integrals(state(0.3, 0, 0, 3.0, 0.5, -0.2, 0.4), h1, sp);
    CHECK(Z.H1 == 3.0);
    CHECK(Z.H2 == Approx(0.3 - std::log(3.0) / 2.0));
    CHECK(Z.H3 == Approx(0.3 + std::log(3.0)));
    CHECK(Z.H4 == 0.5);
    CHECK(Z.H5 == -0.2);
    CHECK(Z.H6 == 0.4);

    CHECK_THROWS_AS(integrals(state(0, 0, -1, 1), h1, IonSpecies{}), Error);
}

TEST_CASE("eigen-data at slow-manifold equilibria", "[fast]") {
    const auto e = eigen_normal(state(0, 0, 0, 4), IonSpecies{});
    CHECK(e.lambda_plus == 2.0);
    CHECK(e.lambda_minus == -2.0);

    const auto f = eigen_normal(state(0, 0, 0, 1), IonSpecies{1.0, 2.0, 1.0, 1.0});
    const FastState::Array expected{1, 1, 1, 1, 0, 0, 0};
    for (int k = 0; k < 7; ++k) CHECK(f.n_plus[k] == Approx(expected[k]));

    CHECK_THROWS_AS(eigen_normal(state(0, 0, 0, 0), IonSpecies{}), Error);
    CHECK_THROWS_AS(eigen_normal(state(0, 0, 0, -1), IonSpecies{}), Error);
}

TEST_CASE("eigenvectors satisfy the numerical linearization", "[fast][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> W(0.2, 6.0), A(0.5, 3.0), T(0.0, 1.0);
    const auto prof = ChannelProfile::bump(0.8, 0.5, 0.25);
    for (int i = 0; i < 50; ++i) {
        const IonSpecies sp{A(rng), A(rng), 1.0, 1.0};
        const auto eq = state(0.2, 0, 0, W(rng), 0.1, 0.3, T(rng));
        const auto e = eigen_normal(eq, prof, sp);
        for (const auto& [lam, n] : {std::pair{e.lambda_plus, e.n_plus}, std::pair{e.lambda_minus, e.n_minus}}) {
            const auto Jn = jacobian_times(eq, n, prof, sp);
            for (int k = 0; k < 7; ++k) CHECK(std::abs(Jn[k] - lam * n[k]) < 1e-6);
        }
    }
}

TEST_CASE("boundary manifold points", "[fast]") {
    const auto h1 = ChannelProfile::constant(1.0);
    const auto L = boundary_point({0.25, 4, 1, 2, 2}, h1, IonSpecies{}, Side::Left, std::sqrt(2.0), 0.1, 0.2);
    CHECK(L == state(0.25, std::sqrt(2.0), -3.0, 5.0, 0.1, 0.2, 0.0));
    const auto R = boundary_point({0.25, 4, 1, 2, 2}, h1, IonSpecies{}, Side::Right, 0.0, 0.1, 0.2);
    CHECK(R == state(0.0, 0.0, 0.0, 4.0, 0.1, 0.2, 1.0));
    const auto N = boundary_point({0.0, 1.2, 0.6, 1, 1}, h1, IonSpecies{1.0, 2.0, 1, 1}, Side::Left, 0.0, 0, 0);
    CHECK(N.v == 0.0);
    CHECK(N.w == Approx(3.0 * 1.2));
}

TEST_CASE("left layer orbit lands on the predicted equilibrium", "[fast]") {
    const auto p = make({0.0, 4, 1, 2, 2});
    const auto orbit = integrate_layer(p, Side::Left, 20.0, 1e-10);
    const auto& z = orbit.terminal;
    CHECK(std::abs(z.phi - ln2) < 1e-6);
    CHECK(std::abs(z.u) < 1e-6);
    CHECK(std::abs(z.v) < 1e-6);
    CHECK(std::abs(z.w - 4.0) < 1e-6);
    for (double d : orbit.diagnostics.max_integral_drift) CHECK(d < 1e-8);
    for (double d : orbit.diagnostics.accumulated_step_defect) CHECK(d < 1e-8);
    CHECK(tail_decay_rate(orbit) == Approx(-2.0).epsilon(0.05));
    // stable direction: (u, v) start with opposite signs
    CHECK(orbit.states.front().u * orbit.states.front().v < 0.0);
    for (const auto& s : orbit.states) CHECK(manifold_membership(s, orbit.landing, p.profile, p.species, 1e-6));
}

TEST_CASE("right layer orbit is integrated backward", "[fast]") {
    const auto neutral = integrate_layer(make({0.0, 4, 1, 2, 2}), Side::Right, 20.0, 1e-10);
    CHECK(neutral.terminal == neutral.states.front());
    CHECK(std::abs(neutral.terminal.w - 4.0) < 1e-14);
    CHECK(neutral.terminal.phi == 0.0);

    const auto p = make({0.0, 1, 1, 1, 4}, IonSpecies{1.0, 1.0, 1.0, 1.0});
    const auto orbit = integrate_layer(p, Side::Right, 0.0, 1e-10);
    const auto end = boundary_layer_endpoint(p, Side::Right);
    CHECK(std::abs(orbit.terminal.phi - end.phi_limit) < 1e-6);
    CHECK(std::abs(orbit.terminal.w - end.w_limit) < 1e-6);
    CHECK(std::abs(orbit.terminal.u) < 1e-6);
    CHECK(orbit.states.front().u * orbit.states.front().v > 0.0);
    for (double d : orbit.diagnostics.max_integral_drift) CHECK(d < 1e-8);
    CHECK(tail_decay_rate(orbit) == Approx(-std::sqrt(end.w_limit)).epsilon(0.05));
}

TEST_CASE("layer orbits conserve integrals for random data", "[fast][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> C(0.2, 5.0), A(0.5, 3.0), V(-1.0, 1.0);
    const auto prof = ChannelProfile::affine(1.0, 0.5);
    for (int i = 0; i < 20; ++i) {
        const auto p = make({V(rng), C(rng), C(rng), C(rng), C(rng)}, {A(rng), A(rng), 1, 1}, prof);
        for (Side side : {Side::Left, Side::Right}) {
            const auto orbit = integrate_layer(p, side, 0.0, 1e-10);
            for (double d : orbit.diagnostics.max_integral_drift) CHECK(d < 1e-8);
            CHECK(orbit.diagnostics.terminal_error < 1e-8);
        }
    }
}

TEST_CASE("wrong-branch initial data is reported as divergent", "[fast][errors]") {
    const auto p = make({0.0, 4, 1, 2, 2});
    const double u = boundary_layer_endpoint(p, Side::Left).u_amplitude;
    try {
        integrate_layer_from(p, Side::Left, -u, 20.0, 1e-10);
        FAIL("expected DivergentOrbit");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DivergentOrbit);
    }
    CHECK_THROWS_AS(integrate_layer_from(p, Side::Left, 1.5 * u, 20.0, 1e-10), Error);
}

TEST_CASE("membership test", "[fast]") {
    const auto h1 = ChannelProfile::constant(1.0);
    const IonSpecies sp{};
    const auto eq = state(ln2, 0, 0, 4);
    CHECK(manifold_membership(eq, eq, h1, sp, 1e-12));
    auto off = eq;
    off.w += 0.1;
    CHECK_FALSE(manifold_membership(off, eq, h1, sp, 1e-3));
}

TEST_CASE("singular orbit composite restores the boundary values", "[fast][composite]") {
    const auto p = make({1.0, 4, 1, 2, 2});
    const auto orbit = singular_orbit(p);
    const auto at0 = orbit.composite(0.0, 0.01);
    CHECK(at0.phi == Approx(1.0).epsilon(1e-8));
    CHECK(at0.c1 == Approx(4.0).epsilon(1e-8));
    CHECK(at0.c2 == Approx(1.0).epsilon(1e-8));
    const auto mid = orbit.composite(0.5, 0.01);
    CHECK(std::abs(mid.phi - orbit.regular.phi(0.5)) < 0.01);

    const auto neutral = singular_orbit(make({0.5, 1.0, 1.0, 1.0, 1.0}));
    for (double x : {0.0, 0.01, 0.5, 1.0}) {
        const auto c = neutral.composite(x, 0.01);
        CHECK(c.phi == Approx(neutral.regular.phi(x)).margin(1e-14));
        CHECK(c.c1 == Approx(1.0).epsilon(1e-14));
    }
}
