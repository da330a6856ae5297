#pragma once

/**
 * @file fast_dynamics.hpp
 * @brief The layer (fast) system in (phi, u, v, w, J1, J2, tau), its first
 * integrals, the slow-manifold eigenstructure, and numerical boundary-layer
 * orbits.
 *
 * Coordinates: u = mu h phi', v = -h (alpha1 c1 - alpha2 c2), w = alpha1^2 c1 + alpha2^2 c2,
 * with fast time xi = x/mu.
 */

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/numerics.hpp"
#include "pnpchan/problem.hpp"
#include "pnpchan/steady_asymptotics.hpp"

namespace pnpchan {

struct FastState {
    double phi = 0.0;
    double u = 0.0;
    double v = 0.0;
    double w = 0.0;
    double J1 = 0.0;
    double J2 = 0.0;
    double tau = 0.0;

    using Array = std::array<double, 7>;
    Array to_array() const { return {phi, u, v, w, J1, J2, tau}; }
    static FastState from_array(const Array& a) { return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]}; }
    bool on_slow_manifold() const noexcept { return u == 0.0 && v == 0.0; }
    bool operator==(const FastState&) const = default;
};

struct IntegralVector {
    double H1 = 0.0;
    double H2 = 0.0;
    double H3 = 0.0;
    double H4 = 0.0;  ///< J1
    double H5 = 0.0;  ///< J2
    double H6 = 0.0;  ///< tau
};

struct EigenData {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    FastState::Array n_plus{};
    FastState::Array n_minus{};
};

/// A point of B_L or B_R.
using BoundaryManifoldPoint = FastState;

struct LayerDiagnostics {
    std::array<double, 3> max_integral_drift{};    ///< max_i |H_k(sample_i) - H_k(initial)|
    std::array<double, 3> accumulated_step_defect{};  ///< sum of per-step |Delta H_k| before projection
    double initial_level_defect = 0.0;             ///< |H1(initial) - w*| of the implied equilibrium
    double terminal_error = 0.0;                   ///< distance of the terminal state to the landing point
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

struct LayerOrbit {
    Side side = Side::Left;
    std::vector<double> xi;  ///< distance from the boundary in fast units
    std::vector<FastState> states;
    FastState terminal;
    FastState landing;  ///< predicted equilibrium (phi_limit, 0, 0, w_limit)
    LayerDiagnostics diagnostics;
    double fiber_phi = 0.0;  ///< phi* implied by the initial H2, H3 levels
    double fiber_w = 0.0;    ///< w* implied by the initial H2, H3 levels
    double branch = 0.0;     ///< -1 stable (left), +1 unstable (right), 0 no layer
    double h_boundary = 1.0;
    IonSpecies species;
};

/// Right-hand side of the fast system; mu = 0 gives the limiting fast system.
inline FastState fast_field(const FastState& z, const ChannelProfile& profile, const IonSpecies& sp, double mu) {
    const double h = profile.value(std::clamp(z.tau, 0.0, 1.0));
    if (!(h > 0.0)) fail(ErrorKind::DegenerateGeometry, "h(tau) must be positive");
    const double a1 = sp.alpha1;
    const double a2 = sp.alpha2;
    FastState d;
    d.phi = z.u / h;
    d.u = z.v;
    d.v = z.u * z.w;
    d.w = a1 * a2 * z.u * z.v / (h * h) + (a2 - a1) * z.u * z.w / h;
    if (mu != 0.0) {
        const double h_tau = profile.slope(std::clamp(z.tau, 0.0, 1.0));
        d.v += mu * (h_tau / h) * z.v + mu * (a1 * z.J1 - a2 * z.J2);
        d.w -= mu * (a1 * a1 * z.J1 + a2 * a2 * z.J2) / h;
    }
    d.J1 = 0.0;
    d.J2 = 0.0;
    d.tau = mu;
    return d;
}

inline IntegralVector integrals(const FastState& z, const ChannelProfile& profile, const IonSpecies& sp) {
    const double h = profile.value(std::clamp(z.tau, 0.0, 1.0));
    if (!(h > 0.0)) fail(ErrorKind::DegenerateGeometry, "h(tau) must be positive");
    const double a1 = sp.alpha1;
    const double a2 = sp.alpha2;
    const double p = a1 * z.v / h + z.w;
    const double q = a2 * z.v / h - z.w;
    if (p == 0.0 || q == 0.0 || !std::isfinite(p) || !std::isfinite(q)) {
        fail(ErrorKind::LogSingularity, "integral log argument vanishes");
    }
    IntegralVector H;
    H.H1 = z.w - (a2 - a1) * z.v / h - a1 * a2 * z.u * z.u / (2.0 * h * h);
    H.H2 = z.phi - std::log(std::abs(p)) / a2;
    H.H3 = z.phi + std::log(std::abs(q)) / a1;
    H.H4 = z.J1;
    H.H5 = z.J2;
    H.H6 = z.tau;
    return H;
}

/// Eigen-data at an equilibrium on u = v = 0 for cross-section h at that point.
inline EigenData eigen_normal(const FastState& eq, const IonSpecies& sp, double h = 1.0) {
    if (eq.u != 0.0 || eq.v != 0.0) fail(ErrorKind::InvalidProblem, "eigen_normal needs u = v = 0");
    if (!(eq.w > 0.0)) fail(ErrorKind::NonHyperbolic, "w must be positive for a hyperbolic equilibrium");
    if (!(h > 0.0)) fail(ErrorKind::DegenerateGeometry, "h must be positive");
    const double r = std::sqrt(eq.w);
    const double gap = sp.alpha2 - sp.alpha1;
    EigenData e;
    e.lambda_plus = r;
    e.lambda_minus = -r;
    e.n_plus = {1.0 / (h * r), 1.0, r, gap * r / h, 0.0, 0.0, 0.0};
    e.n_minus = {-1.0 / (h * r), 1.0, -r, -gap * r / h, 0.0, 0.0, 0.0};
    return e;
}

inline EigenData eigen_normal(const FastState& eq, const ChannelProfile& profile, const IonSpecies& sp) {
    return eigen_normal(eq, sp, profile.value(std::clamp(eq.tau, 0.0, 1.0)));
}

inline BoundaryManifoldPoint boundary_point(const BoundaryData& bd, const ChannelProfile& profile,
                                            const IonSpecies& sp, Side side, double u_value, double J1,
                                            double J2) {
    const auto [c1, c2] = side_concentrations(bd, side);
    const double x = side == Side::Left ? 0.0 : 1.0;
    const double h = profile.value(x);
    FastState z;
    z.phi = side == Side::Left ? bd.phi0 : 0.0;
    z.u = u_value;
    z.v = -h * (sp.alpha1 * c1 - sp.alpha2 * c2);
    z.w = sp.alpha1 * sp.alpha1 * c1 + sp.alpha2 * sp.alpha2 * c2;
    z.J1 = J1;
    z.J2 = J2;
    z.tau = x;
    return z;
}

/// True when `z` lies on the level set of the integrals that defines the stable/unstable
/// manifold of `eq`.
inline bool manifold_membership(const FastState& z, const FastState& eq, const ChannelProfile& profile,
                                const IonSpecies& sp, double tol) {
    if (!(eq.w > 0.0)) return false;
    IntegralVector H;
    try {
        H = integrals(z, profile, sp);
    } catch (const Error&) {
        return false;
    }
    const double lw = std::log(eq.w);
    return std::abs(H.H1 - eq.w) <= tol && std::abs(H.H2 - (eq.phi - lw / sp.alpha2)) <= tol &&
           std::abs(H.H3 - (eq.phi + lw / sp.alpha1)) <= tol && std::abs(z.J1 - eq.J1) <= tol &&
           std::abs(z.J2 - eq.J2) <= tol && std::abs(z.tau - eq.tau) <= tol;
}

namespace detail {

/// Equilibrium (phi*, w*) selected by the H2, H3 levels of a state.
struct FiberLevel {
    double phi_star = 0.0;
    double w_star = 0.0;
};

inline FiberLevel fiber_level(const IntegralVector& H, const IonSpecies& sp) {
    const double a1 = sp.alpha1;
    const double a2 = sp.alpha2;
    FiberLevel lv;
    lv.phi_star = (a1 * H.H3 + a2 * H.H2) / (a1 + a2);
    lv.w_star = std::exp(a2 * (lv.phi_star - H.H2));
    return lv;
}

/// The unique point of the one-dimensional fiber through (phi*, w*) with the given phi.
/// sigma = -1 selects the stable branch, +1 the unstable one.
inline FastState project_to_fiber(const FastState& z, const FiberLevel& lv, double h, const IonSpecies& sp,
                                  double sigma) {
    const double a1 = sp.alpha1;
    const double a2 = sp.alpha2;
    const double k = lv.w_star / (a1 + a2);
    const double psi = z.phi - lv.phi_star;
    FastState out = z;
    out.v = h * k * (std::expm1(a2 * psi) - std::expm1(-a1 * psi));
    out.w = k * (a1 * std::exp(-a1 * psi) + a2 * std::exp(a2 * psi));
    const double F = k * (a2 * num::expm1_minus_x(-a1 * psi) + a1 * num::expm1_minus_x(a2 * psi));
    out.u = sigma * sign(psi) * h * std::sqrt(2.0 * std::max(F, 0.0) / (a1 * a2));
    return out;
}

inline double uv_norm(const FastState& z) { return std::hypot(z.u, z.v); }

}  // namespace detail

/// Numerically integrates the boundary-layer orbit of the limiting fast system from B_L (forward)
/// or B_R (backward) toward the slow manifold. After each accepted Runge-Kutta step the state is
/// projected back onto the exact level set of the integrals; the raw step defects are reported.
/// `xi_max <= 0` selects 40/sqrt(w_limit). `u_initial` overrides the closed-form boundary value of u.
inline LayerOrbit integrate_layer_from(const SteadyProblem& problem, Side side, double u_initial, double xi_max,
                                       double tol) {
    validate(problem);
    if (!(tol > 0.0)) fail(ErrorKind::BadParameters, "tol must be positive");
    const auto& sp = problem.species;
    const auto& profile = problem.profile;
    const auto end = boundary_layer_endpoint(problem, side);
    const auto fluxes = limiting_fluxes(problem);
    if (!(xi_max > 0.0)) xi_max = 40.0 / std::sqrt(end.w_limit);

    LayerOrbit orbit;
    orbit.side = side;
    orbit.species = sp;
    const FastState z0 = boundary_point(problem.boundary, profile, sp, side, u_initial, fluxes.J1, fluxes.J2);
    orbit.landing = z0;
    orbit.landing.phi = end.phi_limit;
    orbit.landing.u = 0.0;
    orbit.landing.v = 0.0;
    orbit.landing.w = end.w_limit;

    const auto terminal_distance = [&](const FastState& z) {
        const auto& L = orbit.landing;
        return std::max({std::abs(z.phi - L.phi), std::abs(z.u), std::abs(z.v), std::abs(z.w - L.w)});
    };

    if (!end.has_layer) {
        orbit.xi = {0.0, xi_max};
        orbit.states = {z0, z0};
        orbit.terminal = z0;
        orbit.diagnostics.terminal_error = terminal_distance(z0);
        return orbit;
    }

    const double h = profile.value(z0.tau);
    const double sigma = side == Side::Left ? -1.0 : 1.0;
    const double direction = side == Side::Left ? 1.0 : -1.0;
    const IntegralVector H0 = integrals(z0, profile, sp);
    const auto level = detail::fiber_level(H0, sp);
    orbit.diagnostics.initial_level_defect = std::abs(H0.H1 - level.w_star);
    orbit.fiber_phi = level.phi_star;
    orbit.fiber_w = level.w_star;
    orbit.branch = sigma;
    orbit.h_boundary = h;

    const FastState start = detail::project_to_fiber(z0, level, h, sp, sigma);
    const double scale0 = detail::uv_norm(z0);
    if (std::abs(start.u - z0.u) > 1e-6 * std::max(1.0, std::abs(z0.u))) {
        fail(ErrorKind::DivergentOrbit, std::string("initial point is not on the ") +
                                            (side == Side::Left ? "stable" : "unstable") +
                                            " fiber of its landing point (u sign or magnitude)");
    }

    using State = FastState::Array;
    const auto rhs = [&](const State& x, State& dxdt, double) {
        const FastState d = fast_field(FastState::from_array(x), profile, sp, 0.0);
        dxdt = d.to_array();
        for (auto& c : dxdt) c *= direction;
    };

    namespace ode = boost::numeric::odeint;
    const double rate = std::sqrt(end.w_limit);
    auto stepper = ode::make_controlled(tol, tol, 0.25 / rate, ode::runge_kutta_dopri5<State>());

    State x = z0.to_array();
    double t = 0.0;
    double dt = 1e-3 / rate;
    orbit.xi.push_back(0.0);
    orbit.states.push_back(z0);
    std::array<double, 3> prev{H0.H1, H0.H2, H0.H3};

    std::size_t guard = 0;
    while (t < xi_max) {
        if (++guard > 1000000) fail(ErrorKind::NonConvergence, "layer integration exceeded step budget");
        dt = std::min(dt, xi_max - t);
        const auto result = stepper.try_step(rhs, x, t, dt);
        if (result != ode::success) {
            ++orbit.diagnostics.rejected_steps;
            if (dt < 1e-14) fail(ErrorKind::StagnantStep, "layer integration step size underflow");
            continue;
        }
        ++orbit.diagnostics.accepted_steps;
        FastState raw = FastState::from_array(x);
        if (!(detail::uv_norm(raw) <= 10.0 * scale0)) {
            fail(ErrorKind::DivergentOrbit, "|(u,v)| grew beyond 10x its initial value at xi = " + std::to_string(t));
        }
        const IntegralVector Hr = integrals(raw, profile, sp);
        orbit.diagnostics.accumulated_step_defect[0] += std::abs(Hr.H1 - prev[0]);
        orbit.diagnostics.accumulated_step_defect[1] += std::abs(Hr.H2 - prev[1]);
        orbit.diagnostics.accumulated_step_defect[2] += std::abs(Hr.H3 - prev[2]);

        const FastState z = detail::project_to_fiber(raw, level, h, sp, sigma);
        x = z.to_array();
        const IntegralVector Hz = integrals(z, profile, sp);
        prev = {Hz.H1, Hz.H2, Hz.H3};
        auto& drift = orbit.diagnostics.max_integral_drift;
        drift[0] = std::max(drift[0], std::abs(Hz.H1 - H0.H1));
        drift[1] = std::max(drift[1], std::abs(Hz.H2 - H0.H2));
        drift[2] = std::max(drift[2], std::abs(Hz.H3 - H0.H3));
        orbit.xi.push_back(t);
        orbit.states.push_back(z);
    }
    orbit.terminal = orbit.states.back();
    orbit.diagnostics.terminal_error = terminal_distance(orbit.terminal);
    return orbit;
}

inline LayerOrbit integrate_layer(const SteadyProblem& problem, Side side, double xi_max = 0.0, double tol = 1e-10) {
    return integrate_layer_from(problem, side, boundary_layer_endpoint(problem, side).u_amplitude, xi_max, tol);
}

/// Least-squares slope of ln|(u,v)| against xi over samples whose amplitude, relative to the
/// initial one, lies in [lo, hi].
inline double tail_decay_rate(const LayerOrbit& orbit, double lo = 1e-6, double hi = 1e-2) {
    if (orbit.states.empty()) fail(ErrorKind::InvalidProblem, "empty orbit");
    const double n0 = detail::uv_norm(orbit.states.front());
    if (n0 == 0.0) return 0.0;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < orbit.states.size(); ++i) {
        const double r = detail::uv_norm(orbit.states[i]) / n0;
        if (r < lo || r > hi) continue;
        const double y = std::log(r);
        sx += orbit.xi[i];
        sy += y;
        sxx += orbit.xi[i] * orbit.xi[i];
        sxy += orbit.xi[i] * y;
        ++n;
    }
    if (n < 3) fail(ErrorKind::InvalidProblem, "too few tail samples for a slope fit");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Layer orbit sampled at distance xi from the boundary; beyond the integrated span the landing
/// point is returned. phi is interpolated by cubic Hermite (phi' = +-u/h) and the remaining
/// coordinates are recovered from the orbit's level set.
inline FastState sample_orbit(const LayerOrbit& orbit, double xi) {
    if (orbit.states.empty()) fail(ErrorKind::InvalidProblem, "empty orbit");
    if (xi <= orbit.xi.front()) return orbit.states.front();
    if (xi >= orbit.xi.back()) return orbit.landing;
    if (orbit.branch == 0.0) return orbit.states.front();
    const auto it = std::upper_bound(orbit.xi.begin(), orbit.xi.end(), xi);
    const std::size_t i = static_cast<std::size_t>(it - orbit.xi.begin());
    const FastState& a = orbit.states[i - 1];
    const FastState& b = orbit.states[i];
    const double dx = orbit.xi[i] - orbit.xi[i - 1];
    const double t = (xi - orbit.xi[i - 1]) / dx;
    const double direction = orbit.side == Side::Left ? 1.0 : -1.0;
    const double hb = orbit.h_boundary;
    const double ma = direction * a.u / hb * dx;
    const double mb = direction * b.u / hb * dx;
    const double t2 = t * t;
    const double t3 = t2 * t;
    FastState z = a;
    z.phi = (2 * t3 - 3 * t2 + 1) * a.phi + (t3 - 2 * t2 + t) * ma + (-2 * t3 + 3 * t2) * b.phi + (t3 - t2) * mb;
    return detail::project_to_fiber(z, {orbit.fiber_phi, orbit.fiber_w}, hb, orbit.species, orbit.branch);
}

}  // namespace pnpchan
