#pragma once

/**
 * @file singular_orbit.hpp
 * @brief The mu -> 0 solution assembled from the two boundary-layer orbits and the regular layer,
 * with a composite (outer + inner - matching limit) approximation for small mu > 0.
 */

#include <cmath>

#include "pnpchan/fast_dynamics.hpp"
#include "pnpchan/steady_asymptotics.hpp"

namespace pnpchan {

struct FieldValues {
    double phi = 0.0;
    double c1 = 0.0;
    double c2 = 0.0;
};

struct SingularOrbit {
    BoundaryLayerEndpoint left;
    BoundaryLayerEndpoint right;
    LayerOrbit left_orbit;
    LayerOrbit right_orbit;
    RegularLayer regular;
    FluxPair fluxes;
    double rho0 = 1.0;

    /// Composite approximation at x for layer width mu. mu = 0 gives the outer solution on (0,1)
    /// and the boundary data at the ends.
    FieldValues composite(double x, double mu) const {
        if (x < 0.0 || x > 1.0) fail(ErrorKind::OutOfDomain, "x must lie in [0,1]");
        if (!(mu >= 0.0)) fail(ErrorKind::BadParameters, "mu must be >= 0");
        FieldValues out = outer(x);
        if (mu == 0.0) {
            if (x == 0.0) return layer_fields(left_orbit.states.front(), left_orbit);
            if (x == 1.0) return layer_fields(right_orbit.states.front(), right_orbit);
            return out;
        }
        add_inner(out, left_orbit, x / mu);
        add_inner(out, right_orbit, (1.0 - x) / mu);
        return out;
    }

    FieldValues outer(double x) const {
        const double S = regular.inverse_area(x);
        const double w = regular.w_from_area(S);
        const auto& sp = regular.species();
        return {regular.phi_from_area(S), w / (sp.alpha1 * (sp.alpha1 + sp.alpha2)),
                w / (sp.alpha2 * (sp.alpha1 + sp.alpha2))};
    }

    /// Concentrations carried by a layer state: alpha1 c1 - alpha2 c2 = -v/h, alpha1^2 c1 + alpha2^2 c2 = w.
    static FieldValues layer_fields(const FastState& z, const LayerOrbit& orbit) {
        const auto& sp = orbit.species;
        const double s = sp.alpha1 + sp.alpha2;
        const double q = z.v / orbit.h_boundary;
        return {z.phi, (z.w - sp.alpha2 * q) / (sp.alpha1 * s), (z.w + sp.alpha1 * q) / (sp.alpha2 * s)};
    }

private:
    static void add_inner(FieldValues& out, const LayerOrbit& orbit, double xi) {
        if (orbit.branch == 0.0) return;
        const auto inner = layer_fields(sample_orbit(orbit, xi), orbit);
        const auto limit = layer_fields(orbit.landing, orbit);
        out.phi += inner.phi - limit.phi;
        out.c1 += inner.c1 - limit.c1;
        out.c2 += inner.c2 - limit.c2;
    }
};

inline SingularOrbit singular_orbit(const SteadyProblem& problem, double layer_tol = 1e-10) {
    validate(problem);
    const double rho0 = geometry_factor(problem.profile).rho0;
    const auto fluxes = limiting_fluxes(problem, rho0);
    const auto left = boundary_layer_endpoint(problem, Side::Left);
    const auto right = boundary_layer_endpoint(problem, Side::Right);
    RegularLayer regular(problem.profile, problem.species, fluxes, left.phi_limit, left.w_limit, rho0);
    return SingularOrbit{left,
                         right,
                         integrate_layer(problem, Side::Left, 0.0, layer_tol),
                         integrate_layer(problem, Side::Right, 0.0, layer_tol),
                         std::move(regular),
                         fluxes,
                         rho0};
}

}  // namespace pnpchan
