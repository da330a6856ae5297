// Limiting fluxes for a constricted channel, checked against the full discrete solve.
//
//   ./quickstart

#include <cstdio>

#include "pnpchan/pnpchan.hpp"

int main() {
    using namespace pnpchan;

    SteadyProblem p;
    // narrow waist in the middle, rescaled to unit volume
    p.profile = normalize_volume(ChannelProfile::bump(1.0, -0.5, 0.12));
    p.species = {1.0, 1.0, 1.0, 2.0};
    p.boundary = {1.0, 4.0, 1.0, 2.0, 2.0};  // phi0, l1, l2, r1, r2
    p.mu = 0.01;

    try {
        const double rho0 = geometry_factor(p.profile).rho0;
        const auto limit = limiting_fluxes(p);
        std::printf("rho0 = %.6f\n", rho0);
        std::printf("limit:    J1 = %+.6f  J2 = %+.6f  (Jbar2 = D2 J2 = %+.6f)\n", limit.J1, limit.J2, limit.Jbar2);

        const auto sol = solve_steady_bvp(p);
        const auto J = extract_fluxes(sol);
        std::printf("mu=%.3g:  J1 = %+.6f  J2 = %+.6f  (%zu nodes, %d Newton iterations)\n", p.mu, J.J1, J.J2,
                    sol.x.size(), sol.newton_iterations);

        // leading-order composite profile next to the discrete one
        const auto orbit = singular_orbit(p);
        std::printf("\n%8s %12s %12s %12s\n", "x", "phi (bvp)", "phi (comp)", "c1 (bvp)");
        for (std::size_t i = 0; i < sol.x.size(); i += sol.x.size() / 12) {
            const auto c = orbit.composite(sol.x[i], p.mu);
            std::printf("%8.4f %12.6f %12.6f %12.6f\n", sol.x[i], sol.fields.phi[i], c.phi, sol.fields.c1[i]);
        }
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
}
