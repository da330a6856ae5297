#pragma once

#include <cmath>
#include <string>

#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"

namespace pnpchan {

/// Cation with valence alpha1 > 0 and anion with valence -alpha2 < 0.
struct IonSpecies {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double D1 = 1.0;
    double D2 = 1.0;
    bool operator==(const IonSpecies&) const = default;
};

/// Dirichlet data: phi(0) = phi0, phi(1) = 0, c_k(0) = l_k, c_k(1) = r_k.
struct BoundaryData {
    double phi0 = 0.0;
    double l1 = 1.0;
    double l2 = 1.0;
    double r1 = 1.0;
    double r2 = 1.0;
    bool operator==(const BoundaryData&) const = default;
};

enum class Side { Left, Right };

inline const char* to_string(Side side) { return side == Side::Left ? "left" : "right"; }

struct SteadyProblem {
    ChannelProfile profile;
    IonSpecies species;
    BoundaryData boundary;
    double mu = 0.01;  ///< mu^2 = 1/lambda

    double lambda() const { return 1.0 / (mu * mu); }
    bool operator==(const SteadyProblem&) const = default;
};

inline void validate(const IonSpecies& s) {
    if (!(s.alpha1 > 0.0 && s.alpha2 > 0.0)) fail(ErrorKind::InvalidProblem, "valences alpha1, alpha2 must be positive");
    if (!(s.D1 > 0.0 && s.D2 > 0.0)) fail(ErrorKind::InvalidProblem, "diffusivities D1, D2 must be positive");
}

inline void validate(const BoundaryData& b) {
    if (!(b.l1 > 0.0 && b.l2 > 0.0 && b.r1 > 0.0 && b.r2 > 0.0)) {
        fail(ErrorKind::InvalidProblem, "boundary concentrations l1, l2, r1, r2 must be positive");
    }
    if (!std::isfinite(b.phi0)) fail(ErrorKind::InvalidProblem, "phi0 must be finite");
}

inline void validate(const SteadyProblem& p) {
    validate(p.species);
    validate(p.boundary);
    if (!(p.mu >= 0.0) || !std::isfinite(p.mu)) fail(ErrorKind::InvalidProblem, "mu must be finite and >= 0");
}

/// Concentrations (c1, c2) on one side.
inline std::pair<double, double> side_concentrations(const BoundaryData& b, Side side) {
    return side == Side::Left ? std::pair{b.l1, b.l2} : std::pair{b.r1, b.r2};
}

/// True when alpha1 c1 = alpha2 c2 = k at both ends (same k).
inline bool is_equal_charge_data(const BoundaryData& b, const IonSpecies& s, double rel_tol = 1e-12) {
    const double k = s.alpha1 * b.l1;
    const auto close = [&](double v) { return std::abs(v - k) <= rel_tol * k; };
    return close(s.alpha2 * b.l2) && close(s.alpha1 * b.r1) && close(s.alpha2 * b.r2);
}

}  // namespace pnpchan
