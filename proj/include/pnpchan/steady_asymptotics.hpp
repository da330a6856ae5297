#pragma once

/**
 * @file steady_asymptotics.hpp
 * @brief Leading-order (mu -> 0) steady state: closed-form limiting fluxes,
 * boundary-layer end states on the slow manifold, and the electroneutral
 * regular layer connecting them.
 *
 * Flux scaling: J_k are the reduced fluxes of h c_k' +/- alpha_k c_k h phi' = -J_k;
 * the physical fluxes are Jbar_k = D_k J_k.
 */

#include <cmath>
#include <string>

#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/numerics.hpp"
#include "pnpchan/problem.hpp"

namespace pnpchan {

struct LogRatioData {
    double a = 0.0;         ///< ln(r1/l1)
    double b = 0.0;         ///< ln(r2/l2)
    double s = 0.0;         ///< (alpha2 a + alpha1 b)/(alpha1 + alpha2)
    double gm_left = 0.0;   ///< (alpha1 l1)^{alpha2/(alpha1+alpha2)} (alpha2 l2)^{alpha1/(alpha1+alpha2)}
    double gm_right = 0.0;  ///< same with r1, r2
};

struct FluxPair {
    double J1 = 0.0;
    double J2 = 0.0;
    double Jbar1 = 0.0;
    double Jbar2 = 0.0;
};

inline FluxPair make_flux_pair(double J1, double J2, const IonSpecies& species) {
    return FluxPair{J1, J2, species.D1 * J1, species.D2 * J2};
}

namespace detail {

/// Weighted geometric mean (alpha1 c1)^theta (alpha2 c2)^{1-theta}, theta = alpha2/(alpha1+alpha2).
inline double charge_geometric_mean(const IonSpecies& sp, double c1, double c2) {
    const double theta = sp.alpha2 / (sp.alpha1 + sp.alpha2);
    return std::exp(theta * std::log(sp.alpha1 * c1) + (1.0 - theta) * std::log(sp.alpha2 * c2));
}

/// c1 + c2 - (alpha1+alpha2) gm/(alpha1 alpha2) >= 0, evaluated without cancellation.
inline double layer_radicand(const IonSpecies& sp, double c1, double c2) {
    const double A = sp.alpha1 * c1;
    const double B = sp.alpha2 * c2;
    const double theta = sp.alpha2 / (sp.alpha1 + sp.alpha2);
    const double r = std::log(B / A);
    const double bracket = (1.0 - theta) * num::expm1_minus_x(r) - num::expm1_minus_x((1.0 - theta) * r);
    return (sp.alpha1 + sp.alpha2) / (sp.alpha1 * sp.alpha2) * A * std::max(bracket, 0.0);
}

inline double sign(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace detail

inline LogRatioData log_ratios(const SteadyProblem& problem) {
    validate(problem.boundary);
    validate(problem.species);
    const auto& bd = problem.boundary;
    const auto& sp = problem.species;
    LogRatioData out;
    out.a = std::log(bd.r1 / bd.l1);
    out.b = std::log(bd.r2 / bd.l2);
    out.s = (sp.alpha2 * out.a + sp.alpha1 * out.b) / (sp.alpha1 + sp.alpha2);
    out.gm_left = detail::charge_geometric_mean(sp, bd.l1, bd.l2);
    out.gm_right = detail::charge_geometric_mean(sp, bd.r1, bd.r2);
    const double predicted = out.gm_left * std::exp(out.s);
    if (std::abs(out.gm_right - predicted) > 1e-12 * std::max(out.gm_right, predicted) * 8.0) {
        fail(ErrorKind::InvalidProblem, "geometric-mean identity gm_right = gm_left e^s violated (overflow?)");
    }
    return out;
}

/// Limiting fluxes with a precomputed rho0 = \int_0^1 1/h.
inline FluxPair limiting_fluxes(const SteadyProblem& problem, double rho0) {
    if (!(rho0 > 0.0)) fail(ErrorKind::InvalidProblem, "rho0 must be positive");
    const auto lr = log_ratios(problem);
    const auto& sp = problem.species;
    const double phi0 = problem.boundary.phi0;
    const double common = lr.gm_left * num::one_minus_exp_over(lr.s) / rho0;
    const double J1 = (lr.a - sp.alpha1 * phi0) * common / sp.alpha1;
    const double J2 = (lr.b + sp.alpha2 * phi0) * common / sp.alpha2;
    return make_flux_pair(J1, J2, sp);
}

inline FluxPair limiting_fluxes(const SteadyProblem& problem) {
    return limiting_fluxes(problem, geometry_factor(problem.profile).rho0);
}

struct BoundaryLayerEndpoint {
    Side side = Side::Left;
    double u_amplitude = 0.0;  ///< u at the boundary point of the layer orbit
    double phi_limit = 0.0;    ///< phi at the slow-manifold landing point
    double w_limit = 0.0;      ///< w at the slow-manifold landing point
    bool has_layer = false;
};

inline BoundaryLayerEndpoint boundary_layer_endpoint(const SteadyProblem& problem, Side side) {
    validate(problem);
    const auto& sp = problem.species;
    const auto [c1, c2] = side_concentrations(problem.boundary, side);
    const double h_end = problem.profile.value(side == Side::Left ? 0.0 : 1.0);

    BoundaryLayerEndpoint out;
    out.side = side;
    out.has_layer = sp.alpha1 * c1 != sp.alpha2 * c2;
    const double imbalance = detail::sign(sp.alpha2 * c2 - sp.alpha1 * c1);
    const double magnitude = std::sqrt(2.0) * h_end * std::sqrt(detail::layer_radicand(sp, c1, c2));
    out.u_amplitude = out.has_layer ? (side == Side::Left ? -imbalance : imbalance) * magnitude : 0.0;
    out.phi_limit = std::log(sp.alpha1 * c1 / (sp.alpha2 * c2)) / (sp.alpha1 + sp.alpha2);
    if (side == Side::Left) out.phi_limit += problem.boundary.phi0;
    out.w_limit = (sp.alpha1 + sp.alpha2) * detail::charge_geometric_mean(sp, c1, c2);
    return out;
}

/// Electroneutral outer solution on [0,1] for given fluxes.
class RegularLayer {
public:
    RegularLayer(ChannelProfile profile, IonSpecies species, FluxPair fluxes, double nu0, double w0, double rho0)
        : profile_(std::move(profile)), species_(species), fluxes_(fluxes), nu0_(nu0), w0_(w0), rho0_(rho0) {
        const double w1 = w0_ - drift_rate() * rho0_;
        if (!(w0_ > 0.0) || !(w1 > 0.0)) {
            fail(ErrorKind::NonpositiveW, "regular layer w(x) must stay positive; w(0) = " + std::to_string(w0_) +
                                              ", w(1) = " + std::to_string(w1));
        }
    }

    double nu0() const noexcept { return nu0_; }
    double w0() const noexcept { return w0_; }
    double tau0() const noexcept { return 0.0; }
    double rho0() const noexcept { return rho0_; }
    const FluxPair& fluxes() const noexcept { return fluxes_; }
    const ChannelProfile& profile() const noexcept { return profile_; }
    const IonSpecies& species() const noexcept { return species_; }

    /// \int_0^x 1/h
    double inverse_area(double x) const { return inverse_area_integral(profile_, 0.0, x); }

    double w(double x) const { return w_from_area(inverse_area(x)); }
    double phi(double x) const { return phi_from_area(inverse_area(x)); }

    /// p = (alpha2 J2 - alpha1 J1)/w, the blown-up u-coordinate on the slow manifold.
    double p(double x) const { return potential_rate() / w(x); }
    double c1(double x) const { return w(x) / (species_.alpha1 * (species_.alpha1 + species_.alpha2)); }
    double c2(double x) const { return w(x) / (species_.alpha2 * (species_.alpha1 + species_.alpha2)); }

    double w_from_area(double S) const { return w0_ - drift_rate() * S; }

    double phi_from_area(double S) const {
        const double rate = potential_rate();
        if (std::abs(drift_rate() * rho0_ / w0_) < 1e-10) return nu0_ + rate * S / w0_;
        const double z = drift_rate() * S / w0_;
        return nu0_ - rate / drift_rate() * std::log1p(-z);
    }

private:
    /// alpha1 alpha2 (J1 + J2)
    double drift_rate() const { return species_.alpha1 * species_.alpha2 * (fluxes_.J1 + fluxes_.J2); }
    /// alpha2 J2 - alpha1 J1
    double potential_rate() const { return species_.alpha2 * fluxes_.J2 - species_.alpha1 * fluxes_.J1; }

    ChannelProfile profile_;
    IonSpecies species_;
    FluxPair fluxes_;
    double nu0_;
    double w0_;
    double rho0_;
};

struct RegularLayerCheck {
    double w_end_error = 0.0;    ///< |w(1) - right w_limit|
    double phi_end_error = 0.0;  ///< |phi(1) - right phi_limit|
};

inline RegularLayer regular_layer(const SteadyProblem& problem) {
    validate(problem);
    const double rho0 = geometry_factor(problem.profile).rho0;
    const auto fluxes = limiting_fluxes(problem, rho0);
    const auto left = boundary_layer_endpoint(problem, Side::Left);
    return RegularLayer(problem.profile, problem.species, fluxes, left.phi_limit, left.w_limit, rho0);
}

/// Mismatch between the regular layer's right end and the right landing point.
inline RegularLayerCheck check_regular_layer(const SteadyProblem& problem, const RegularLayer& layer) {
    const auto right = boundary_layer_endpoint(problem, Side::Right);
    const double S1 = layer.rho0();
    return {std::abs(layer.w_from_area(S1) - right.w_limit), std::abs(layer.phi_from_area(S1) - right.phi_limit)};
}

}  // namespace pnpchan
