#pragma once

/**
 * @file foliation.hpp
 * @brief Extension of boundary data h(X) into a thin tube with zero normal derivative on the
 * wall, built from the characteristic flow dX/dt = -t g'(X)/g(X).
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include <boost/numeric/odeint.hpp>

#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"

namespace pnpchan {

class Foliation {
public:
    using Scalar = std::function<double(double)>;

    Foliation(Scalar h_boundary, WallFunction wall, double tol = 1e-10)
        : h_(std::move(h_boundary)), wall_(std::move(wall)), tol_(tol) {
        if (!(tol_ > 0.0)) fail(ErrorKind::BadParameters, "foliation tolerance must be positive");
        if (!wall_.has_flat_ends(1e-8)) {
            fail(ErrorKind::RootFindFailure, "wall slope must vanish at X = 0 and X = 1 for the foliation to exist");
        }
    }

    /// psi(t, X0): characteristic through X0 evaluated at radius t.
    double psi(double t, double X0) const {
        namespace ode = boost::numeric::odeint;
        double X = X0;
        const double T = std::abs(t);  // psi is even in t
        if (T == 0.0) return X0;
        auto rhs = [this](const double& x, double& dxdt, double s) {
            const double xc = std::clamp(x, 0.0, 1.0);
            dxdt = -s * wall_.slope(xc) / wall_.value(xc);
        };
        ode::integrate_adaptive(ode::make_controlled(tol_ * 1e-2, tol_ * 1e-2, ode::runge_kutta_dopri5<double>()),
                                rhs, X, 0.0, T, T / 16.0);
        return X;
    }

    /// X0 with psi(r, X0) = X.
    double source_point(double X, double r) const {
        if (X < 0.0 || X > 1.0) fail(ErrorKind::OutOfDomain, "X must lie in [0,1]");
        if (r == 0.0) return X;
        double lo = 0.0;
        double hi = 1.0;
        double flo = psi(r, lo) - X;
        double fhi = psi(r, hi) - X;
        if (flo > tol_ || fhi < -tol_) {
            fail(ErrorKind::RootFindFailure, "characteristic root not bracketed at X = " + std::to_string(X));
        }
        while (hi - lo > tol_) {
            const double mid = 0.5 * (lo + hi);
            const double fm = psi(r, mid) - X;
            if (fm == 0.0) return mid;
            if (fm < 0.0) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
                fhi = fm;
            }
        }
        // secant polish inside the final bracket
        if (fhi != flo) {
            const double x = lo - flo * (hi - lo) / (fhi - flo);
            if (x >= lo && x <= hi) return x;
        }
        return 0.5 * (lo + hi);
    }

    double operator()(double X, double Y, double Z) const { return h_(source_point(X, std::hypot(Y, Z))); }

    const WallFunction& wall() const noexcept { return wall_; }

private:
    Scalar h_;
    WallFunction wall_;
    double tol_;
};

inline Foliation build_foliation(Foliation::Scalar h_boundary, WallFunction wall, double tol = 1e-10) {
    return Foliation(std::move(h_boundary), std::move(wall), tol);
}

/// Central-difference derivative of H along the outward wall normal at (X, g(X) cos theta, g(X) sin theta).
inline double wall_normal_derivative(const Foliation& H, double X, double theta, double step = 1e-4) {
    const auto& wall = H.wall();
    const double g = wall.value(X);
    const double gx = wall.slope(X);
    const double norm = std::sqrt(1.0 + gx * gx);
    const double nx = -gx / norm;
    const double nr = 1.0 / norm;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const auto at = [&](double d) {
        const double r = g + d * nr;
        return H(std::clamp(X + d * nx, 0.0, 1.0), r * c, r * s);
    };
    return (at(step) - at(-step)) / (2.0 * step);
}

}  // namespace pnpchan
