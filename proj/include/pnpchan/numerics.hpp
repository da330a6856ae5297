#pragma once

/**
 * @file numerics.hpp
 * @brief Small numerical kernels shared by the solvers: removable-singularity
 * evaluations, the Bernoulli function used by exponential fitting, and an
 * absolute-tolerance adaptive quadrature front end.
 */

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "pnpchan/error.hpp"

namespace pnpchan::num {

/// e^x - 1 - x without cancellation for small |x|.
inline double expm1_minus_x(double x) {
    if (std::abs(x) < 0.1) {
        // Horner form of x^2/2! + x^3/3! + ... + x^12/12!
        double factorial = 479001600.0;
        double sum = 1.0 / factorial;
        for (int k = 12; k > 2; --k) {
            factorial /= k;
            sum = sum * x + 1.0 / factorial;
        }
        return sum * x * x;
    }
    return std::expm1(x) - x;
}

/// (1 - e^s)/s, continuous at s = 0 where it equals -1.
inline double one_minus_exp_over(double s) {
    if (std::abs(s) < 1e-8) return -1.0 - 0.5 * s;
    return -std::expm1(s) / s;
}

/// -ln(1 - z)/z, continuous at z = 0 where it equals 1.
inline double neg_log1m_over(double z) {
    if (std::abs(z) < 1e-8) return 1.0 + 0.5 * z;
    return -std::log1p(-z) / z;
}

/// Bernoulli function B(x) = x/(e^x - 1).
inline double bernoulli(double x) {
    const double ax = std::abs(x);
    if (ax < 1e-3) {
        const double x2 = x * x;
        return 1.0 - 0.5 * x + x2 / 12.0 - x2 * x2 / 720.0;
    }
    if (x > 700.0) return x * std::exp(-x);
    return x / std::expm1(x);
}

/// Derivative of the Bernoulli function.
inline double bernoulli_prime(double x) {
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return -0.5 + x / 6.0 - x * x2 / 180.0;
    }
    const double b = bernoulli(x);
    return b * (1.0 - b) / x - b;
}

/// Adaptive Gauss-Kronrod (7/15) integration to an absolute tolerance. Error estimates at the
/// level of rounding (a few ulps of max(1, |result|)) are accepted whatever the tolerance.
/// Throws QuadratureFailure if the error estimate stays above `abs_tol`.
template <class F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-10, unsigned max_depth = 18) {
    if (a == b) return 0.0;
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const auto acceptable = [abs_tol](double value, double error) {
        const double floor = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(value));
        return std::isfinite(value) && error <= std::max(abs_tol, floor);
    };
    double error = 0.0;
    const double coarse = GK::integrate(f, a, b, 0, 0.0, &error);
    if (acceptable(coarse, error)) return coarse;
    const double scale = std::max(std::abs(coarse), abs_tol);
    const double value = GK::integrate(f, a, b, max_depth, 0.5 * abs_tol / scale, &error);
    if (!acceptable(value, error)) {
        fail(ErrorKind::QuadratureFailure,
             "error estimate " + std::to_string(error) + " exceeds tolerance " +
                 std::to_string(abs_tol) + " on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
    }
    return value;
}

}  // namespace pnpchan::num
