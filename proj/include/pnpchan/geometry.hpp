#pragma once

/**
 * @file geometry.hpp
 * @brief Channel cross-section profiles h(x) = g0(x)^2 on [0,1], the geometry
 * factor rho0 = \int_0^1 1/h, and the Jacobians of the thin-domain coordinate
 * change (X,Y,Z) -> (x, Y/g, Z/g).
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

// Boost 1.74's pchip calls isnan unqualified.
namespace boost::math::interpolators {
using std::isnan;
}
#include <boost/math/interpolators/pchip.hpp>

#include "pnpchan/error.hpp"
#include "pnpchan/numerics.hpp"

namespace pnpchan {

namespace profile {

struct Constant {
    double value = 1.0;
    bool operator==(const Constant&) const = default;
};

/// h(x) = a + b x
struct AffineArea {
    double a = 1.0;
    double b = 0.0;
    bool operator==(const AffineArea&) const = default;
};

/// h(x) = base + amplitude * exp(-((x - 1/2)/width)^2)
struct Bump {
    double base = 1.0;
    double amplitude = 0.0;
    double width = 0.1;
    bool operator==(const Bump&) const = default;
};

/// Tabulated h with monotone (shape-preserving) cubic interpolation.
struct Sampled {
    std::vector<double> nodes;
    std::vector<double> values;
    bool operator==(const Sampled&) const = default;
};

}  // namespace profile

/// Cross-section area profile on [0,1]. Immutable; validated on construction.
class ChannelProfile {
public:
    using Kind = std::variant<profile::Constant, profile::AffineArea, profile::Bump, profile::Sampled>;

    ChannelProfile() : ChannelProfile(profile::Constant{1.0}) {}

    explicit ChannelProfile(Kind kind) : kind_(std::move(kind)) {
        if (const auto* s = std::get_if<profile::Sampled>(&kind_)) build_interpolant(*s);
        validate();
    }

    static ChannelProfile constant(double c) { return ChannelProfile(profile::Constant{c}); }
    static ChannelProfile affine(double a, double b) { return ChannelProfile(profile::AffineArea{a, b}); }
    static ChannelProfile bump(double base, double amplitude, double width) {
        return ChannelProfile(profile::Bump{base, amplitude, width});
    }
    static ChannelProfile sampled(std::vector<double> nodes, std::vector<double> values) {
        return ChannelProfile(profile::Sampled{std::move(nodes), std::move(values)});
    }

    const Kind& kind() const noexcept { return kind_; }
    bool is_constant() const noexcept { return std::holds_alternative<profile::Constant>(kind_); }

    /// h(x) without domain checking; see eval_h for the checked entry point.
    double value(double x) const {
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, profile::Constant>) {
                    return k.value;
                } else if constexpr (std::is_same_v<T, profile::AffineArea>) {
                    return k.a + k.b * x;
                } else if constexpr (std::is_same_v<T, profile::Bump>) {
                    const double z = (x - 0.5) / k.width;
                    return k.base + k.amplitude * std::exp(-z * z);
                } else {
                    return (*interp_)(std::clamp(x, k.nodes.front(), k.nodes.back()));
                }
            },
            kind_);
    }

    /// dh/dx
    double slope(double x) const {
        return std::visit(
            [&](const auto& k) -> double {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, profile::Constant>) {
                    return 0.0;
                } else if constexpr (std::is_same_v<T, profile::AffineArea>) {
                    return k.b;
                } else if constexpr (std::is_same_v<T, profile::Bump>) {
                    const double z = (x - 0.5) / k.width;
                    return -2.0 * z / k.width * k.amplitude * std::exp(-z * z);
                } else {
                    return interp_->prime(std::clamp(x, k.nodes.front(), k.nodes.back()));
                }
            },
            kind_);
    }

    /// Interior points where h is not C^2 (interpolation nodes); used to split quadrature.
    std::vector<double> breakpoints() const {
        std::vector<double> pts{0.0, 1.0};
        if (const auto* s = std::get_if<profile::Sampled>(&kind_)) {
            for (double x : s->nodes) {
                if (x > 0.0 && x < 1.0) pts.push_back(x);
            }
            std::sort(pts.begin(), pts.end());
        }
        return pts;
    }

    /// Same profile multiplied by a positive constant.
    ChannelProfile scaled(double factor) const {
        if (!(factor > 0.0)) fail(ErrorKind::InvalidProfile, "scale factor must be positive");
        return std::visit(
            [&](const auto& k) -> ChannelProfile {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, profile::Constant>) {
                    return constant(k.value * factor);
                } else if constexpr (std::is_same_v<T, profile::AffineArea>) {
                    return affine(k.a * factor, k.b * factor);
                } else if constexpr (std::is_same_v<T, profile::Bump>) {
                    return bump(k.base * factor, k.amplitude * factor, k.width);
                } else {
                    std::vector<double> v = k.values;
                    for (double& y : v) y *= factor;
                    return sampled(k.nodes, std::move(v));
                }
            },
            kind_);
    }

    bool operator==(const ChannelProfile& other) const { return kind_ == other.kind_; }

private:
    using Interp = boost::math::interpolators::pchip<std::vector<double>>;

    void build_interpolant(const profile::Sampled& s) {
        if (s.nodes.size() != s.values.size()) {
            fail(ErrorKind::InvalidProfile, "sampled profile: nodes and values differ in length");
        }
        if (s.nodes.size() < 4) fail(ErrorKind::InvalidProfile, "sampled profile needs at least 4 nodes");
        for (std::size_t i = 1; i < s.nodes.size(); ++i) {
            if (!(s.nodes[i] > s.nodes[i - 1])) {
                fail(ErrorKind::InvalidProfile, "sampled profile nodes must be strictly increasing");
            }
        }
        if (s.nodes.front() > 0.0 || s.nodes.back() < 1.0) {
            fail(ErrorKind::InvalidProfile, "sampled profile nodes must cover [0,1]");
        }
        auto x = s.nodes;
        auto y = s.values;
        interp_ = std::make_shared<const Interp>(std::move(x), std::move(y));
    }

    void validate() const {
        std::visit(
            [](const auto& k) {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, profile::Bump>) {
                    if (!(k.width > 0.0)) fail(ErrorKind::InvalidProfile, "bump width must be positive");
                }
            },
            kind_);

        // 1001 equispaced samples, then refine every interior minimum bracketed
        // by a sign change of h'.
        constexpr int samples = 1001;
        double prev_slope = slope(0.0);
        for (int i = 0; i < samples; ++i) {
            const double x = static_cast<double>(i) / (samples - 1);
            const double hx = value(x);
            if (!std::isfinite(hx) || !(hx > 0.0)) {
                fail(ErrorKind::InvalidProfile, "h(x) must be positive on [0,1]; h(" + std::to_string(x) +
                                                    ") = " + std::to_string(hx));
            }
            const double s = slope(x);
            if (i > 0 && prev_slope < 0.0 && s > 0.0) {
                double lo = static_cast<double>(i - 1) / (samples - 1);
                double hi = x;
                for (int it = 0; it < 60 && hi - lo > 1e-14; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (slope(mid) < 0.0 ? lo : hi) = mid;
                }
                const double hmin = value(0.5 * (lo + hi));
                if (!(hmin > 0.0)) {
                    fail(ErrorKind::InvalidProfile, "h has a nonpositive interior minimum near x = " +
                                                        std::to_string(0.5 * (lo + hi)));
                }
            }
            prev_slope = s;
        }
    }

    Kind kind_;
    std::shared_ptr<const Interp> interp_;
};

/// Checked evaluation of h at x in [0,1].
inline double eval_h(const ChannelProfile& profile, double x) {
    if (!(x >= 0.0 && x <= 1.0)) fail(ErrorKind::OutOfDomain, "x = " + std::to_string(x) + " outside [0,1]");
    return profile.value(x);
}

struct GeometrySummary {
    double rho0 = 1.0;             ///< \int_0^1 h^{-1}
    double volume_integral = 1.0;  ///< \int_0^1 h
};

/// \int_a^b h^{-1}(x) dx, split at the profile's breakpoints.
inline double inverse_area_integral(const ChannelProfile& profile, double a, double b, double tol = 1e-10) {
    if (profile.is_constant()) return (b - a) / profile.value(0.0);
    const auto inv = [&](double x) { return 1.0 / profile.value(x); };
    const auto pts = profile.breakpoints();
    if (pts.size() == 2) return num::integrate(inv, a, b, tol);
    double sum = 0.0;
    const double piece_tol = tol / static_cast<double>(pts.size());
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double lo = std::max(a, pts[i]);
        const double hi = std::min(b, pts[i + 1]);
        if (hi > lo) sum += num::integrate(inv, lo, hi, piece_tol);
    }
    return sum;
}

inline GeometrySummary geometry_factor(const ChannelProfile& profile, double quadrature_tol = 1e-10) {
    GeometrySummary out;
    out.rho0 = inverse_area_integral(profile, 0.0, 1.0, quadrature_tol);
    const auto pts = profile.breakpoints();
    const double piece_tol = quadrature_tol / static_cast<double>(pts.size());
    double volume = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        volume += num::integrate([&](double x) { return profile.value(x); }, pts[i], pts[i + 1], piece_tol);
    }
    out.volume_integral = volume;
    return out;
}

/// Rescale so that \int_0^1 h = 1.
inline ChannelProfile normalize_volume(const ChannelProfile& profile, double quadrature_tol = 1e-12) {
    const double volume = geometry_factor(profile, quadrature_tol).volume_integral;
    return profile.scaled(1.0 / volume);
}

/// Jacobians of (X,Y,Z) -> (x,y,z) = (X, Y/g, Z/g) at a point with wall value g and slope g_x.
struct CoordinateJacobians {
    Eigen::Matrix3d J;
    Eigen::Matrix3d J_inv;
    Eigen::Matrix3d JJt;
    double det_J_inv = 0.0;
};

inline CoordinateJacobians jacobian_products(double g, double g_x, double y, double z) {
    if (!(g > 0.0)) fail(ErrorKind::DegenerateGeometry, "wall function g must be positive");
    CoordinateJacobians out;
    const double g2 = g * g;
    out.J << g2, 0.0, 0.0,
             -g * g_x * y, g, 0.0,
             -g * g_x * z, 0.0, g;
    out.J /= g2;
    out.J_inv << 1.0, 0.0, 0.0,
                 g_x * y, g, 0.0,
                 g_x * z, 0.0, g;
    const double g3 = g2 * g;
    const double g4 = g2 * g2;
    const double gx2 = g_x * g_x;
    out.JJt << g4, -g3 * g_x * y, -g3 * g_x * z,
               -g3 * g_x * y, g2 + g2 * gx2 * y * y, g2 * gx2 * y * z,
               -g3 * g_x * z, g2 * gx2 * y * z, g2 + g2 * gx2 * z * z;
    out.JJt /= g4;
    out.det_J_inv = out.J_inv.determinant();
    return out;
}

/// Channel wall radius g(X, eps) together with dg/dX.
class WallFunction {
public:
    using Fn = std::function<double(double, double)>;

    WallFunction(Fn g, Fn dg, double epsilon) : g_(std::move(g)), dg_(std::move(dg)), epsilon_(epsilon) {
        if (!(epsilon_ > 0.0)) fail(ErrorKind::InvalidProfile, "wall parameter epsilon must be positive");
        for (int i = 0; i <= 1000; ++i) {
            const double X = i / 1000.0;
            if (!(g_(X, epsilon_) > 0.0)) {
                fail(ErrorKind::InvalidProfile, "wall g(X, eps) must be positive; fails at X = " + std::to_string(X));
            }
        }
    }

    /// g = eps * (1 + a (1 - cos 2 pi X)/2): flat at both ends, symmetric.
    static WallFunction flared(double epsilon, double amplitude) {
        return WallFunction(
            [amplitude](double X, double eps) {
                return eps * (1.0 + 0.5 * amplitude * (1.0 - std::cos(2.0 * std::numbers::pi * X)));
            },
            [amplitude](double X, double eps) {
                return eps * amplitude * std::numbers::pi * std::sin(2.0 * std::numbers::pi * X);
            },
            epsilon);
    }

    /// g = eps * (1 + (ratio - 1) (3X^2 - 2X^3)): smooth monotone taper, flat at both ends.
    static WallFunction tapered(double epsilon, double ratio) {
        return WallFunction([ratio](double X, double eps) { return eps * (1.0 + (ratio - 1.0) * X * X * (3.0 - 2.0 * X)); },
                            [ratio](double X, double eps) { return eps * (ratio - 1.0) * 6.0 * X * (1.0 - X); },
                            epsilon);
    }

    /// g = eps * (1 + slope X): not flat at the ends (violates the foliation precondition).
    static WallFunction conical(double epsilon, double slope) {
        return WallFunction([slope](double X, double eps) { return eps * (1.0 + slope * X); },
                            [slope](double, double eps) { return eps * slope; }, epsilon);
    }

    double epsilon() const noexcept { return epsilon_; }
    double value(double X) const { return g_(X, epsilon_); }
    double slope(double X) const { return dg_(X, epsilon_); }

    bool has_flat_ends(double tol = 1e-10) const {
        return std::abs(slope(0.0)) <= tol && std::abs(slope(1.0)) <= tol;
    }

private:
    Fn g_;
    Fn dg_;
    double epsilon_;
};

}  // namespace pnpchan
