#pragma once

/**
 * @file mesh.hpp
 * @brief Nodes on [0,1] with optional tanh clustering in boundary layers of width 8 mu.
 */

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pnpchan/error.hpp"

namespace pnpchan {

enum class Grading { Uniform, Tanh };

inline const char* to_string(Grading g) { return g == Grading::Uniform ? "uniform" : "tanh"; }

struct Mesh {
    std::vector<double> nodes;  ///< x_0 = 0 < ... < x_N = 1
    Grading grading = Grading::Uniform;
    double layer_width = 0.0;  ///< width of each clustered end zone (0 for uniform)

    std::size_t intervals() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }
    std::size_t size() const noexcept { return nodes.size(); }
    double operator[](std::size_t i) const { return nodes[i]; }
};

inline void validate(const Mesh& m) {
    if (m.nodes.size() < 2) fail(ErrorKind::BadParameters, "mesh needs at least two nodes");
    if (m.nodes.front() != 0.0 || m.nodes.back() != 1.0) fail(ErrorKind::BadParameters, "mesh must span [0,1] exactly");
    for (std::size_t i = 1; i < m.nodes.size(); ++i) {
        if (!(m.nodes[i] > m.nodes[i - 1])) fail(ErrorKind::BadParameters, "mesh nodes must be strictly increasing");
    }
}

namespace detail {

/// beta with beta / tanh(beta) = R (R >= 1); beta = 0 for R <= 1.
inline double tanh_stretch(double R) {
    if (R <= 1.0) return 0.0;
    const auto f = [R](double b) { return b / std::tanh(b) - R; };
    double lo = 1e-8;
    double hi = std::max(1.0, R);
    while (f(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Upper bound on the tanh stretching exponent: the wall spacing is then at least
/// sech^2(2) ~ 7% of the spacing at the zone edge.
inline constexpr double max_tanh_stretch = 2.0;

/// N intervals. Tanh grading puts round(N * fraction / 2) intervals into each end zone of width
/// min(8 mu, that share of [0,1]). Inside a zone nodes follow x = w (1 - tanh(b (1 - t))/tanh b),
/// with b chosen to make the spacing continuous where the zone meets the uniform middle part,
/// capped at max_tanh_stretch. The mesh is symmetric under x -> 1 - x.
inline Mesh build_layer_mesh(std::size_t N, double mu, Grading grading, double fraction = 0.5) {
    if (N < 10) fail(ErrorKind::BadParameters, "mesh needs N >= 10 intervals");
    if (!(mu > 0.0) || !std::isfinite(mu)) fail(ErrorKind::BadParameters, "mesh layer parameter mu must be positive");
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorKind::BadParameters, "layer node fraction must be in (0,1)");
    Mesh m;
    m.grading = grading;
    m.nodes.resize(N + 1);
    const double dN = static_cast<double>(N);
    if (grading == Grading::Uniform) {
        for (std::size_t i = 0; i <= N; ++i) m.nodes[i] = static_cast<double>(i) / dN;
        m.nodes[N] = 1.0;
        return m;
    }

    std::size_t zone = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(dN * fraction / 2.0)));
    zone = std::min(zone, (N - 1) / 2);
    const double dz = static_cast<double>(zone);
    const double sigma = std::min(8.0 * mu, dz / dN);
    m.layer_width = sigma;
    const double middle_h = (1.0 - 2.0 * sigma) / (dN - 2.0 * dz);
    const double beta = std::min(detail::tanh_stretch(dz * middle_h / sigma), max_tanh_stretch);

    std::vector<double> left(N / 2 + 1);
    for (std::size_t j = 0; j < left.size(); ++j) {
        const double jd = static_cast<double>(j);
        if (j <= zone) {
            const double t = jd / dz;
            left[j] = beta == 0.0 ? sigma * t : sigma * (1.0 - std::tanh(beta * (1.0 - t)) / std::tanh(beta));
        } else {
            left[j] = sigma + (jd - dz) * middle_h;
        }
    }
    for (std::size_t i = 0; i <= N; ++i) m.nodes[i] = i < left.size() ? left[i] : 1.0 - left[N - i];
    if (N % 2 == 0) m.nodes[N / 2] = 0.5;
    m.nodes[0] = 0.0;
    m.nodes[N] = 1.0;
    validate(m);
    return m;
}

}  // namespace pnpchan
