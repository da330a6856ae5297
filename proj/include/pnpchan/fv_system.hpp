#pragma once

/**
 * @file fv_system.hpp
 * @brief Finite-volume discretization of the one-dimensional PNP equations on a mesh,
 * shared by the steady and the transient solvers.
 *
 * Cells are measured in s = \int h^{-1} dx, so that the face quantities h phi' and h c' are
 * differenced exactly for piecewise-linear-in-s fields. Nernst-Planck fluxes use exponential
 * fitting (Scharfetter-Gummel). Boundary nodes carry Dirichlet data and are not unknowns.
 */

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/mesh.hpp"
#include "pnpchan/numerics.hpp"
#include "pnpchan/problem.hpp"

namespace pnpchan {

/// Nodal fields phi, c1, c2 (boundary nodes included).
struct NodalFields {
    std::vector<double> phi;
    std::vector<double> c1;
    std::vector<double> c2;

    std::size_t size() const noexcept { return phi.size(); }
    bool operator==(const NodalFields&) const = default;
};

/// Geometric data of a mesh for a given profile.
struct MeshMetrics {
    std::vector<double> x;    ///< nodes
    std::vector<double> ds;   ///< \int_cell h^{-1}, one per cell
    std::vector<double> hv;   ///< h(x_i) * control-volume length, one per node (lumped mass)
    double rho0 = 0.0;        ///< sum of ds

    std::size_t nodes() const noexcept { return x.size(); }
};

/// `quad_tol` is the quadrature tolerance per unit cell width.
inline MeshMetrics mesh_metrics(const Mesh& mesh, const ChannelProfile& profile, double quad_tol = 1e-12) {
    validate(mesh);
    MeshMetrics m;
    m.x = mesh.nodes;
    const std::size_t n = m.x.size();
    m.ds.resize(n - 1);
    m.hv.assign(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double width = m.x[i + 1] - m.x[i];
        m.ds[i] = inverse_area_integral(profile, m.x[i], m.x[i + 1], quad_tol * width);
        m.rho0 += m.ds[i];
        m.hv[i] += 0.5 * width;
        m.hv[i + 1] += 0.5 * width;
    }
    for (std::size_t i = 0; i < n; ++i) m.hv[i] *= profile.value(m.x[i]);
    return m;
}

/// Exponentially fitted flux of h c' + z c h phi' = -J across one cell.
inline double sg_flux(double c_left, double c_right, double dphi, double z, double ds) {
    const double d = z * dphi;
    return (num::bernoulli(d) * c_left - num::bernoulli(-d) * c_right) / ds;
}

/// Implicit-Euler storage data for the transient residual.
struct StorageTerm {
    const NodalFields* previous = nullptr;
    double dt = 0.0;
};

/// Residual and Jacobian of the coupled discrete system.
class DiscretePnp {
public:
    DiscretePnp(MeshMetrics metrics, IonSpecies species, BoundaryData boundary, double mu)
        : m_(std::move(metrics)), sp_(species), bd_(boundary), mu2_(mu * mu) {
        if (m_.nodes() < 3) fail(ErrorKind::BadParameters, "need at least one interior node");
        if (!(mu > 0.0)) fail(ErrorKind::BadParameters, "mu must be positive");
    }

    const MeshMetrics& metrics() const noexcept { return m_; }
    const IonSpecies& species() const noexcept { return sp_; }
    const BoundaryData& boundary() const noexcept { return bd_; }
    double mu2() const noexcept { return mu2_; }
    void set_mu(double mu) { mu2_ = mu * mu; }

    std::size_t unknowns() const noexcept { return 3 * (m_.nodes() - 2); }
    static std::size_t index(std::size_t node, int field) { return 3 * (node - 1) + static_cast<std::size_t>(field); }

    /// Imposes the Dirichlet data on the boundary nodes.
    void pin(NodalFields& f) const {
        const std::size_t n = m_.nodes() - 1;
        f.phi[0] = bd_.phi0;
        f.phi[n] = 0.0;
        f.c1[0] = bd_.l1;
        f.c1[n] = bd_.r1;
        f.c2[0] = bd_.l2;
        f.c2[n] = bd_.r2;
    }

    /// Cell fluxes (reduced, J = -(h c' + z c h phi')) for both species.
    void cell_fluxes(const NodalFields& f, std::vector<double>& J1, std::vector<double>& J2) const {
        const std::size_t cells = m_.nodes() - 1;
        J1.resize(cells);
        J2.resize(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            const double dphi = f.phi[i + 1] - f.phi[i];
            J1[i] = sg_flux(f.c1[i], f.c1[i + 1], dphi, sp_.alpha1, m_.ds[i]);
            J2[i] = sg_flux(f.c2[i], f.c2[i + 1], dphi, -sp_.alpha2, m_.ds[i]);
        }
    }

    /// F(f) for the interior unknowns; with a storage term, the implicit-Euler residual
    /// J_{i-1} - J_i - hV (c - c_old)/(D dt).
    void residual(const NodalFields& f, Eigen::VectorXd& F, const StorageTerm* storage = nullptr) const {
        assemble(f, F, nullptr, storage);
    }

    void residual_and_jacobian(const NodalFields& f, Eigen::VectorXd& F, Eigen::SparseMatrix<double>& Jac,
                               const StorageTerm* storage = nullptr) const {
        assemble(f, F, &Jac, storage);
    }

private:
    void assemble(const NodalFields& f, Eigen::VectorXd& F, Eigen::SparseMatrix<double>* Jac,
                  const StorageTerm* storage) const {
        const std::size_t n = m_.nodes();
        F.setZero(static_cast<Eigen::Index>(unknowns()));
        std::vector<Eigen::Triplet<double>> trip;
        if (Jac) trip.reserve(unknowns() * 9);
        const auto add = [&](std::size_t row_node, int row_field, std::size_t col_node, int col_field, double v) {
            if (col_node == 0 || col_node == n - 1) return;
            trip.emplace_back(static_cast<int>(index(row_node, row_field)), static_cast<int>(index(col_node, col_field)), v);
        };
        const double z[2] = {sp_.alpha1, -sp_.alpha2};
        const double D[2] = {sp_.D1, sp_.D2};
        const std::vector<double>* conc[2] = {&f.c1, &f.c2};
        const std::vector<double>* old[2] = {nullptr, nullptr};
        if (storage) {
            if (!storage->previous || !(storage->dt > 0.0)) fail(ErrorKind::BadParameters, "invalid storage term");
            old[0] = &storage->previous->c1;
            old[1] = &storage->previous->c2;
        }

        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double dsl = m_.ds[i - 1];
            const double dsr = m_.ds[i];
            const double dphil = f.phi[i] - f.phi[i - 1];
            const double dphir = f.phi[i + 1] - f.phi[i];

            // Poisson
            const auto rp = static_cast<Eigen::Index>(index(i, 0));
            F[rp] = mu2_ * (dphir / dsr - dphil / dsl) + m_.hv[i] * (sp_.alpha1 * f.c1[i] - sp_.alpha2 * f.c2[i]);
            if (Jac) {
                add(i, 0, i - 1, 0, mu2_ / dsl);
                add(i, 0, i, 0, -mu2_ / dsl - mu2_ / dsr);
                add(i, 0, i + 1, 0, mu2_ / dsr);
                add(i, 0, i, 1, m_.hv[i] * sp_.alpha1);
                add(i, 0, i, 2, -m_.hv[i] * sp_.alpha2);
            }

            // Nernst-Planck, one row per species
            for (int k = 0; k < 2; ++k) {
                const auto& c = *conc[k];
                const int field = k + 1;
                const double dl = z[k] * dphil;
                const double dr = z[k] * dphir;
                const double Bl = num::bernoulli(dl), Blm = num::bernoulli(-dl);
                const double Br = num::bernoulli(dr), Brm = num::bernoulli(-dr);
                const double Fl = (Bl * c[i - 1] - Blm * c[i]) / dsl;
                const double Fr = (Br * c[i] - Brm * c[i + 1]) / dsr;
                const auto row = static_cast<Eigen::Index>(index(i, field));
                F[row] = Fl - Fr;
                double diag_storage = 0.0;
                if (storage) {
                    diag_storage = m_.hv[i] / (D[k] * storage->dt);
                    F[row] -= diag_storage * (c[i] - (*old[k])[i]);
                }
                if (Jac) {
                    const double Gl = (num::bernoulli_prime(dl) * c[i - 1] + num::bernoulli_prime(-dl) * c[i]) / dsl;
                    const double Gr = (num::bernoulli_prime(dr) * c[i] + num::bernoulli_prime(-dr) * c[i + 1]) / dsr;
                    add(i, field, i - 1, field, Bl / dsl);
                    add(i, field, i, field, -Blm / dsl - Br / dsr - diag_storage);
                    add(i, field, i + 1, field, Brm / dsr);
                    add(i, field, i - 1, 0, -z[k] * Gl);
                    add(i, field, i, 0, z[k] * (Gl + Gr));
                    add(i, field, i + 1, 0, -z[k] * Gr);
                }
            }
        }
        if (Jac) {
            Jac->resize(static_cast<Eigen::Index>(unknowns()), static_cast<Eigen::Index>(unknowns()));
            Jac->setFromTriplets(trip.begin(), trip.end());
        }
    }

    MeshMetrics m_;
    IonSpecies sp_;
    BoundaryData bd_;
    double mu2_;
};

}  // namespace pnpchan
