#pragma once

/**
 * @file bvp_solver.hpp
 * @brief Finite-mu steady states by damped Newton on the exponentially fitted finite-volume
 * system, with geometric continuation in mu.
 */

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pnpchan/error.hpp"
#include "pnpchan/fv_system.hpp"
#include "pnpchan/mesh.hpp"
#include "pnpchan/problem.hpp"
#include "pnpchan/singular_orbit.hpp"
#include "pnpchan/steady_asymptotics.hpp"

namespace pnpchan {

enum class InitialGuess { Linear, Composite };

inline const char* to_string(InitialGuess g) { return g == InitialGuess::Linear ? "linear" : "composite"; }

struct SolverOptions {
    std::size_t N = 801;           ///< mesh intervals
    double newton_tol = 1e-10;     ///< max-norm of the diagonally scaled residual
    int max_newton = 50;           ///< per continuation stage
    double min_damping = 0x1p-20;  ///< smallest line-search step
    double mu_start = 0.5;
    double continuation_ratio = 0.5;
    int max_refinements = 12;      ///< extra stages inserted after a failed stage
    InitialGuess initial_guess = InitialGuess::Linear;
    Grading grading = Grading::Tanh;
    double layer_fraction = 0.5;

    bool operator==(const SolverOptions&) const = default;
};

inline void validate(const SolverOptions& o) {
    if (o.N < 11) fail(ErrorKind::BadParameters, "solver needs N >= 11");
    if (!(o.newton_tol > 0.0)) fail(ErrorKind::BadParameters, "newton_tol must be positive");
    if (o.max_newton <= 0) fail(ErrorKind::BadParameters, "max_newton must be positive");
    if (!(o.min_damping > 0.0 && o.min_damping <= 1.0)) fail(ErrorKind::BadParameters, "min_damping must be in (0,1]");
    if (!(o.mu_start > 0.0)) fail(ErrorKind::BadParameters, "mu_start must be positive");
    if (!(o.continuation_ratio > 0.0 && o.continuation_ratio < 1.0)) {
        fail(ErrorKind::BadParameters, "continuation_ratio must be in (0,1)");
    }
    if (o.max_refinements < 0) fail(ErrorKind::BadParameters, "max_refinements must be >= 0");
    if (!(o.layer_fraction > 0.0 && o.layer_fraction < 1.0)) fail(ErrorKind::BadParameters, "layer_fraction must be in (0,1)");
}

struct ContinuationStage {
    double mu = 0.0;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
};

struct DiscreteSolution {
    std::vector<double> x;
    NodalFields fields;
    std::vector<double> J1_cell;  ///< reduced cell fluxes
    std::vector<double> J2_cell;
    IonSpecies species;
    double mu = 0.0;
    bool converged = false;
    double residual_norm = 0.0;
    int newton_iterations = 0;  ///< total over all stages
    std::vector<ContinuationStage> stages;
};

struct NewtonReport {
    bool converged = false;
    int iterations = 0;
    double residual = std::numeric_limits<double>::infinity();
    std::string message;
};

namespace detail {

inline bool positive_concentrations(const NodalFields& f) {
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (!(f.c1[i] > 0.0) || !(f.c2[i] > 0.0)) return false;
    }
    return true;
}

inline void apply_step(const NodalFields& base, const Eigen::VectorXd& delta, double t, NodalFields& out) {
    out = base;
    const std::size_t n = base.size();
    for (std::size_t i = 1; i + 1 < n; ++i) {
        out.phi[i] += t * delta[static_cast<Eigen::Index>(DiscretePnp::index(i, 0))];
        out.c1[i] += t * delta[static_cast<Eigen::Index>(DiscretePnp::index(i, 1))];
        out.c2[i] += t * delta[static_cast<Eigen::Index>(DiscretePnp::index(i, 2))];
    }
}

/// Damped Newton on F(f) = 0 with residuals scaled by the Jacobian diagonal. Concentrations are
/// kept positive by the line search. At least `min_iter` updates are applied before the
/// tolerance test can stop the iteration.
inline NewtonReport newton_solve(const DiscretePnp& sys, NodalFields& f, const StorageTerm* storage, double tol,
                                 int max_iter, double min_damping, int min_iter = 0) {
    NewtonReport rep;
    Eigen::VectorXd F, Ft, scale;
    Eigen::SparseMatrix<double> Jac;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    bool analyzed = false;
    NodalFields trial;
    sys.pin(f);

    for (int it = 0; it <= max_iter; ++it) {
        sys.residual_and_jacobian(f, F, Jac, storage);
        scale = Jac.diagonal().cwiseAbs().cwiseInverse();
        rep.residual = F.cwiseProduct(scale).lpNorm<Eigen::Infinity>();
        if (!std::isfinite(rep.residual)) {
            rep.message = "non-finite residual";
            return rep;
        }
        if (rep.residual < tol && it >= min_iter) {
            rep.converged = true;
            return rep;
        }
        if (it == max_iter) break;
        ++rep.iterations;

        if (!analyzed) {
            lu.analyzePattern(Jac);
            analyzed = true;
        }
        lu.factorize(Jac);
        if (lu.info() != Eigen::Success) {
            rep.message = "singular Jacobian";
            return rep;
        }
        const Eigen::VectorXd delta = lu.solve(-F);
        if (lu.info() != Eigen::Success || !delta.allFinite()) {
            rep.message = "linear solve failed";
            return rep;
        }

        const double merit = F.cwiseProduct(scale).norm();
        double t = 1.0;
        bool accepted = false;
        while (t >= min_damping) {
            apply_step(f, delta, t, trial);
            if (positive_concentrations(trial)) {
                sys.residual(trial, Ft, storage);
                const double m = Ft.cwiseProduct(scale).norm();
                if (std::isfinite(m) && m <= (1.0 - 1e-4 * t) * merit) {
                    accepted = true;
                    break;
                }
                // Steps that cannot reduce the merit any further at roundoff level are kept.
                if (std::isfinite(m) && merit < 1e3 * tol && t == 1.0) {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) {
            rep.message = "line search failed below damping " + std::to_string(min_damping);
            return rep;
        }
        f = std::move(trial);
    }
    rep.message = "no convergence in " + std::to_string(max_iter) + " iterations";
    return rep;
}

inline NodalFields linear_guess(const MeshMetrics& m, const BoundaryData& bd) {
    const std::size_t n = m.nodes();
    NodalFields f{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double x = m.x[i];
        f.phi[i] = bd.phi0 * (1.0 - x);
        f.c1[i] = bd.l1 + (bd.r1 - bd.l1) * x;
        f.c2[i] = bd.l2 + (bd.r2 - bd.l2) * x;
    }
    return f;
}

inline NodalFields composite_guess(const SteadyProblem& problem, const MeshMetrics& m) {
    const auto orbit = singular_orbit(problem);
    const std::size_t n = m.nodes();
    NodalFields f{std::vector<double>(n), std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const auto v = orbit.composite(m.x[i], problem.mu);
        f.phi[i] = v.phi;
        f.c1[i] = std::max(v.c1, 1e-12);
        f.c2[i] = std::max(v.c2, 1e-12);
    }
    return f;
}

}  // namespace detail

/// Continuation values mu_start * ratio^k strictly above the target, followed by the target.
inline std::vector<double> continuation_schedule(double mu_target, double mu_start, double ratio) {
    std::vector<double> out;
    for (double m = mu_start; m > mu_target * (1.0 + 1e-12); m *= ratio) out.push_back(m);
    out.push_back(mu_target);
    return out;
}

inline DiscreteSolution solve_steady_bvp(const SteadyProblem& problem, const SolverOptions& options = {}) {
    validate(problem);
    validate(options);
    if (!(problem.mu > 0.0)) fail(ErrorKind::InvalidProblem, "the steady solver needs mu > 0");

    const Mesh mesh = build_layer_mesh(options.N, problem.mu, options.grading, options.layer_fraction);
    DiscretePnp sys(mesh_metrics(mesh, problem.profile), problem.species, problem.boundary, problem.mu);

    DiscreteSolution sol;
    sol.x = mesh.nodes;
    sol.species = problem.species;
    sol.mu = problem.mu;

    NodalFields f;
    std::vector<double> schedule;
    bool use_composite = options.initial_guess == InitialGuess::Composite;
    if (use_composite) {
        f = detail::composite_guess(problem, sys.metrics());
        sys.set_mu(problem.mu);
        const auto rep = detail::newton_solve(sys, f, nullptr, options.newton_tol, options.max_newton, options.min_damping);
        sol.stages.push_back({problem.mu, rep.iterations, rep.converged, rep.residual});
        sol.newton_iterations += rep.iterations;
        if (rep.converged) {
            schedule.clear();
        } else {
            use_composite = false;  // fall back to continuation from the linear guess
        }
    }
    if (!use_composite) {
        f = detail::linear_guess(sys.metrics(), problem.boundary);
        schedule = continuation_schedule(problem.mu, std::max(options.mu_start, problem.mu), options.continuation_ratio);
    }

    double last_mu = std::numeric_limits<double>::quiet_NaN();
    int refinements = 0;
    NewtonReport rep;
    rep.converged = use_composite;
    for (std::size_t k = 0; k < schedule.size();) {
        const double mu = schedule[k];
        NodalFields trial = f;
        sys.set_mu(mu);
        rep = detail::newton_solve(sys, trial, nullptr, options.newton_tol, options.max_newton, options.min_damping);
        sol.stages.push_back({mu, rep.iterations, rep.converged, rep.residual});
        sol.newton_iterations += rep.iterations;
        if (rep.converged) {
            f = std::move(trial);
            last_mu = mu;
            ++k;
            continue;
        }
        if (std::isnan(last_mu) || refinements >= options.max_refinements) {
            fail(ErrorKind::NonConvergence, "steady solve failed at mu = " + std::to_string(mu) + " (" + rep.message +
                                                ", scaled residual " + std::to_string(rep.residual) +
                                                "); try a smaller continuation_ratio or a larger N");
        }
        ++refinements;
        schedule.insert(schedule.begin() + static_cast<std::ptrdiff_t>(k), std::sqrt(last_mu * mu));
    }

    sol.fields = f;
    sol.converged = true;
    sol.residual_norm = sol.stages.back().residual;
    sys.cell_fluxes(f, sol.J1_cell, sol.J2_cell);
    return sol;
}

struct ExtractedFluxes {
    FluxPair fluxes;
    double spread1 = 0.0;  ///< max |J1_cell - mean| / max(|mean|, 1e-12)
    double spread2 = 0.0;
};

inline ExtractedFluxes extract_fluxes_with_spread(const DiscreteSolution& s) {
    if (!s.converged) fail(ErrorKind::NotConverged, "flux extraction needs a converged solution");
    const auto stats = [](const std::vector<double>& J, double& mean) {
        mean = 0.0;
        for (double v : J) mean += v;
        mean /= static_cast<double>(J.size());
        double spread = 0.0;
        for (double v : J) spread = std::max(spread, std::abs(v - mean));
        return spread / std::max(std::abs(mean), 1e-12);
    };
    ExtractedFluxes out;
    double J1 = 0.0, J2 = 0.0;
    out.spread1 = stats(s.J1_cell, J1);
    out.spread2 = stats(s.J2_cell, J2);
    out.fluxes = make_flux_pair(J1, J2, s.species);
    return out;
}

inline FluxPair extract_fluxes(const DiscreteSolution& s) { return extract_fluxes_with_spread(s).fluxes; }

struct ConvergenceRow {
    double mu = 0.0;
    double J1 = 0.0;
    double J2 = 0.0;
    double rel_err = 0.0;  ///< max over species of |J - J_limit| / max(|J_limit|, 1e-12)
    double order = std::numeric_limits<double>::quiet_NaN();  ///< vs previous row
    bool ok = false;
    std::string message;
};

struct ConvergenceStudy {
    FluxPair limit;
    std::vector<ConvergenceRow> rows;
};

inline ConvergenceStudy mu_convergence_study(SteadyProblem problem, const std::vector<double>& mu_list,
                                             const SolverOptions& options = {}) {
    if (mu_list.empty()) fail(ErrorKind::BadParameters, "mu list is empty");
    for (std::size_t i = 0; i < mu_list.size(); ++i) {
        if (!(mu_list[i] > 0.0) || (i > 0 && !(mu_list[i] < mu_list[i - 1]))) {
            fail(ErrorKind::BadParameters, "mu list must be positive and strictly decreasing");
        }
    }
    ConvergenceStudy study;
    study.limit = limiting_fluxes(problem);
    const auto rel = [](double J, double ref) { return std::abs(J - ref) / std::max(std::abs(ref), 1e-12); };
    for (double mu : mu_list) {
        ConvergenceRow row;
        row.mu = mu;
        problem.mu = mu;
        try {
            const auto f = extract_fluxes(solve_steady_bvp(problem, options));
            row.J1 = f.J1;
            row.J2 = f.J2;
            row.rel_err = std::max(rel(f.J1, study.limit.J1), rel(f.J2, study.limit.J2));
            row.ok = true;
        } catch (const Error& e) {
            row.message = e.what();
        }
        if (!study.rows.empty() && row.ok && study.rows.back().ok && row.rel_err > 0.0 &&
            study.rows.back().rel_err > 0.0) {
            const auto& prev = study.rows.back();
            row.order = std::log(prev.rel_err / row.rel_err) / std::log(prev.mu / row.mu);
        }
        study.rows.push_back(row);
    }
    return study;
}

}  // namespace pnpchan
