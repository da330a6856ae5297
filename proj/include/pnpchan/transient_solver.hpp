#pragma once

/**
 * @file transient_solver.hpp
 * @brief Time integration of the one-dimensional limiting PNP system with Dirichlet data,
 * invariant-region monitoring and the relative-entropy Lyapunov functional for equal
 * boundary charges.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/error.hpp"
#include "pnpchan/fv_system.hpp"
#include "pnpchan/mesh.hpp"
#include "pnpchan/problem.hpp"

namespace pnpchan {

enum class TimeScheme {
    Implicit,  ///< fully coupled implicit Euler (Newton on phi, c1, c2)
    Gummel,    ///< Poisson at current c, then implicit Euler for c at frozen phi, repeated
};

inline const char* to_string(TimeScheme s) { return s == TimeScheme::Implicit ? "implicit" : "gummel"; }

struct TransientOptions {
    std::size_t N = 400;
    Grading grading = Grading::Uniform;
    double T = 1.0;
    double dt0 = 1e-4;
    double dt_max = 1e-2;
    double dt_min = 1e-12;
    double growth = 1.2;
    TimeScheme scheme = TimeScheme::Implicit;
    int gummel_iterations = 2;
    double gummel_tol = 1e-8;  ///< max |phi change| of the last inner Poisson solve before a Gummel step is rejected
    double newton_tol = 1e-10;
    int max_newton = 25;
    double monitor_tol = 1e-10;
    std::size_t snapshot_every = 0;  ///< 0: initial and final state only

    bool operator==(const TransientOptions&) const = default;
};

inline void validate(const TransientOptions& o) {
    if (o.N < 10) fail(ErrorKind::BadParameters, "transient mesh needs N >= 10");
    if (!(o.T > 0.0)) fail(ErrorKind::BadParameters, "T must be positive");
    if (!(o.dt0 > 0.0 && o.dt_max >= o.dt0)) fail(ErrorKind::BadParameters, "need 0 < dt0 <= dt_max");
    if (!(o.dt_min > 0.0 && o.dt_min <= o.dt0)) fail(ErrorKind::BadParameters, "need 0 < dt_min <= dt0");
    if (!(o.growth >= 1.0)) fail(ErrorKind::BadParameters, "growth must be >= 1");
    if (o.gummel_iterations < 1) fail(ErrorKind::BadParameters, "gummel_iterations must be >= 1");
    if (!(o.gummel_tol > 0.0)) fail(ErrorKind::BadParameters, "gummel_tol must be positive");
    if (!(o.newton_tol > 0.0) || o.max_newton < 1) fail(ErrorKind::BadParameters, "bad Newton settings");
    if (!(o.monitor_tol >= 0.0)) fail(ErrorKind::BadParameters, "monitor_tol must be >= 0");
}

struct TransientState {
    double t = 0.0;
    std::vector<double> x;
    NodalFields fields;
};

/// M = max{alpha1 l1, alpha1 r1, alpha2 l2, alpha2 r2}.
inline double invariant_region_bound(const BoundaryData& b, const IonSpecies& s) {
    validate(b);
    validate(s);
    return std::max({s.alpha1 * b.l1, s.alpha1 * b.r1, s.alpha2 * b.l2, s.alpha2 * b.r2});
}

struct InvariantRegionMonitor {
    double M = 0.0;
    double tol = 1e-10;
    double min_charge = std::numeric_limits<double>::infinity();   ///< min over run of alpha_i c_i
    double max_charge = -std::numeric_limits<double>::infinity();  ///< max over run of alpha_i c_i
    bool violated = false;

    void observe(const NodalFields& f, const IonSpecies& s) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            const double a = s.alpha1 * f.c1[i];
            const double b = s.alpha2 * f.c2[i];
            min_charge = std::min({min_charge, a, b});
            max_charge = std::max({max_charge, a, b});
        }
        violated = min_charge < -tol || max_charge > M + tol;
    }
};

struct LyapunovTrace {
    double k = 0.0;
    std::vector<double> t;
    std::vector<double> L;
    NodalFields reference;

    /// Largest increase L(t_{n+1}) - L(t_n) over the trace (<= 0 for a monotone trace).
    double max_increase() const {
        double worst = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 1; i < L.size(); ++i) worst = std::max(worst, L[i] - L[i - 1]);
        return L.size() < 2 ? 0.0 : worst;
    }
};

/// Steady state for equal boundary charges k: c = k/alpha, phi = phi0 \int_x^1 h^{-1} / rho0.
inline NodalFields equal_charge_reference(const MeshMetrics& m, const BoundaryData& b, const IonSpecies& s) {
    if (!is_equal_charge_data(b, s)) fail(ErrorKind::InvalidProblem, "boundary charges are not all equal");
    const std::size_t n = m.nodes();
    const double k = s.alpha1 * b.l1;
    NodalFields f{std::vector<double>(n), std::vector<double>(n, k / s.alpha1), std::vector<double>(n, k / s.alpha2)};
    double tail = 0.0;
    f.phi[n - 1] = 0.0;
    for (std::size_t i = n - 1; i-- > 0;) {
        tail += m.ds[i];
        f.phi[i] = b.phi0 * tail / m.rho0;
    }
    f.phi[0] = b.phi0;
    return f;
}

/// L = sum_j (1/D_j) \int h (c_j - c_j0) ln(c_j / c_j0), trapezoid rule on the mesh.
inline double lyapunov(const NodalFields& f, const MeshMetrics& m, double k, const IonSpecies& s) {
    if (!(k > 0.0)) fail(ErrorKind::InvalidProblem, "k must be positive");
    const double ref[2] = {k / s.alpha1, k / s.alpha2};
    const double D[2] = {s.D1, s.D2};
    const std::vector<double>* c[2] = {&f.c1, &f.c2};
    double L = 0.0;
    for (int j = 0; j < 2; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < m.nodes(); ++i) {
            const double ci = (*c[j])[i];
            if (!(ci > 0.0)) fail(ErrorKind::NonpositiveConcentration, "Lyapunov functional needs c > 0");
            const double rel = (ci - ref[j]) / ref[j];
            sum += m.hv[i] * (ci - ref[j]) * std::log1p(rel);
        }
        L += sum / D[j];
    }
    return L;
}

inline double lyapunov(const TransientState& state, const ChannelProfile& profile, double k, const IonSpecies& s) {
    Mesh mesh;
    mesh.nodes = state.x;
    return lyapunov(state.fields, mesh_metrics(mesh, profile), k, s);
}

/// Solves mu^2 (h phi')' = -h (alpha1 c1 - alpha2 c2), mu^2 = 1/lambda, with phi(0) = phi0, phi(1) = 0.
inline std::vector<double> poisson_solve(const std::vector<double>& c1, const std::vector<double>& c2,
                                         const MeshMetrics& m, const IonSpecies& s, double phi0, double lambda) {
    const std::size_t n = m.nodes();
    if (c1.size() != n || c2.size() != n) fail(ErrorKind::BadParameters, "concentration arrays do not match the mesh");
    if (!(lambda > 0.0)) fail(ErrorKind::BadParameters, "lambda must be positive");
    const double mu2 = 1.0 / lambda;
    // Tridiagonal system for the interior nodes, a_i phi_{i-1} + b_i phi_i + c_i phi_{i+1} = d_i.
    const std::size_t k = n - 2;
    std::vector<double> a(k), b(k), c(k), d(k), phi(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t i = j + 1;
        a[j] = mu2 / m.ds[i - 1];
        c[j] = mu2 / m.ds[i];
        b[j] = -(a[j] + c[j]);
        d[j] = -m.hv[i] * (s.alpha1 * c1[i] - s.alpha2 * c2[i]);
    }
    d[0] -= a[0] * phi0;
    // Thomas elimination
    for (std::size_t j = 1; j < k; ++j) {
        if (b[j - 1] == 0.0) fail(ErrorKind::SingularSystem, "zero pivot in Poisson solve");
        const double w = a[j] / b[j - 1];
        b[j] -= w * c[j - 1];
        d[j] -= w * d[j - 1];
    }
    if (b[k - 1] == 0.0) fail(ErrorKind::SingularSystem, "zero pivot in Poisson solve");
    phi[0] = phi0;
    phi[n - 1] = 0.0;
    phi[k] = d[k - 1] / b[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) phi[j + 1] = (d[j] - c[j] * phi[j + 2]) / b[j];
    return phi;
}

namespace detail {

/// Implicit Euler for one species at frozen phi: a tridiagonal M-matrix system.
inline std::vector<double> species_implicit(const std::vector<double>& c_old, const std::vector<double>& phi,
                                            const MeshMetrics& m, double z, double D, double dt, double left,
                                            double right) {
    const std::size_t n = m.nodes();
    const std::size_t k = n - 2;
    std::vector<double> a(k), b(k), c(k), d(k), out(n);
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t i = j + 1;
        const double dl = z * (phi[i] - phi[i - 1]);
        const double dr = z * (phi[i + 1] - phi[i]);
        const double mass = m.hv[i] / (D * dt);
        // (J_{i-1} - J_i) - mass (c_i - c_old) = 0
        a[j] = num::bernoulli(dl) / m.ds[i - 1];
        c[j] = num::bernoulli(-dr) / m.ds[i];
        b[j] = -num::bernoulli(-dl) / m.ds[i - 1] - num::bernoulli(dr) / m.ds[i] - mass;
        d[j] = -mass * c_old[i];
    }
    d[0] -= a[0] * left;
    d[k - 1] -= c[k - 1] * right;
    for (std::size_t j = 1; j < k; ++j) {
        const double w = a[j] / b[j - 1];
        b[j] -= w * c[j - 1];
        d[j] -= w * d[j - 1];
    }
    out[0] = left;
    out[n - 1] = right;
    out[k] = d[k - 1] / b[k - 1];
    for (std::size_t j = k - 1; j-- > 0;) out[j + 1] = (d[j] - c[j] * out[j + 2]) / b[j];
    return out;
}

}  // namespace detail

/// Discrete transient problem: mesh, metrics and data for one run.
class TransientSystem {
public:
    TransientSystem(const SteadyProblem& problem, const TransientOptions& options)
        : problem_(problem), options_(options) {
        validate(problem_);
        validate(options_);
        if (!(problem_.mu > 0.0)) fail(ErrorKind::InvalidProblem, "transient runs need lambda = 1/mu^2 finite");
        mesh_ = build_layer_mesh(options_.N, problem_.mu, options_.grading);
        sys_.emplace(mesh_metrics(mesh_, problem_.profile), problem_.species, problem_.boundary, problem_.mu);
    }

    const Mesh& mesh() const noexcept { return mesh_; }
    const MeshMetrics& metrics() const noexcept { return sys_->metrics(); }
    const SteadyProblem& problem() const noexcept { return problem_; }
    const TransientOptions& options() const noexcept { return options_; }
    const DiscretePnp& discrete() const noexcept { return *sys_; }

    /// One time step of length dt. Throws StepRejected when the step fails or loses positivity.
    TransientState step(const TransientState& state, double dt) const {
        if (!(dt > 0.0)) fail(ErrorKind::BadParameters, "dt must be positive");
        TransientState next;
        next.t = state.t + dt;
        next.x = state.x;
        const auto& sp = problem_.species;
        const auto& bd = problem_.boundary;
        if (options_.scheme == TimeScheme::Implicit) {
            next.fields = state.fields;
            StorageTerm storage{&state.fields, dt};
            const auto rep =
                detail::newton_solve(*sys_, next.fields, &storage, options_.newton_tol, options_.max_newton, 0x1p-20, 1);
            if (!rep.converged) fail(ErrorKind::StepRejected, "implicit step did not converge: " + rep.message);
        } else {
            NodalFields f = state.fields;
            sys_->pin(f);
            for (int it = 0; it < options_.gummel_iterations; ++it) {
                f.phi = poisson_solve(f.c1, f.c2, metrics(), sp, bd.phi0, problem_.lambda());
                f.c1 = detail::species_implicit(state.fields.c1, f.phi, metrics(), sp.alpha1, sp.D1, dt, bd.l1, bd.r1);
                f.c2 = detail::species_implicit(state.fields.c2, f.phi, metrics(), -sp.alpha2, sp.D2, dt, bd.l2, bd.r2);
            }
            // The frozen-phi splitting is only stable when the inner loop contracts, roughly
            // lambda * D * dt small; a step whose last Poisson update is still large is rejected.
            const auto phi = poisson_solve(f.c1, f.c2, metrics(), sp, bd.phi0, problem_.lambda());
            double change = 0.0;
            for (std::size_t i = 0; i < phi.size(); ++i) change = std::max(change, std::abs(phi[i] - f.phi[i]));
            if (!(change <= options_.gummel_tol)) {
                fail(ErrorKind::StepRejected, "Gummel inner iteration not converged (phi change " + std::to_string(change) + ")");
            }
            f.phi = phi;
            next.fields = std::move(f);
        }
        for (std::size_t i = 0; i < next.fields.size(); ++i) {
            if (!(next.fields.c1[i] > 0.0) || !(next.fields.c2[i] > 0.0)) {
                fail(ErrorKind::StepRejected, "nonpositive concentration after step");
            }
        }
        return next;
    }

    /// State with the given interior concentrations, pinned boundary values and consistent phi.
    TransientState initial_state(std::vector<double> c1, std::vector<double> c2) const {
        const std::size_t n = mesh_.size();
        if (c1.size() != n || c2.size() != n) fail(ErrorKind::BadParameters, "initial data does not match the mesh");
        TransientState s;
        s.x = mesh_.nodes;
        s.fields.c1 = std::move(c1);
        s.fields.c2 = std::move(c2);
        s.fields.phi.assign(n, 0.0);
        sys_->pin(s.fields);
        const auto& sp = problem_.species;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(s.fields.c1[i] > 0.0) || !(s.fields.c2[i] > 0.0)) {
                fail(ErrorKind::NonpositiveConcentration, "initial concentrations must be positive");
            }
        }
        s.fields.phi = poisson_solve(s.fields.c1, s.fields.c2, metrics(), sp, problem_.boundary.phi0, problem_.lambda());
        return s;
    }

private:
    SteadyProblem problem_;
    TransientOptions options_;
    Mesh mesh_;
    std::optional<DiscretePnp> sys_;
};

struct TransientRun {
    std::vector<TransientState> snapshots;
    TransientState final_state;
    InvariantRegionMonitor monitor;
    std::optional<LyapunovTrace> lyapunov;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    double last_dt = 0.0;
};

/// Adaptive run to time T: halve dt on rejection, grow by options.growth on acceptance up to dt_max.
inline TransientRun run_transient(const TransientSystem& system, TransientState state) {
    const auto& o = system.options();
    const auto& pr = system.problem();
    TransientRun run;
    run.monitor.M = invariant_region_bound(pr.boundary, pr.species);
    run.monitor.tol = o.monitor_tol;
    run.monitor.observe(state.fields, pr.species);
    if (is_equal_charge_data(pr.boundary, pr.species)) {
        LyapunovTrace tr;
        tr.k = pr.species.alpha1 * pr.boundary.l1;
        tr.reference = equal_charge_reference(system.metrics(), pr.boundary, pr.species);
        tr.t.push_back(state.t);
        tr.L.push_back(lyapunov(state.fields, system.metrics(), tr.k, pr.species));
        run.lyapunov = std::move(tr);
    }
    run.snapshots.push_back(state);

    double dt = o.dt0;
    const double t_end = state.t + o.T;
    while (state.t < t_end * (1.0 - 1e-14)) {
        const double h = std::min(dt, t_end - state.t);
        try {
            state = system.step(state, h);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::StepRejected) throw;
            ++run.rejected_steps;
            dt = 0.5 * h;
            if (dt < o.dt_min) fail(ErrorKind::StagnantStep, "time step fell below " + std::to_string(o.dt_min));
            continue;
        }
        ++run.accepted_steps;
        run.last_dt = h;
        run.monitor.observe(state.fields, pr.species);
        if (run.lyapunov) {
            run.lyapunov->t.push_back(state.t);
            run.lyapunov->L.push_back(lyapunov(state.fields, system.metrics(), run.lyapunov->k, pr.species));
        }
        if (o.snapshot_every > 0 && run.accepted_steps % o.snapshot_every == 0) run.snapshots.push_back(state);
        dt = std::min(h * o.growth, o.dt_max);
        if (h < dt && h == t_end - state.t) dt = std::max(dt, h);
    }
    if (run.snapshots.back().t != state.t) run.snapshots.push_back(state);
    run.final_state = std::move(state);
    return run;
}

/// Convenience overload with initial concentrations given as functions of x.
inline TransientRun run_transient(const SteadyProblem& problem, const std::function<double(double)>& c1_init,
                                  const std::function<double(double)>& c2_init, const TransientOptions& options) {
    TransientSystem system(problem, options);
    const auto& x = system.mesh().nodes;
    std::vector<double> c1(x.size()), c2(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        c1[i] = c1_init(x[i]);
        c2[i] = c2_init(x[i]);
    }
    return run_transient(system, system.initial_state(std::move(c1), std::move(c2)));
}

/// Least-squares fit of ln L against t over the second half of a trace: slope and R^2.
struct LogLinearFit {
    double slope = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};

inline LogLinearFit fit_log_tail(const LyapunovTrace& trace, double from_fraction = 0.5) {
    LogLinearFit fit;
    if (trace.t.size() < 3) return fit;
    const double t0 = trace.t.front() + from_fraction * (trace.t.back() - trace.t.front());
    std::vector<double> ts, ys;
    for (std::size_t i = 0; i < trace.t.size(); ++i) {
        if (trace.t[i] >= t0 && trace.L[i] > 0.0) {
            ts.push_back(trace.t[i]);
            ys.push_back(std::log(trace.L[i]));
        }
    }
    fit.points = ts.size();
    if (ts.size() < 3) return fit;
    const double n = static_cast<double>(ts.size());
    double mt = 0, my = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        my += ys[i];
    }
    mt /= n;
    my /= n;
    double stt = 0, sty = 0, syy = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        sty += (ts[i] - mt) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    fit.slope = sty / stt;
    fit.r_squared = syy > 0.0 ? sty * sty / (stt * syy) : 1.0;
    return fit;
}

}  // namespace pnpchan
