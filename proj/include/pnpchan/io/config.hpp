#pragma once

/**
 * @file config.hpp
 * @brief JSON run configuration: parsing with defaults, strict key checking and exact
 * serialization. The schema is documented in docs/FORMATS.md.
 */

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/error.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/problem.hpp"
#include "pnpchan/transient_solver.hpp"

namespace pnpchan::io {

using Json = nlohmann::json;

/// Initial concentrations for transient runs: reference value times (1 + a sin(m pi x)) per
/// species, or uniform random values in [low, high] * M drawn from the run seed.
struct InitialData {
    std::string kind = "perturbed";  ///< "perturbed" | "random"
    double amplitude1 = 0.1;
    double amplitude2 = 0.0;
    int mode1 = 1;
    int mode2 = 1;
    double low = 0.01;   ///< random: lower fraction of M
    double high = 1.0;   ///< random: upper fraction of M

    bool operator==(const InitialData&) const = default;
};

struct LayerOptions {
    double tol = 1e-10;
    double xi_max = 0.0;  ///< 0: automatic span
    bool operator==(const LayerOptions&) const = default;
};

/// One-axis parameter sweep.
struct SweepSpec {
    std::string axis = "mu";                 ///< mu | phi0 | l1 | l2 | r1 | r2 | bump_amplitude | affine_slope
    std::vector<double> values;
    std::string command = "steady-asymptotic";  ///< per-point solve: steady-asymptotic | steady-bvp
    bool operator==(const SweepSpec&) const = default;
};

struct ValidateOptions {
    int random_trials = 20;
    bool operator==(const ValidateOptions&) const = default;
};

struct RunConfig {
    SteadyProblem problem;
    bool normalize_volume = false;
    SolverOptions solver;
    TransientOptions transient;
    InitialData initial;
    LayerOptions layers;
    SweepSpec sweep;
    ValidateOptions validate;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    /// Problem with the volume normalization applied.
    SteadyProblem effective_problem() const {
        SteadyProblem p = problem;
        if (normalize_volume) p.profile = pnpchan::normalize_volume(p.profile);
        return p;
    }

    bool operator==(const RunConfig&) const = default;
};

namespace detail {

/// Reads keys from one JSON object, remembering which were consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(ErrorKind::ParseError, "'" + path_ + "' must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    double number(const std::string& key, double fallback) {
        if (!take(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!take(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_number_integer()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be an integer");
        return v.get<std::int64_t>();
    }

    /// Full 64-bit unsigned range (seeds).
    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        if (!take(key)) return fallback;
        const auto& v = j_.at(key);
        if (v.is_number_integer() && !v.is_number_unsigned()) fail(ErrorKind::ValidationError, "'" + where(key) + "' must be non-negative");
        if (!v.is_number_unsigned()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be an integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!take(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_boolean()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be true or false");
        return v.get<bool>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        if (!take(key)) return fallback;
        const auto& v = j_.at(key);
        if (!v.is_string()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& key) {
        if (!take(key)) return {};
        const auto& v = j_.at(key);
        if (!v.is_array()) fail(ErrorKind::ParseError, "'" + where(key) + "' must be an array of numbers");
        std::vector<double> out;
        for (const auto& e : v) {
            if (!e.is_number()) fail(ErrorKind::ParseError, "'" + where(key) + "' must contain numbers only");
            out.push_back(e.get<double>());
        }
        return out;
    }

    /// Sub-object (empty object when absent).
    ObjectReader object(const std::string& key) {
        static const Json empty = Json::object();
        if (!take(key)) return ObjectReader(empty, where(key));
        return ObjectReader(j_.at(key), where(key));
    }

    /// Rejects keys that were never read.
    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) fail(ErrorKind::ParseError, "unknown key '" + where(key) + "'");
        }
    }

    std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    bool take(const std::string& key) {
        if (!j_.contains(key)) return false;
        seen_.insert(key);
        return true;
    }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::size_t positive_size(ObjectReader& r, const std::string& key, std::size_t fallback) {
    const auto v = r.integer(key, static_cast<std::int64_t>(fallback));
    if (v < 0) fail(ErrorKind::ValidationError, "'" + r.where(key) + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

inline Grading parse_grading(const std::string& s, const std::string& where) {
    if (s == "uniform") return Grading::Uniform;
    if (s == "tanh") return Grading::Tanh;
    fail(ErrorKind::ValidationError, "'" + where + "' must be \"uniform\" or \"tanh\"");
}

inline ChannelProfile parse_geometry(ObjectReader r) {
    const std::string kind = r.text("kind", "constant");
    ChannelProfile out;
    if (kind == "constant") {
        out = ChannelProfile::constant(r.number("value", 1.0));
    } else if (kind == "affine") {
        out = ChannelProfile::affine(r.number("a", 1.0), r.number("b", 0.0));
    } else if (kind == "bump") {
        out = ChannelProfile::bump(r.number("base", 1.0), r.number("amplitude", 0.0), r.number("width", 0.1));
    } else if (kind == "sampled") {
        out = ChannelProfile::sampled(r.numbers("nodes"), r.numbers("values"));
    } else {
        fail(ErrorKind::ValidationError, "unknown geometry kind '" + kind + "' (constant, affine, bump, sampled)");
    }
    r.finish();
    return out;
}

inline Json geometry_json(const ChannelProfile& p) {
    return std::visit(
        [](const auto& k) -> Json {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, profile::Constant>) {
                return {{"kind", "constant"}, {"value", k.value}};
            } else if constexpr (std::is_same_v<T, profile::AffineArea>) {
                return {{"kind", "affine"}, {"a", k.a}, {"b", k.b}};
            } else if constexpr (std::is_same_v<T, profile::Bump>) {
                return {{"kind", "bump"}, {"base", k.base}, {"amplitude", k.amplitude}, {"width", k.width}};
            } else {
                return {{"kind", "sampled"}, {"nodes", k.nodes}, {"values", k.values}};
            }
        },
        p.kind());
}

/// Converts library errors raised while building validated objects into ValidationError.
template <class F>
auto as_validation(const std::string& what, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::ValidationError) throw;
        fail(ErrorKind::ValidationError, what + ": " + e.what());
    }
}

}  // namespace detail

inline RunConfig parse_config(const Json& root) {
    using detail::ObjectReader;
    RunConfig c;
    ObjectReader top(root, "");

    {
        auto pr = top.object("problem");
        c.problem.profile = detail::as_validation("geometry", [&] { return detail::parse_geometry(pr.object("geometry")); });
        c.normalize_volume = pr.boolean("normalize_volume", false);
        auto sp = pr.object("species");
        c.problem.species = {sp.number("alpha1", 1.0), sp.number("alpha2", 1.0), sp.number("D1", 1.0), sp.number("D2", 1.0)};
        sp.finish();
        auto bd = pr.object("boundary");
        c.problem.boundary = {bd.number("phi0", 0.0), bd.number("l1", 1.0), bd.number("l2", 1.0), bd.number("r1", 1.0),
                              bd.number("r2", 1.0)};
        bd.finish();
        const bool has_mu = pr.has("mu");
        const bool has_lambda = pr.has("lambda");
        if (has_mu && has_lambda) fail(ErrorKind::ValidationError, "give exactly one of 'problem.mu' and 'problem.lambda'");
        if (has_lambda) {
            const double lambda = pr.number("lambda", 0.0);
            if (!(lambda > 0.0) || !std::isfinite(lambda)) {
                fail(ErrorKind::ValidationError, "'problem.lambda' must be positive and finite");
            }
            c.problem.mu = 1.0 / std::sqrt(lambda);
        } else {
            c.problem.mu = pr.number("mu", 0.01);
            if (!(c.problem.mu > 0.0) || !std::isfinite(c.problem.mu)) {
                fail(ErrorKind::ValidationError, "'problem.mu' must be positive and finite");
            }
        }
        pr.finish();
        detail::as_validation("species (alpha_i > 0, D_i > 0)", [&] { validate(c.problem.species); return 0; });
        detail::as_validation("boundary (l_i, r_i > 0, phi0 finite; positivity of concentrations)", [&] {
            validate(c.problem.boundary);
            return 0;
        });
    }
    {
        auto s = top.object("solver");
        auto& o = c.solver;
        o.N = detail::positive_size(s, "N", o.N);
        o.newton_tol = s.number("newton_tol", o.newton_tol);
        o.max_newton = static_cast<int>(s.integer("max_newton", o.max_newton));
        o.min_damping = s.number("min_damping", o.min_damping);
        o.mu_start = s.number("mu_start", o.mu_start);
        o.continuation_ratio = s.number("continuation_ratio", o.continuation_ratio);
        o.max_refinements = static_cast<int>(s.integer("max_refinements", o.max_refinements));
        const auto guess = s.text("initial_guess", to_string(o.initial_guess));
        if (guess == "linear") {
            o.initial_guess = InitialGuess::Linear;
        } else if (guess == "composite") {
            o.initial_guess = InitialGuess::Composite;
        } else {
            fail(ErrorKind::ValidationError, "'solver.initial_guess' must be \"linear\" or \"composite\"");
        }
        o.grading = detail::parse_grading(s.text("grading", to_string(o.grading)), "solver.grading");
        o.layer_fraction = s.number("layer_fraction", o.layer_fraction);
        s.finish();
        detail::as_validation("solver", [&] { validate(o); return 0; });
    }
    {
        auto t = top.object("transient");
        auto& o = c.transient;
        o.N = detail::positive_size(t, "N", o.N);
        o.grading = detail::parse_grading(t.text("grading", to_string(o.grading)), "transient.grading");
        o.T = t.number("T", o.T);
        o.dt0 = t.number("dt0", o.dt0);
        o.dt_max = t.number("dt_max", o.dt_max);
        o.dt_min = t.number("dt_min", o.dt_min);
        o.growth = t.number("growth", o.growth);
        const auto scheme = t.text("scheme", to_string(o.scheme));
        if (scheme == "implicit") {
            o.scheme = TimeScheme::Implicit;
        } else if (scheme == "gummel") {
            o.scheme = TimeScheme::Gummel;
        } else {
            fail(ErrorKind::ValidationError, "'transient.scheme' must be \"implicit\" or \"gummel\"");
        }
        o.gummel_iterations = static_cast<int>(t.integer("gummel_iterations", o.gummel_iterations));
        o.gummel_tol = t.number("gummel_tol", o.gummel_tol);
        o.newton_tol = t.number("newton_tol", o.newton_tol);
        o.max_newton = static_cast<int>(t.integer("max_newton", o.max_newton));
        o.monitor_tol = t.number("monitor_tol", o.monitor_tol);
        o.snapshot_every = detail::positive_size(t, "snapshot_every", o.snapshot_every);
        auto in = t.object("initial");
        auto& d = c.initial;
        d.kind = in.text("kind", d.kind);
        d.amplitude1 = in.number("amplitude1", d.amplitude1);
        d.amplitude2 = in.number("amplitude2", d.amplitude2);
        d.mode1 = static_cast<int>(in.integer("mode1", d.mode1));
        d.mode2 = static_cast<int>(in.integer("mode2", d.mode2));
        d.low = in.number("low", d.low);
        d.high = in.number("high", d.high);
        in.finish();
        t.finish();
        detail::as_validation("transient", [&] { validate(o); return 0; });
        if (d.kind != "perturbed" && d.kind != "random") {
            fail(ErrorKind::ValidationError, "'transient.initial.kind' must be \"perturbed\" or \"random\"");
        }
        if (!(std::abs(d.amplitude1) < 1.0 && std::abs(d.amplitude2) < 1.0)) {
            fail(ErrorKind::ValidationError, "perturbation amplitudes must satisfy |a| < 1 (positivity)");
        }
        if (!(d.low > 0.0 && d.low <= d.high && d.high <= 1.0)) {
            fail(ErrorKind::ValidationError, "random initial data need 0 < low <= high <= 1");
        }
    }
    {
        auto l = top.object("layers");
        c.layers.tol = l.number("tol", c.layers.tol);
        c.layers.xi_max = l.number("xi_max", c.layers.xi_max);
        l.finish();
        if (!(c.layers.tol > 0.0) || !(c.layers.xi_max >= 0.0)) {
            fail(ErrorKind::ValidationError, "'layers.tol' must be positive and 'layers.xi_max' non-negative");
        }
    }
    {
        auto s = top.object("sweep");
        c.sweep.axis = s.text("axis", c.sweep.axis);
        c.sweep.values = s.numbers("values");
        c.sweep.command = s.text("command", c.sweep.command);
        s.finish();
        static const std::set<std::string> axes{"mu", "phi0", "l1", "l2", "r1", "r2", "bump_amplitude", "affine_slope"};
        if (!axes.count(c.sweep.axis)) fail(ErrorKind::ValidationError, "unknown sweep axis '" + c.sweep.axis + "'");
        if (c.sweep.command != "steady-asymptotic" && c.sweep.command != "steady-bvp") {
            fail(ErrorKind::ValidationError, "'sweep.command' must be \"steady-asymptotic\" or \"steady-bvp\"");
        }
    }
    {
        auto v = top.object("validate");
        c.validate.random_trials = static_cast<int>(v.integer("random_trials", c.validate.random_trials));
        v.finish();
        if (c.validate.random_trials < 1) fail(ErrorKind::ValidationError, "'validate.random_trials' must be >= 1");
    }
    {
        auto o = top.object("output");
        c.output_dir = o.text("dir", c.output_dir);
        o.finish();
    }
    c.seed = top.unsigned_integer("seed", 0);
    top.finish();
    if (c.normalize_volume) detail::as_validation("normalize_volume", [&] { return c.effective_problem(); });
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    Json root;
    try {
        root = Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorKind::ParseError, std::string("malformed JSON: ") + e.what());
    }
    return parse_config(root);
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// Full configuration with every default made explicit; parse_config inverts it exactly.
inline Json to_json(const RunConfig& c) {
    const auto& p = c.problem;
    const auto& s = c.solver;
    const auto& t = c.transient;
    Json j;
    j["problem"] = {
        {"geometry", detail::geometry_json(p.profile)},
        {"normalize_volume", c.normalize_volume},
        {"species", {{"alpha1", p.species.alpha1}, {"alpha2", p.species.alpha2}, {"D1", p.species.D1}, {"D2", p.species.D2}}},
        {"boundary",
         {{"phi0", p.boundary.phi0}, {"l1", p.boundary.l1}, {"l2", p.boundary.l2}, {"r1", p.boundary.r1}, {"r2", p.boundary.r2}}},
        {"mu", p.mu},
    };
    j["solver"] = {{"N", s.N},
                   {"newton_tol", s.newton_tol},
                   {"max_newton", s.max_newton},
                   {"min_damping", s.min_damping},
                   {"mu_start", s.mu_start},
                   {"continuation_ratio", s.continuation_ratio},
                   {"max_refinements", s.max_refinements},
                   {"initial_guess", to_string(s.initial_guess)},
                   {"grading", to_string(s.grading)},
                   {"layer_fraction", s.layer_fraction}};
    j["transient"] = {{"N", t.N},
                      {"grading", to_string(t.grading)},
                      {"T", t.T},
                      {"dt0", t.dt0},
                      {"dt_max", t.dt_max},
                      {"dt_min", t.dt_min},
                      {"growth", t.growth},
                      {"scheme", to_string(t.scheme)},
                      {"gummel_iterations", t.gummel_iterations},
                      {"gummel_tol", t.gummel_tol},
                      {"newton_tol", t.newton_tol},
                      {"max_newton", t.max_newton},
                      {"monitor_tol", t.monitor_tol},
                      {"snapshot_every", t.snapshot_every},
                      {"initial",
                       {{"kind", c.initial.kind},
                        {"amplitude1", c.initial.amplitude1},
                        {"amplitude2", c.initial.amplitude2},
                        {"mode1", c.initial.mode1},
                        {"mode2", c.initial.mode2},
                        {"low", c.initial.low},
                        {"high", c.initial.high}}}};
    j["layers"] = {{"tol", c.layers.tol}, {"xi_max", c.layers.xi_max}};
    j["sweep"] = {{"axis", c.sweep.axis}, {"values", c.sweep.values}, {"command", c.sweep.command}};
    j["validate"] = {{"random_trials", c.validate.random_trials}};
    j["output"] = {{"dir", c.output_dir}};
    j["seed"] = c.seed;
    return j;
}

inline std::string serialize(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace pnpchan::io
