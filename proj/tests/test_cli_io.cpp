#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "pnpchan/io/commands.hpp"
#include "pnpchan/io/config.hpp"
#include "pnpchan/io/report.hpp"

using namespace pnpchan;
using namespace pnpchan::io;
namespace io = pnpchan::io;
using Catch::Matchers::ContainsSubstring;

namespace {

ErrorKind kind_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error for " << text);
    return ErrorKind::BadParameters;
}

std::string message_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pnpchan_cli_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

// Restores PNP_NUM_THREADS on scope exit.
struct ThreadsEnv {
    std::optional<std::string> saved;
    explicit ThreadsEnv(const char* value) {
        if (const char* v = std::getenv("PNP_NUM_THREADS")) saved = v;
        if (value) {
            ::setenv("PNP_NUM_THREADS", value, 1);
        } else {
            ::unsetenv("PNP_NUM_THREADS");
        }
    }
    ~ThreadsEnv() {
        if (saved) {
            ::setenv("PNP_NUM_THREADS", saved->c_str(), 1);
        } else {
            ::unsetenv("PNP_NUM_THREADS");
        }
    }
};

const char* standard_config = R"({
  "problem": {"boundary": {"phi0": 0, "l1": 1, "l2": 1, "r1": 2, "r2": 2}}
})";

}  // namespace

TEST_CASE("minimal config fills the documented defaults", "[cli_io][config]") {
    const auto c = parse_config(std::string("{}"));
    CHECK(c.solver.N == 801);
    CHECK(c.problem.mu == 0.01);
    CHECK(c.problem.profile == ChannelProfile::constant(1.0));
    CHECK(c.problem.species == IonSpecies{1.0, 1.0, 1.0, 1.0});
    CHECK(c.seed == 0);
    CHECK(c.output_dir == "out");
    CHECK_FALSE(c.normalize_volume);
}

TEST_CASE("lambda is converted to mu and mu/lambda are exclusive", "[cli_io][config]") {
    CHECK(parse_config(std::string(R"({"problem": {"lambda": 10000}})")).problem.mu == Catch::Approx(0.01).epsilon(1e-15));
    CHECK(parse_config(std::string(R"({"problem": {"mu": 0.2}})")).problem.mu == 0.2);
    CHECK(kind_of(R"({"problem": {"mu": 0.01, "lambda": 10000}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"problem": {"lambda": -1}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"problem": {"mu": 0}})") == ErrorKind::ValidationError);
}

TEST_CASE("negative boundary concentration is reported as a positivity failure", "[cli_io][config]") {
    const std::string text = R"({"problem": {"boundary": {"l1": -1}}})";
    CHECK(kind_of(text) == ErrorKind::ValidationError);
    CHECK_THAT(message_of(text), ContainsSubstring("positiv"));
}

TEST_CASE("unknown keys and malformed documents are parse errors with context", "[cli_io][config]") {
    CHECK(kind_of(R"({"bogus": 1})") == ErrorKind::ParseError);
    CHECK_THAT(message_of(R"({"solver": {"NN": 10}})"), ContainsSubstring("solver.NN"));
    CHECK_THAT(message_of(R"({"problem": {"geometry": {"kind": "bump", "hieght": 1}}})"), ContainsSubstring("hieght"));
    CHECK(kind_of("{\n  \"problem\": {\n    \"mu\": 0.01,\n  }\n}") == ErrorKind::ParseError);
    CHECK_THAT(message_of("{\n  \"problem\": {\n    \"mu\": 0.01,\n  }\n}"), ContainsSubstring("line 4"));
    CHECK(kind_of(R"({"solver": {"N": "many"}})") == ErrorKind::ParseError);
}

TEST_CASE("invalid option values are validation errors", "[cli_io][config]") {
    CHECK(kind_of(R"({"problem": {"geometry": {"kind": "torus"}}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"problem": {"geometry": {"kind": "constant", "value": -2}}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"problem": {"species": {"alpha1": 0}}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"solver": {"N": 5}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"transient": {"scheme": "leapfrog"}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"sweep": {"axis": "temperature"}})") == ErrorKind::ValidationError);
    CHECK(kind_of(R"({"seed": -3})") == ErrorKind::ValidationError);
}

TEST_CASE("seeds use the full unsigned 64-bit range", "[cli_io][config]") {
    const auto c = parse_config(std::string(R"({"seed": 18446744073709551615})"));
    CHECK(c.seed == std::numeric_limits<std::uint64_t>::max());
    CHECK(parse_config(serialize(c)) == c);
    CHECK(kind_of(R"({"seed": 1.5})") == ErrorKind::ParseError);
}

TEST_CASE("missing config file is an I/O error", "[cli_io][config]") {
    try {
        load_config("/nonexistent/pnpchan/config.json");
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IoError);
        CHECK(exit_code(e.kind()) == 4);
    }
}

TEST_CASE("config round-trip is exact", "[cli_io][config][property]") {
    SECTION("hand-written configs") {
        for (const char* text : {"{}", standard_config, R"({"problem": {"lambda": 2500}})",
                                 R"({"problem": {"geometry": {"kind": "sampled", "nodes": [0, 0.3, 0.7, 1], "values": [1, 0.4, 0.9, 2]},
                                                 "normalize_volume": true}, "seed": 99, "output": {"dir": "x/y"}})",
                                 R"({"sweep": {"axis": "phi0", "values": [0.1, 0.2, 0.30000000000000004]},
                                     "transient": {"scheme": "gummel", "initial": {"kind": "random", "low": 0.2}}})"}) {
            const auto c = parse_config(std::string(text));
            const auto again = parse_config(serialize(c));
            CHECK(again == c);
            CHECK(serialize(again) == serialize(c));
        }
    }
    SECTION("random configs") {
        std::mt19937_64 rng(20261016);
        std::uniform_real_distribution<double> U(0.0, 1.0);
        for (int trial = 0; trial < 200; ++trial) {
            Json j;
            switch (trial % 4) {
                case 0: j["problem"]["geometry"] = {{"kind", "constant"}, {"value", 0.1 + U(rng)}}; break;
                case 1: j["problem"]["geometry"] = {{"kind", "affine"}, {"a", 0.5 + U(rng)}, {"b", U(rng) - 0.2}}; break;
                case 2: j["problem"]["geometry"] = {{"kind", "bump"}, {"base", 1.0}, {"amplitude", 2 * U(rng)}, {"width", 0.05 + 0.2 * U(rng)}}; break;
                default: j["problem"]["geometry"] = {{"kind", "sampled"}, {"nodes", {0.0, 0.05 + 0.4 * U(rng), 0.55 + 0.4 * U(rng), 1.0}}, {"values", {0.2 + U(rng), 0.2 + U(rng), 0.2 + U(rng), 0.2 + U(rng)}}};
            }
            j["problem"]["boundary"] = {{"phi0", 4 * U(rng) - 2}, {"l1", 0.1 + U(rng)}, {"l2", 0.1 + U(rng)}, {"r1", 0.1 + U(rng)}, {"r2", 0.1 + U(rng)}};
            j["problem"]["species"] = {{"alpha1", 0.5 + U(rng)}, {"alpha2", 0.5 + U(rng)}, {"D1", 0.1 + U(rng)}, {"D2", 0.1 + U(rng)}};
            if (trial % 2) {
                j["problem"]["lambda"] = 1.0 / (1e-4 + U(rng));
            } else {
                j["problem"]["mu"] = 1e-3 + 0.1 * U(rng);
            }
            j["problem"]["normalize_volume"] = trial % 3 == 0;
            j["solver"] = {{"N", 100 + trial}, {"newton_tol", 1e-12 * (1 + U(rng))}};
            j["transient"] = {{"T", U(rng) + 0.01}, {"dt0", 1e-5 * (1 + U(rng))}, {"initial", {{"amplitude1", U(rng) * 0.5}}}};
            j["sweep"] = {{"values", {U(rng), U(rng)}}};
            j["seed"] = rng() >> 1;
            const auto c = parse_config(j);
            CHECK(parse_config(serialize(c)) == c);
        }
    }
}

TEST_CASE("steady-asymptotic on the standard problem gives J1 = J2 = -1", "[cli_io][dispatch]") {
    const auto r = dispatch("steady-asymptotic", parse_config(std::string(standard_config)));
    const auto& f = r.results["fluxes"];
    CHECK(f["J1"].get<double>() == Catch::Approx(-1.0).margin(1e-12));
    CHECK(f["J2"].get<double>() == Catch::Approx(-1.0).margin(1e-12));
    CHECK(f["Jbar1"] == f["J1"]);
    CHECK(f["Jbar2"] == f["J2"]);
    CHECK(f.contains("scaling"));
    CHECK(r.results["rho0"].get<double>() == 1.0);
    CHECK(r.results["endpoints"]["left"]["has_layer"] == false);
    REQUIRE(r.tables.size() == 1);
    CHECK(r.tables[0].file == "regular_layer.csv");
    CHECK(first_line(render_csv(r.tables[0])) == "x,phi,c1,c2,w,p");
    CHECK(r.command == "steady-asymptotic");
    CHECK(parse_config(r.config) == parse_config(std::string(standard_config)));
}

TEST_CASE("file names and CSV headers per command", "[cli_io][output]") {
    auto cfg = parse_config(std::string(R"({
      "problem": {"boundary": {"phi0": 1, "l1": 4, "l2": 1, "r1": 2, "r2": 2}, "mu": 0.05},
      "solver": {"N": 201},
      "transient": {"N": 60, "T": 0.02, "snapshot_every": 5},
      "sweep": {"axis": "phi0", "values": [0.5, 1.0]},
      "validate": {"random_trials": 3}
    })"));
    const std::map<std::string, std::map<std::string, std::string>> expected{
        {"steady-asymptotic", {{"regular_layer.csv", "x,phi,c1,c2,w,p"}}},
        {"steady-bvp", {{"solution.csv", "x,phi,c1,c2"}}},
        {"layers", {{"left_layer.csv", "xi,phi,u,v,w,H1,H2,H3"}, {"right_layer.csv", "xi,phi,u,v,w,H1,H2,H3"}}},
        {"transient", {{"trajectory.csv", "t,x,c1,c2,phi"}}},
        {"sweep", {{"sweep.csv", "value,rho0,J1,J2,Jbar1,Jbar2"}}},
    };
    for (const auto& [command, files] : expected) {
        DYNAMIC_SECTION(command) {
            const auto dir = scratch(command);
            const auto report = dispatch(command, cfg);
            const auto written = write_outputs(report, dir);
            CHECK(written.back() == "summary.json");
            CHECK(written.size() == files.size() + 1);
            for (const auto& [file, header] : files) {
                REQUIRE(std::filesystem::exists(dir / file));
                CHECK(first_line(slurp(dir / file)) == header);
            }
            // every emitted file is listed in the manifest
            std::size_t on_disk = 0;
            for (const auto& e : std::filesystem::directory_iterator(dir)) {
                ++on_disk;
                CHECK(std::find(written.begin(), written.end(), e.path().filename().string()) != written.end());
            }
            CHECK(on_disk == written.size());
            const auto summary = Json::parse(slurp(dir / "summary.json"));
            CHECK(summary["command"] == command);
            CHECK(summary["version"] == version);
            CHECK(summary["files"] == Json(written));
            CHECK(summary.contains("units"));
            CHECK(summary["timing"].contains("wall_seconds"));
            std::filesystem::remove_all(dir);
        }
    }
}

TEST_CASE("repeated identical runs produce byte-identical outputs", "[cli_io][output][determinism]") {
    auto cfg = parse_config(std::string(R"({
      "problem": {"boundary": {"phi0": 1, "l1": 4, "l2": 1, "r1": 2, "r2": 2}, "mu": 0.05},
      "solver": {"N": 201},
      "transient": {"N": 50, "T": 0.01, "initial": {"kind": "random"}},
      "seed": 12
    })"));
    for (const char* command : {"steady-bvp", "layers", "transient"}) {
        const auto a = dispatch(command, cfg);
        const auto b = dispatch(command, cfg);
        CHECK(render_summary(a, false) == render_summary(b, false));
        REQUIRE(a.tables.size() == b.tables.size());
        for (std::size_t i = 0; i < a.tables.size(); ++i) CHECK(render_csv(a.tables[i]) == render_csv(b.tables[i]));
    }
    SECTION("the seed changes random initial data") {
        auto other = cfg;
        other.seed = 13;
        CHECK(render_csv(dispatch("transient", cfg).tables[0]) != render_csv(dispatch("transient", other).tables[0]));
    }
    SECTION("timing is isolated to one field") {
        auto r = dispatch("layers", cfg);
        auto j = summary_json(r);
        r.wall_seconds += 1.0;
        auto k = summary_json(r);
        CHECK(j != k);
        j.erase("timing");
        k.erase("timing");
        CHECK(j == k);
    }
}

TEST_CASE("bump amplitude sweep: rho0 grows and |J| rho0 stays fixed", "[cli_io][sweep]") {
    auto cfg = parse_config(std::string(R"({
      "problem": {"geometry": {"kind": "bump", "base": 1, "amplitude": 0, "width": 0.12}, "normalize_volume": true,
                  "boundary": {"phi0": 1, "l1": 4, "l2": 1, "r1": 2, "r2": 2}},
      "sweep": {"axis": "bump_amplitude", "values": [0, 0.25, 0.5, 1, 2, 4, 8, 16]}
    })"));
    const auto r = dispatch("sweep", cfg);
    CHECK(r.passed);
    const auto& rows = r.tables.at(0).rows;
    REQUIRE(rows.size() == 8);
    CHECK(rows[0][1] == Catch::Approx(1.0).margin(1e-12));
    const double base = std::abs(rows[0][2]) * rows[0][1];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) CHECK(rows[i][1] >= rows[i - 1][1]);
        CHECK(std::abs(rows[i][2]) * rows[i][1] == Catch::Approx(base).epsilon(1e-12));
        CHECK(std::abs(rows[i][3]) * rows[i][1] == Catch::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("sweep results do not depend on the thread count", "[cli_io][sweep][concurrency]") {
    auto cfg = parse_config(std::string(R"({
      "problem": {"boundary": {"phi0": 1, "l1": 4, "l2": 1, "r1": 2, "r2": 2}},
      "solver": {"N": 161},
      "sweep": {"axis": "mu", "values": [0.2, 0.1, 0.05, 0.04], "command": "steady-bvp"}
    })"));
    std::string serial, parallel;
    {
        ThreadsEnv env("1");
        CHECK(io::detail::worker_count(4) == 1);
        serial = render_csv(dispatch("sweep", cfg).tables.at(0));
    }
    {
        ThreadsEnv env("4");
        CHECK(io::detail::worker_count(4) == 4);
        CHECK(io::detail::worker_count(2) == 2);
        parallel = render_csv(dispatch("sweep", cfg).tables.at(0));
    }
    CHECK(serial == parallel);
    CHECK(first_line(serial) == "value,rho0,J1,J2,Jbar1,Jbar2,J1_limit,J2_limit,rel_err");
    {
        ThreadsEnv env("zero");
        CHECK_THROWS_AS(io::detail::worker_count(4), Error);
    }
}

TEST_CASE("failed sweep points become NaN rows", "[cli_io][sweep]") {
    auto cfg = parse_config(std::string(R"({"sweep": {"axis": "l1", "values": [1, -1, 2]}})"));
    const auto r = dispatch("sweep", cfg);
    CHECK_FALSE(r.passed);
    REQUIRE(r.results["failures"].size() == 1);
    CHECK(r.results["failures"][0]["value"] == -1.0);
    const auto csv = render_csv(r.tables.at(0));
    CHECK_THAT(csv, ContainsSubstring("-1,nan,nan"));
    CHECK(summary_json(r)["results"]["failures"][0]["error"].get<std::string>().size() > 0);
}

TEST_CASE("sweep axis must match the geometry kind", "[cli_io][sweep]") {
    const auto r = dispatch("sweep", parse_config(std::string(R"({"sweep": {"axis": "bump_amplitude", "values": [1]}})")));
    CHECK_FALSE(r.passed);
    CHECK_THAT(r.results["failures"][0]["error"].get<std::string>(), ContainsSubstring("bump"));
    CHECK_THROWS_AS(dispatch("sweep", parse_config(std::string("{}"))), Error);
}

TEST_CASE("exit codes by error kind", "[cli_io]") {
    CHECK(exit_code(ErrorKind::IoError) == 4);
    CHECK(exit_code(ErrorKind::NonConvergence) == 3);
    CHECK(exit_code(ErrorKind::NotConverged) == 3);
    CHECK(exit_code(ErrorKind::StagnantStep) == 3);
    CHECK(exit_code(ErrorKind::ValidationError) == 2);
    CHECK(exit_code(ErrorKind::ParseError) == 2);
    CHECK(exit_code(ErrorKind::InvalidProblem) == 2);
}

TEST_CASE("unknown command and unwritable directory", "[cli_io]") {
    CHECK_THROWS_AS(dispatch("plot", parse_config(std::string("{}"))), Error);
    const auto r = dispatch("steady-asymptotic", parse_config(std::string("{}")));
    try {
        write_outputs(r, "/proc/pnpchan/forbidden");
        FAIL("no error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::IoError);
    }
}

TEST_CASE("number formatting round-trips", "[cli_io][output][property]") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-30.0, 30.0);
    for (int i = 0; i < 2000; ++i) {
        const double v = std::ldexp(U(rng), static_cast<int>(U(rng)));
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    }
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
}
