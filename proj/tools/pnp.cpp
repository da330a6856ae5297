// pnp: command-line front end for the pnpchan library.
//
//   pnp <command> --config <file> [--out <dir>] [--seed <n>]
//
// Exit status: 0 success, 2 validation failure, 3 solver non-convergence, 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pnpchan/io/commands.hpp"
#include "pnpchan/io/config.hpp"
#include "pnpchan/io/report.hpp"

namespace {

/// Best-effort structured failure report next to the regular outputs.
void report_failure(const std::string& command, const std::string& dir, const pnpchan::Error& e, int code) {
    nlohmann::json j = {{"command", command},
                        {"version", pnpchan::io::version},
                        {"error", {{"kind", std::string(pnpchan::to_string(e.kind()))}, {"message", e.what()}}},
                        {"exit_code", code}};
    std::cerr << j.dump(2) << "\n";
    if (dir.empty() || e.kind() == pnpchan::ErrorKind::IoError) return;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) return;
    std::ofstream out(std::filesystem::path(dir) / "summary.json", std::ios::binary | std::ios::trunc);
    if (out) out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    namespace io = pnpchan::io;
    CLI::App app{"Steady and transient ion flow through narrow channels (1D limiting PNP model)", "pnp"};
    std::string command;
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "steady-asymptotic | steady-bvp | layers | transient | sweep | validate")
        ->required()
        ->check(CLI::IsMember(io::command_names()));
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--seed", seed, "random seed (overrides seed)");
    app.set_version_flag("--version", io::version);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string dir = out_dir.value_or("");
    try {
        auto cfg = io::load_config(config_path);
        if (out_dir) cfg.output_dir = *out_dir;
        if (seed) cfg.seed = *seed;
        dir = cfg.output_dir;
        const auto report = io::dispatch(command, cfg);
        const auto files = io::write_outputs(report, cfg.output_dir);
        std::cout << command << ": " << (report.passed ? "ok" : "FAILED") << " (" << report.wall_seconds << " s)\n";
        for (const auto& f : files) std::cout << "  " << (std::filesystem::path(cfg.output_dir) / f).string() << "\n";
        if (!report.passed) {
            // validate: failed checks; sweep: failed points (worst status among them)
            int code = 2;
            if (command == "sweep") {
                code = 3;
                for (const auto& f : report.results["failures"]) {
                    const std::string msg = f["error"];
                    if (msg.rfind("ValidationError", 0) == 0 || msg.rfind("InvalidProblem", 0) == 0) code = 2;
                }
            }
            return code;
        }
        return 0;
    } catch (const pnpchan::Error& e) {
        const int code = io::exit_code(e.kind());
        report_failure(command, dir, e, code);
        return code;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
