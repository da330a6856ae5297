#pragma once

/**
 * @file report.hpp
 * @brief In-memory run reports (JSON summary plus CSV tables) and their deterministic
 * serialization to an output directory.
 */

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnpchan/error.hpp"

namespace pnpchan::io {

inline constexpr const char* version = "1.0.0";

/// Attached to every summary: all numbers refer to the nondimensionalized problem.
inline constexpr const char* units_note =
    "dimensionless (scaled) quantities: x in [0,1], phi in thermal-voltage units, concentrations relative to the "
    "characteristic concentration; J_k are reduced fluxes, Jbar_k = D_k J_k the physical ones";

/// Columnar data written as one CSV file.
struct Table {
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        if (row.size() != columns.size()) fail(ErrorKind::BadParameters, "row width does not match the header of " + file);
        rows.push_back(std::move(row));
    }
};

struct RunReport {
    std::string command;
    nlohmann::json config;              ///< echo of the fully defaulted config
    nlohmann::json results = nlohmann::json::object();
    std::vector<Table> tables;
    double wall_seconds = 0.0;          ///< the only nondeterministic field
    bool passed = true;                 ///< false when a check-type command found failures
};

/// Shortest text that reads back to the same double ("nan", "inf", "-inf" for non-finite values).
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

inline std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + t.columns[i];
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
        out += '\n';
    }
    return out;
}

/// Names of every file write_outputs emits, summary.json last.
inline std::vector<std::string> manifest(const RunReport& r) {
    std::vector<std::string> files;
    for (const auto& t : r.tables) files.push_back(t.file);
    files.push_back("summary.json");
    return files;
}

/// Summary document. `include_timing = false` gives the deterministic part only.
inline nlohmann::json summary_json(const RunReport& r, bool include_timing = true) {
    nlohmann::json j;
    j["command"] = r.command;
    j["version"] = version;
    j["units"] = units_note;
    j["config"] = r.config;
    j["results"] = r.results;
    j["passed"] = r.passed;
    j["files"] = manifest(r);
    if (include_timing) j["timing"] = {{"wall_seconds", r.wall_seconds}};
    return j;
}

/// Pretty-printed summary. Non-finite numbers are written as JSON null.
inline std::string render_summary(const RunReport& r, bool include_timing = true) {
    return summary_json(r, include_timing).dump(2) + "\n";
}

inline std::vector<std::string> write_outputs(const RunReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::IoError, "cannot create output directory '" + dir.string() + "': " + ec.message());
    const auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::IoError, "cannot open '" + (dir / name).string() + "' for writing");
        out << text;
        if (!out) fail(ErrorKind::IoError, "write to '" + (dir / name).string() + "' failed");
    };
    for (const auto& t : r.tables) write(t.file, render_csv(t));
    write("summary.json", render_summary(r));
    return manifest(r);
}

}  // namespace pnpchan::io
