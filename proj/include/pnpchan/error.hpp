#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pnpchan {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
    OutOfDomain,
    InvalidProfile,
    QuadratureFailure,
    DegenerateGeometry,
    RootFindFailure,
    InvalidProblem,
    NonpositiveW,
    LogSingularity,
    NonHyperbolic,
    DivergentOrbit,
    BadParameters,
    NonConvergence,
    NotConverged,
    SingularSystem,
    StepRejected,
    StagnantStep,
    NonpositiveConcentration,
    ParseError,
    ValidationError,
    IoError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::OutOfDomain: return "OutOfDomain";
        case ErrorKind::InvalidProfile: return "InvalidProfile";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::DegenerateGeometry: return "DegenerateGeometry";
        case ErrorKind::RootFindFailure: return "RootFindFailure";
        case ErrorKind::InvalidProblem: return "InvalidProblem";
        case ErrorKind::NonpositiveW: return "NonpositiveW";
        case ErrorKind::LogSingularity: return "LogSingularity";
        case ErrorKind::NonHyperbolic: return "NonHyperbolic";
        case ErrorKind::DivergentOrbit: return "DivergentOrbit";
        case ErrorKind::BadParameters: return "BadParameters";
        case ErrorKind::NonConvergence: return "NonConvergence";
        case ErrorKind::NotConverged: return "NotConverged";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::StepRejected: return "StepRejected";
        case ErrorKind::StagnantStep: return "StagnantStep";
        case ErrorKind::NonpositiveConcentration: return "NonpositiveConcentration";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace pnpchan
