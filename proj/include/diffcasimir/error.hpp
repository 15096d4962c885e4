#pragma once

#include <stdexcept>
#include <string>

namespace diffcasimir {

// Machine-parsable error categories. The CLI prints `error: <code>: <message>`.
enum class ErrorCode {
    Domain,
    Divergence,
    Convergence,
    Instability,
    Lookup,
    GridMismatch,
    RankDeficient,
    Config,
    Io,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::Domain: return "DOMAIN";
    case ErrorCode::Divergence: return "DIVERGENCE";
    case ErrorCode::Convergence: return "CONVERGENCE";
    case ErrorCode::Instability: return "INSTABILITY";
    case ErrorCode::Lookup: return "LOOKUP";
    case ErrorCode::GridMismatch: return "GRID_MISMATCH";
    case ErrorCode::RankDeficient: return "RANK_DEFICIENT";
    case ErrorCode::Config: return "CONFIG";
    case ErrorCode::Io: return "IO";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Numerical integration or series evaluation failed to reach its tolerance.
/// `achieved_error` is the best error estimate obtained; `location` is the
/// abscissa (e.g. separation or frequency) where it happened.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double location, double achieved_error)
        : Error(ErrorCode::Convergence, what), location_(location), achieved_error_(achieved_error) {}
    double location() const noexcept { return location_; }
    double achieved_error() const noexcept { return achieved_error_; }

private:
    double location_;
    double achieved_error_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

} // namespace diffcasimir
