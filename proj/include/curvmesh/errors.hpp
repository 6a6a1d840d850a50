#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace curvmesh {

enum class ErrorCode {
    invalid_argument,
    degenerate_neighborhood,
    empty_ring,
    degenerate_triangle,
    insufficient_neighbors,
    ill_conditioned_fit,
    sampling_exhausted,
    skipped_triangles_exceeded,
    indefinite_mass,
    convergence,
    oracle_unconverged,
    unsupported_level,
    ambiguous_cluster,
    io,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::degenerate_neighborhood: return "degenerate-neighborhood";
    case ErrorCode::empty_ring: return "empty-ring";
    case ErrorCode::degenerate_triangle: return "degenerate-triangle";
    case ErrorCode::insufficient_neighbors: return "insufficient-neighbors";
    case ErrorCode::ill_conditioned_fit: return "ill-conditioned-fit";
    case ErrorCode::sampling_exhausted: return "sampling-exhausted";
    case ErrorCode::skipped_triangles_exceeded: return "skipped-triangles-exceeded";
    case ErrorCode::indefinite_mass: return "indefinite-mass";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::oracle_unconverged: return "oracle-unconverged";
    case ErrorCode::unsupported_level: return "unsupported-level";
    case ErrorCode::ambiguous_cluster: return "ambiguous-cluster";
    case ErrorCode::io: return "io";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library. The code is the
/// stable, machine-readable part; the message is for humans.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , m_code(code)
    {}

    ErrorCode code() const noexcept { return m_code; }

private:
    ErrorCode m_code;
};

/// Raised when the eigensolver exhausts its iteration budget. Carries the
/// residuals of the best iterate so callers can decide whether to accept it.
class ConvergenceError : public Error
{
public:
    ConvergenceError(const std::string& message, std::vector<double> best_residuals)
        : Error(ErrorCode::convergence, message)
        , m_residuals(std::move(best_residuals))
    {}

    const std::vector<double>& best_residuals() const noexcept { return m_residuals; }

private:
    std::vector<double> m_residuals;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message)
{
    if (!condition) fail(code, message);
}

} // namespace curvmesh
