/**
 * @file error.hpp
 * @brief Error codes and the exception type thrown across riskmf
 */

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace riskmf {

enum class ErrorCode {
    InvalidInput,
    NonFiniteInput,
    NonpositiveRho,
    EmptyBounds,
    BlowUpInput,
    NonFiniteState,
    EmptyTrajectory,
    CflViolation,
    MassLoss,
    IntegrabilityViolation,
    Io,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::NonpositiveRho: return "NonpositiveRho";
        case ErrorCode::EmptyBounds: return "EmptyBounds";
        case ErrorCode::BlowUpInput: return "BlowUpInput";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::EmptyTrajectory: return "EmptyTrajectory";
        case ErrorCode::CflViolation: return "CflViolation";
        case ErrorCode::MassLoss: return "MassLoss";
        case ErrorCode::IntegrabilityViolation: return "IntegrabilityViolation";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Numerical failures (as opposed to bad input) map to a distinct CLI exit code.
[[nodiscard]] constexpr bool is_numerical(ErrorCode code) {
    switch (code) {
        case ErrorCode::BlowUpInput:
        case ErrorCode::NonFiniteState:
        case ErrorCode::CflViolation:
        case ErrorCode::MassLoss:
        case ErrorCode::IntegrabilityViolation:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Thrown by FPK solvers; carries the largest admissible time step.
class CflError : public Error {
public:
    CflError(const std::string& message, double dt_required)
        : Error(ErrorCode::CflViolation, message), dt_required_(dt_required) {}

    [[nodiscard]] double dt_required() const noexcept { return dt_required_; }

private:
    double dt_required_;
};

} // namespace riskmf
