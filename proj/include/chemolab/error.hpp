#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chemolab {

enum class ErrorCode {
    DimensionTooLow,
    InvalidParams,
    H1Violated,
    IntervalViolation,
    RangeViolation,
    InadmissibleExponents,
    OrderingViolation,
    MuBoundViolation,
    SingularityAtOrigin,
    UnsupportedGrid,
    NonFiniteState,
    InvalidExponent,
    NotEnoughData,
    InputMismatch,
    ConfigError,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::DimensionTooLow: return "DimensionTooLow";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::H1Violated: return "H1Violated";
        case ErrorCode::IntervalViolation: return "IntervalViolation";
        case ErrorCode::RangeViolation: return "RangeViolation";
        case ErrorCode::InadmissibleExponents: return "InadmissibleExponents";
        case ErrorCode::OrderingViolation: return "OrderingViolation";
        case ErrorCode::MuBoundViolation: return "MuBoundViolation";
        case ErrorCode::SingularityAtOrigin: return "SingularityAtOrigin";
        case ErrorCode::UnsupportedGrid: return "UnsupportedGrid";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::InvalidExponent: return "InvalidExponent";
        case ErrorCode::NotEnoughData: return "NotEnoughData";
        case ErrorCode::InputMismatch: return "InputMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to a diagnostic and exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace chemolab
