#pragma once

#include <stdexcept>
#include <string>

namespace motlp {

enum class ErrorCode {
    EmptyMeasure,
    InvalidMeasure,
    DimensionMismatch,
    ZeroMass,
    NegativeResidual,
    MissingOracle,
    SamplerFailure,
    InvalidCase,
    SizeCap,
    IterationLimit,
    NotOptimal,
    NumericalFailure,
    IOFailure,
    InvalidArgument,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
    case ErrorCode::EmptyMeasure: return "EmptyMeasure";
    case ErrorCode::InvalidMeasure: return "InvalidMeasure";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::NegativeResidual: return "NegativeResidual";
    case ErrorCode::MissingOracle: return "MissingOracle";
    case ErrorCode::SamplerFailure: return "SamplerFailure";
    case ErrorCode::InvalidCase: return "InvalidCase";
    case ErrorCode::SizeCap: return "SizeCap";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::NotOptimal: return "NotOptimal";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::IOFailure: return "IOFailure";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

} // namespace motlp
