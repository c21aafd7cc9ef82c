#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qptrace {

enum class ErrorCode {
    DuplicatePosition,
    PositionOutOfRange,
    FullTraceNotASpec,
    InvalidLayout,
    IndexOutOfRange,
    DimensionMismatch,
    LayoutMismatch,
    CostGuardExceeded,
    NotHermitian,
    NegativeEigenvalue,
    FormatError,
    TruncatedFile,
    InvalidValue,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DuplicatePosition: return "DuplicatePosition";
        case ErrorCode::PositionOutOfRange: return "PositionOutOfRange";
        case ErrorCode::FullTraceNotASpec: return "FullTraceNotASpec";
        case ErrorCode::InvalidLayout: return "InvalidLayout";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LayoutMismatch: return "LayoutMismatch";
        case ErrorCode::CostGuardExceeded: return "CostGuardExceeded";
        case ErrorCode::NotHermitian: return "NotHermitian";
        case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::TruncatedFile: return "TruncatedFile";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

// All library failures are reported through this one exception type; callers
// that need to branch on the failure kind inspect code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qptrace
