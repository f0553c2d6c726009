#pragma once

#include <stdexcept>
#include <string>

namespace cimpf {

enum class ErrorCode {
    DuplicateId,
    DanglingTerminalRef,
    NoReferenceBus,
    DisconnectedTerminal,
    InvalidModel,
    IndexOutOfBounds,
    DimensionMismatch,
    SingularMatrix,
    ZeroReferenceVoltage,
    VoltageCollapse,
    NonFinite,
    UnsupportedConfiguration,
    ParseError,
    TerminalSetMismatch,
    InvalidArgument,
    IoError,
};

[[nodiscard]] constexpr const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::DanglingTerminalRef: return "DanglingTerminalRef";
        case ErrorCode::NoReferenceBus: return "NoReferenceBus";
        case ErrorCode::DisconnectedTerminal: return "DisconnectedTerminal";
        case ErrorCode::InvalidModel: return "InvalidModel";
        case ErrorCode::IndexOutOfBounds: return "IndexOutOfBounds";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::SingularMatrix: return "SingularMatrix";
        case ErrorCode::ZeroReferenceVoltage: return "ZeroReferenceVoltage";
        case ErrorCode::VoltageCollapse: return "VoltageCollapse";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::UnsupportedConfiguration: return "UnsupportedConfiguration";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::TerminalSetMismatch: return "TerminalSetMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Network validation failures (everything `build_network` can raise).
[[nodiscard]] constexpr bool is_validation_error(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DuplicateId:
        case ErrorCode::DanglingTerminalRef:
        case ErrorCode::NoReferenceBus:
        case ErrorCode::DisconnectedTerminal:
        case ErrorCode::InvalidModel:
        case ErrorCode::UnsupportedConfiguration:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace cimpf
