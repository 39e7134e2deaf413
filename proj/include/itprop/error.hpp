#pragma once

#include <stdexcept>
#include <string>

namespace itprop {

enum class ErrorCode {
    InvalidArgument,
    DomainTooSmall,
    IncompatibleFields,
    ZeroNorm,
    NumericalBlowup,
    EmptyOverlap,
    InvalidTrace,
    DegenerateStart,
    UnsupportedMode,
    ParseError,
    IoError,
};

inline char const* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::DomainTooSmall: return "domain-too-small";
        case ErrorCode::IncompatibleFields: return "incompatible-fields";
        case ErrorCode::ZeroNorm: return "zero-norm";
        case ErrorCode::NumericalBlowup: return "numerical-blowup";
        case ErrorCode::EmptyOverlap: return "empty-overlap";
        case ErrorCode::InvalidTrace: return "invalid-trace";
        case ErrorCode::DegenerateStart: return "degenerate-start";
        case ErrorCode::UnsupportedMode: return "unsupported-mode";
        case ErrorCode::ParseError: return "parse-error";
        case ErrorCode::IoError: return "io-error";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, std::string const& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

} // namespace itprop
