#pragma once

#include <stdexcept>
#include <string>

namespace vlpr {

enum class ErrorCode {
    InvalidArgument = 1,
    Io,
    Format,
    Degenerate,
    NoPlate,
    Unreadable,
    AlignmentNotFound,
    Internal,
};

/// Exception carried by every failing operation in the core library.
/// The C API maps `code()` onto its status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorCode::InvalidArgument, message);
    }
}

}  // namespace vlpr
