#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hamroc {

/// Failure categories raised by the library. The CLI maps each one to a
/// distinct process exit code (see `exit_code`).
enum class ErrorCode {
    DimensionMismatch,
    NotSPD,
    RankDeficient,
    RankDeficientJacobian,
    InvalidConfig,
    DegenerateSpring,
    IndexOutOfRange,
    PinnedNode,
    NumericalBlowup,
    RejectionExhausted,
    NonFiniteLoss,
    NonFiniteValue,
    SchemaViolation,
    MissingFile,
    IoFailure,
};

std::string_view to_string(ErrorCode code);

/// Process exit code used by the command-line tool for `code`.
int exit_code(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
    if (!cond) {
        throw Error(code, what);
    }
}

}  // namespace hamroc
