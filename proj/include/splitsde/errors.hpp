#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace splitsde {

enum class ErrorCode {
    InvalidArgument,
    NonZeroMean,
    PeriodMismatch,
    NotPSD,
    NonFinite,
    KappaVanished,
    PotentialInvalid,
    UnknownPreset,
    GridTooCoarse,
    NotConverged,
    SolverSingular,
    MissingFrequency,
    EmptySample,
    DegenerateFit,
    Config,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` identifies the failure.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& what);
    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) {
        throw Error(ErrorCode::InvalidArgument, what);
    }
}

} // namespace splitsde
