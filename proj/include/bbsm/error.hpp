#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bbsm {

/// Coarse failure class. Maps onto CLI exit codes 1/2/3.
enum class ErrorCategory { Config = 1, Data = 2, Model = 3 };

enum class ErrorCode {
    // ingest
    ParseError,
    EmptyInput,
    DuplicateYear,
    EmptyIntersection,
    // esg
    EmptyTable,
    CalendarMismatch,
    AllZeroWeights,
    DivisionByZero,
    // csyip
    TooShort,
    ZeroVariance,
    DegenerateProbability,
    ProbabilityOutOfRange,
    LengthMismatch,
    NegativeVolatility,
    // calibrate
    RankDeficient,
    Infeasible,
    TooFewObservations,
    NonpositiveA0,
    DegenerateDenominator,
    NonpositiveVolatility,
    NonpositiveBandwidth,
    // pricer
    NegativeConditionalVolatility,
    QOutOfRange,
    MaturityTooLargeForEnumeration,
    MaturityBudgetExceeded,
    InvalidArgument,
    // cli
    ConfigError,
};

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorCategory category() const noexcept { return category_of(code_); }

private:
    ErrorCode code_;
};

}  // namespace bbsm
