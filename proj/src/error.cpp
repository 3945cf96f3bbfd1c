#include "bbsm/error.hpp"

namespace bbsm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DuplicateYear: return "DuplicateYear";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::CalendarMismatch: return "CalendarMismatch";
    case ErrorCode::AllZeroWeights: return "AllZeroWeights";
    case ErrorCode::DivisionByZero: return "DivisionByZero";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::DegenerateProbability: return "DegenerateProbability";
    case ErrorCode::ProbabilityOutOfRange: return "ProbabilityOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::NegativeVolatility: return "NegativeVolatility";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::NonpositiveA0: return "NonpositiveA0";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::NonpositiveVolatility: return "NonpositiveVolatility";
    case ErrorCode::NonpositiveBandwidth: return "NonpositiveBandwidth";
    case ErrorCode::NegativeConditionalVolatility: return "NegativeConditionalVolatility";
    case ErrorCode::QOutOfRange: return "QOutOfRange";
    case ErrorCode::MaturityTooLargeForEnumeration: return "MaturityTooLargeForEnumeration";
    case ErrorCode::MaturityBudgetExceeded: return "MaturityBudgetExceeded";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ConfigError: return "ConfigError";
    }
    return "UnknownError";
}

ErrorCategory category_of(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::EmptyInput:
    case ErrorCode::DuplicateYear:
    case ErrorCode::EmptyIntersection:
    case ErrorCode::EmptyTable:
    case ErrorCode::CalendarMismatch:
    case ErrorCode::AllZeroWeights:
    case ErrorCode::DivisionByZero:
    case ErrorCode::TooShort:
    case ErrorCode::ZeroVariance:
    case ErrorCode::DegenerateProbability:
    case ErrorCode::LengthMismatch:
    case ErrorCode::RankDeficient:
    case ErrorCode::Infeasible:
    case ErrorCode::TooFewObservations:
        return ErrorCategory::Data;
    case ErrorCode::ProbabilityOutOfRange:
    case ErrorCode::NegativeVolatility:
    case ErrorCode::NegativeConditionalVolatility:
    case ErrorCode::QOutOfRange:
        return ErrorCategory::Model;
    case ErrorCode::NonpositiveA0:
    case ErrorCode::DegenerateDenominator:
    case ErrorCode::NonpositiveVolatility:
    case ErrorCode::NonpositiveBandwidth:
    case ErrorCode::MaturityTooLargeForEnumeration:
    case ErrorCode::MaturityBudgetExceeded:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
        return ErrorCategory::Config;
    }
    return ErrorCategory::Config;
}

}  // namespace bbsm
