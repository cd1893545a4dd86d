#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace varest {

enum class ErrorCode {
    InvalidArgument,
    InvalidSampleSize,
    NonPositiveBandwidth,
    MissingBeta,
    SmoothnessOutOfRange,
    AlphaOutOfRange,
    SmoothnessRegime,
    NegativeVariance,
    OutOfDomain,
    DimensionMismatch,
    DimensionTooSmall,
    DimensionTooLarge,
    GridNotEven,
    UnknownDesignCDF,
    NegativeWeight,
    EvenOrder,
    NotPositiveDefinite,
    NonPositiveValue,
    Io,
    SchemaMismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidSampleSize: return "InvalidSampleSize";
        case ErrorCode::NonPositiveBandwidth: return "NonPositiveBandwidth";
        case ErrorCode::MissingBeta: return "MissingBeta";
        case ErrorCode::SmoothnessOutOfRange: return "SmoothnessOutOfRange";
        case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
        case ErrorCode::SmoothnessRegime: return "SmoothnessRegime";
        case ErrorCode::NegativeVariance: return "NegativeVariance";
        case ErrorCode::OutOfDomain: return "OutOfDomain";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
        case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
        case ErrorCode::GridNotEven: return "GridNotEven";
        case ErrorCode::UnknownDesignCDF: return "UnknownDesignCDF";
        case ErrorCode::NegativeWeight: return "NegativeWeight";
        case ErrorCode::EvenOrder: return "EvenOrder";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::NonPositiveValue: return "NonPositiveValue";
        case ErrorCode::Io: return "Io";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    }
    return "Unknown";
}

}  // namespace varest
