#pragma once

#include <stdexcept>
#include <string>

namespace hob {

/// Error categories surfaced by the library. The CLI maps these to exit
/// codes and machine-readable kind strings.
enum class ErrorKind {
    InvalidArgument,
    DimensionMismatch,
    IndexOutOfRange,
    DuplicateIndex,
    NonFiniteValue,
    ParseError,
    IoError,
    NonPositiveDiagonal,
    NegativeRadicand,
    SingularMatrix,
    PositivityLost,
    MaxItersExceeded,
    StructureViolation,
    NegativeRhs,
    PoliciesExhausted,
    SolveFailure,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::InvalidArgument:     return "invalid_argument";
    case ErrorKind::DimensionMismatch:   return "dimension_mismatch";
    case ErrorKind::IndexOutOfRange:     return "index_out_of_range";
    case ErrorKind::DuplicateIndex:      return "duplicate_index";
    case ErrorKind::NonFiniteValue:      return "non_finite_value";
    case ErrorKind::ParseError:          return "parse_error";
    case ErrorKind::IoError:             return "io_error";
    case ErrorKind::NonPositiveDiagonal: return "non_positive_diagonal";
    case ErrorKind::NegativeRadicand:    return "negative_radicand";
    case ErrorKind::SingularMatrix:      return "singular_matrix";
    case ErrorKind::PositivityLost:      return "positivity_lost";
    case ErrorKind::MaxItersExceeded:    return "max_iters_exceeded";
    case ErrorKind::StructureViolation:  return "structure_violation";
    case ErrorKind::NegativeRhs:         return "negative_rhs";
    case ErrorKind::PoliciesExhausted:   return "policies_exhausted";
    case ErrorKind::SolveFailure:        return "solve_failure";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    const char* kind_name() const noexcept { return error_kind_name(kind_); }

private:
    ErrorKind kind_;
};

} // namespace hob
