#pragma once

#include <stdexcept>
#include <string>

namespace lonrec {

/// Base type for every error thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDimensionError : Error { using Error::Error; };
struct NotUnitaryError : Error { using Error::Error; };
struct SingularMatrixError : Error { using Error::Error; };
struct DegeneratePolarError : Error { using Error::Error; };
struct UndefinedVisibilityError : Error { using Error::Error; };
struct InsufficientModesError : Error { using Error::Error; };
struct DegenerateColumnError : Error { using Error::Error; };
struct UnphysicalGainError : Error { using Error::Error; };
struct UnderdeterminedError : Error { using Error::Error; };
struct DataBudgetError : Error { using Error::Error; };
struct FitError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

/// A gauge reference entry (first row or column) is too small to define a phase.
struct GaugeDegenerateError : Error {
    GaugeDegenerateError(const std::string& msg, int row_in, int col_in)
        : Error(msg), row(row_in), col(col_in) {}
    int row;
    int col;
};

} // namespace lonrec
