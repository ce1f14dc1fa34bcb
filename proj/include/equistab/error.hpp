#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace equistab {

enum class ErrorCode {
    NonFiniteInput,
    DimensionMismatch,
    NotInAlgebra,
    DegenerateBasis,
    ParseError,
    UnknownFunction,
    VariableOutOfRange,
    DomainError,
    InvalidAction,
    IllConditioned,
    NotRelativeEquilibrium,
    SingularOmega,
    NoConsistentSign,
    RankAmbiguous,
    HessianIllDefined,
    NotSymmetric,
    PreconditionFailed,
    NewtonDiverged,
    NotPositiveDefinite,
    NonzeroMoment,
    OutOfChart,
    NonFiniteState,
    InvalidModel,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Raised by the expression parser; position is a 0-based byte offset into the input.
class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string expected, const std::string &text);

    std::size_t position() const noexcept { return position_; }
    const std::string &expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

[[noreturn]] void fail(ErrorCode code, const std::string &what);

} // namespace equistab
