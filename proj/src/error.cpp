#include "equistab/error.hpp"

namespace equistab {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotInAlgebra: return "NotInAlgebra";
    case ErrorCode::DegenerateBasis: return "DegenerateBasis";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnknownFunction: return "UnknownFunction";
    case ErrorCode::VariableOutOfRange: return "VariableOutOfRange";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NotRelativeEquilibrium: return "NotRelativeEquilibrium";
    case ErrorCode::SingularOmega: return "SingularOmega";
    case ErrorCode::NoConsistentSign: return "NoConsistentSign";
    case ErrorCode::RankAmbiguous: return "RankAmbiguous";
    case ErrorCode::HessianIllDefined: return "HessianIllDefined";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NonzeroMoment: return "NonzeroMoment";
    case ErrorCode::OutOfChart: return "OutOfChart";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::InvalidModel: return "InvalidModel";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string &what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

ParseError::ParseError(std::size_t position, std::string expected, const std::string &text)
    : Error(ErrorCode::ParseError,
            "expected " + expected + " at position " + std::to_string(position) + " in \"" + text + "\""),
      position_(position), expected_(std::move(expected))
{
}

void fail(ErrorCode code, const std::string &what)
{
    throw Error(code, what);
}

} // namespace equistab
