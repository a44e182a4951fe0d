#include "cofd/errors.hpp"

namespace cofd {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::SingularInertia: return "SingularInertia";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::InsufficientRedundancy: return "InsufficientRedundancy";
    case Errc::ReducedRankDeficient: return "ReducedRankDeficient";
    case Errc::MissingCoefficients: return "MissingCoefficients";
    case Errc::RankConditionFailed: return "RankConditionFailed";
    case Errc::NotHurwitz: return "NotHurwitz";
    case Errc::EmptyBank: return "EmptyBank";
    case Errc::WarmupIncomplete: return "WarmupIncomplete";
    case Errc::UnknownHypothesis: return "UnknownHypothesis";
    case Errc::PreconditionFailed: return "PreconditionFailed";
    case Errc::NonFinite: return "NonFinite";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), detail_(message) {}

}  // namespace cofd
