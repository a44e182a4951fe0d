#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cofd {

enum class Errc {
  InvalidArgument,
  DimensionMismatch,
  RankDeficient,
  SingularInertia,
  IndexOutOfRange,
  InsufficientRedundancy,
  ReducedRankDeficient,
  MissingCoefficients,
  RankConditionFailed,
  NotHurwitz,
  EmptyBank,
  WarmupIncomplete,
  UnknownHypothesis,
  PreconditionFailed,
  NonFinite,
  SchemaMismatch,
  ConfigError,
};

std::string_view to_string(Errc code);

// Every library failure is reported through this type; the code identifies
// the failing contract so callers (and the CLI exit-code mapping) can react.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  // The message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace cofd
