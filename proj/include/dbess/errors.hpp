#pragma once

#include <stdexcept>
#include <string>

namespace dbess {

/// Base class of every error thrown by this library. `name()` yields the
/// stable, machine-readable error identifier used by the CLI.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* name() const noexcept { return "Error"; }
};

#define DBESS_DEFINE_ERROR(NAME)                                   \
  class NAME : public Error {                                      \
   public:                                                         \
    using Error::Error;                                            \
    const char* name() const noexcept override { return #NAME; }   \
  }

DBESS_DEFINE_ERROR(DimensionMismatch);
DBESS_DEFINE_ERROR(IndexOutOfRange);
DBESS_DEFINE_ERROR(SingularSubproblem);
DBESS_DEFINE_ERROR(NonPositiveDiagonal);
DBESS_DEFINE_ERROR(ExchangeTooLarge);
DBESS_DEFINE_ERROR(TooManySubsets);
DBESS_DEFINE_ERROR(IndivisibleN);
DBESS_DEFINE_ERROR(RankDeficient);
DBESS_DEFINE_ERROR(EmptyInput);
DBESS_DEFINE_ERROR(DegenerateResidual);
DBESS_DEFINE_ERROR(ZeroSignal);
DBESS_DEFINE_ERROR(ZeroTruth);
DBESS_DEFINE_ERROR(FactorizationFailure);
DBESS_DEFINE_ERROR(InvalidConfig);
DBESS_DEFINE_ERROR(IoError);

#undef DBESS_DEFINE_ERROR

}  // namespace dbess
