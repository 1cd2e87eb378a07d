#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smdpsynth {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SyntaxError : public Error {
 public:
  SyntaxError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownToken : public SyntaxError {
 public:
  using SyntaxError::SyntaxError;
};

#define SMDPSYNTH_DEFINE_ERROR(Name) \
  class Name : public Error {        \
   public:                           \
    using Error::Error;              \
  }

SMDPSYNTH_DEFINE_ERROR(CapacityExceeded);
SMDPSYNTH_DEFINE_ERROR(EmptyCycle);
SMDPSYNTH_DEFINE_ERROR(UnknownState);
SMDPSYNTH_DEFINE_ERROR(ActionNotEnabled);
SMDPSYNTH_DEFINE_ERROR(ConfigError);
SMDPSYNTH_DEFINE_ERROR(AlphabetMismatch);
SMDPSYNTH_DEFINE_ERROR(UntrackedPair);
SMDPSYNTH_DEFINE_ERROR(UntrackedTriple);
SMDPSYNTH_DEFINE_ERROR(MomentUndefined);
SMDPSYNTH_DEFINE_ERROR(EmptyWinningCandidate);
SMDPSYNTH_DEFINE_ERROR(NoAllowedAction);
SMDPSYNTH_DEFINE_ERROR(BudgetExhausted);
SMDPSYNTH_DEFINE_ERROR(NonfiniteRisk);
SMDPSYNTH_DEFINE_ERROR(DomainGap);
SMDPSYNTH_DEFINE_ERROR(PolicyLeavesW);
SMDPSYNTH_DEFINE_ERROR(DivisionByZero);

#undef SMDPSYNTH_DEFINE_ERROR

}  // namespace smdpsynth
