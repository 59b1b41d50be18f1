#pragma once

#include <stdexcept>
#include <string>

namespace brw {

// Every failure raised by the library derives from Error, so callers that do
// not care about the kind can catch a single type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define BRW_DEFINE_ERROR(Name)          \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  }

BRW_DEFINE_ERROR(InvalidSpec);
BRW_DEFINE_ERROR(OutOfDomain);
BRW_DEFINE_ERROR(TruncationBudgetExceeded);
BRW_DEFINE_ERROR(NotHeavyTail);
BRW_DEFINE_ERROR(UnsupportedFamily);
BRW_DEFINE_ERROR(NonContracting);
BRW_DEFINE_ERROR(BetaOutOfRange);
BRW_DEFINE_ERROR(EmptySample);
BRW_DEFINE_ERROR(InsufficientSample);
BRW_DEFINE_ERROR(NonPositiveSample);
BRW_DEFINE_ERROR(LevelTooDeep);
BRW_DEFINE_ERROR(FailedTrajectory);
BRW_DEFINE_ERROR(ConfigInvalid);
BRW_DEFINE_ERROR(OutputUnwritable);

#undef BRW_DEFINE_ERROR

// k_beta >= 1 (or k_{beta+eps} infinite); carries the offending value.
class MomentConditionViolated : public Error {
 public:
  MomentConditionViolated(const std::string& what, double k_beta)
      : Error(what), k_beta_(k_beta) {}
  double k_beta() const noexcept { return k_beta_; }

 private:
  double k_beta_;
};

}  // namespace brw
