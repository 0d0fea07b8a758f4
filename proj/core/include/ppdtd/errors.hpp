#pragma once

#include <stdexcept>
#include <string>

namespace ppdtd {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define PPDTD_DECLARE_ERROR(Name)          \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  }

PPDTD_DECLARE_ERROR(InvalidArgument);
PPDTD_DECLARE_ERROR(ReducibleChain);
PPDTD_DECLARE_ERROR(NoConvergence);
PPDTD_DECLARE_ERROR(StateSpaceTooLarge);
PPDTD_DECLARE_ERROR(RankDeficient);
PPDTD_DECLARE_ERROR(AssumptionViolation);
PPDTD_DECLARE_ERROR(CapExceeded);
PPDTD_DECLARE_ERROR(NonFiniteIterate);
PPDTD_DECLARE_ERROR(WeightUnderflow);
PPDTD_DECLARE_ERROR(SingularSystem);
PPDTD_DECLARE_ERROR(PreconditionViolated);
PPDTD_DECLARE_ERROR(ConfigError);
PPDTD_DECLARE_ERROR(IoFailure);

#undef PPDTD_DECLARE_ERROR

}  // namespace ppdtd
