#pragma once

#include <stdexcept>
#include <string>

namespace qtp {

/// Base class for numerical failures raised by the library.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define QTP_DEFINE_ERROR(Name)                                         \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(#Name, what) {}     \
  };

QTP_DEFINE_ERROR(NullSeparationSingularity)
QTP_DEFINE_ERROR(UnsupportedState)
QTP_DEFINE_ERROR(UnsupportedOrder)
QTP_DEFINE_ERROR(NonGaussianState)
QTP_DEFINE_ERROR(DimensionOverflow)
QTP_DEFINE_ERROR(ZeroDenominator)
QTP_DEFINE_ERROR(NegativeDensity)
QTP_DEFINE_ERROR(GridTooCoarse)
QTP_DEFINE_ERROR(ZeroDetection)
QTP_DEFINE_ERROR(NonStationaryConfiguration)
QTP_DEFINE_ERROR(QuadratureDivergence)
QTP_DEFINE_ERROR(SupportMismatch)
QTP_DEFINE_ERROR(CommutatorViolation)
QTP_DEFINE_ERROR(NegativeEigenvalue)
QTP_DEFINE_ERROR(CompletenessViolation)
QTP_DEFINE_ERROR(PerturbativityWarning)

#undef QTP_DEFINE_ERROR

}  // namespace qtp
