#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace csmspec {

enum class ErrorCode {
  ShapeError,
  GridTooLarge,
  OutOfDomain,
  SeparationInfeasible,
  NumericalBlowUp,
  DomainEscape,
  NoSpectralConvergence,
  IllConditionedSpectrum,
  NoSignificantSpectrum,
  EmptyRank,
  SubsampleTooSmall,
  LearningRateTooHigh,
  InvalidArgument,
  ParseError,
  IoError,
};

/// Canonical message text for each error code ("shape error", "grid too large", ...).
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail = {});

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& detail = {}) {
  if (!condition) throw Error(code, detail);
}

}  // namespace csmspec
