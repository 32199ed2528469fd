#include "csmspec/error.hpp"

namespace csmspec {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ShapeError: return "shape error";
    case ErrorCode::GridTooLarge: return "grid too large";
    case ErrorCode::OutOfDomain: return "out of domain";
    case ErrorCode::SeparationInfeasible: return "separation infeasible";
    case ErrorCode::NumericalBlowUp: return "numerical blow-up";
    case ErrorCode::DomainEscape: return "domain escape";
    case ErrorCode::NoSpectralConvergence: return "no spectral convergence";
    case ErrorCode::IllConditionedSpectrum: return "ill-conditioned spectrum";
    case ErrorCode::NoSignificantSpectrum: return "no significant spectrum";
    case ErrorCode::EmptyRank: return "empty rank";
    case ErrorCode::SubsampleTooSmall: return "subsample too small";
    case ErrorCode::LearningRateTooHigh: return "learning rate too high";
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::ParseError: return "parse error";
    case ErrorCode::IoError: return "i/o error";
  }
  return "unknown error";
}

namespace {
std::string compose(ErrorCode code, const std::string& detail) {
  std::string msg(to_string(code));
  if (!detail.empty()) {
    msg += ": ";
    msg += detail;
  }
  return msg;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code) {}

}  // namespace csmspec
