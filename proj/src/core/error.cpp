#include "fluctsel/core/error.hpp"

namespace fluctsel {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::NotPositiveSemidefinite: return "NotPositiveSemidefinite";
    case Errc::Unstable: return "Unstable";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonFiniteValue: return "NonFiniteValue";
    case Errc::InnerDivergence: return "InnerDivergence";
    case Errc::MaxIterations: return "MaxIterations";
    case Errc::LineSearchFailure: return "LineSearchFailure";
    case Errc::SingularInformation: return "SingularInformation";
    case Errc::OutOfSupport: return "OutOfSupport";
    case Errc::InitializationFailure: return "InitializationFailure";
    case Errc::TooFewDraws: return "TooFewDraws";
    case Errc::NameMismatch: return "NameMismatch";
    case Errc::DimensionTooLarge: return "DimensionTooLarge";
    case Errc::NoSuccessfulFits: return "NoSuccessfulFits";
    case Errc::ParseError: return "ParseError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace fluctsel
