#pragma once

#include <stdexcept>
#include <string>

namespace fluctsel {

enum class Errc {
  NotPositiveDefinite,
  NotPositiveSemidefinite,
  Unstable,
  DimensionMismatch,
  InvalidArgument,
  NonFiniteValue,
  InnerDivergence,
  MaxIterations,
  LineSearchFailure,
  SingularInformation,
  OutOfSupport,
  InitializationFailure,
  TooFewDraws,
  NameMismatch,
  DimensionTooLarge,
  NoSuccessfulFits,
  ParseError,
  ConfigError,
  IoError,
};

const char* to_string(Errc code) noexcept;

/// Exception carrying a machine-readable error code. All library failures
/// surface as this type so callers can branch on `code()`.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace fluctsel
