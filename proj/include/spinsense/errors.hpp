#pragma once

#include <stdexcept>
#include <string>

namespace spinsense {

/// Base class for every error raised by the toolkit. `kind()` is the stable
/// machine-readable name emitted by the CLI in its error payloads.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define SPINSENSE_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

SPINSENSE_DEFINE_ERROR(InvalidSpecies)
SPINSENSE_DEFINE_ERROR(NonHermitianInput)
SPINSENSE_DEFINE_ERROR(IndexOutOfRange)
SPINSENSE_DEFINE_ERROR(DegenerateGeometry)
SPINSENSE_DEFINE_ERROR(InvalidInput)
SPINSENSE_DEFINE_ERROR(EmptyInput)
SPINSENSE_DEFINE_ERROR(FitDiverged)
SPINSENSE_DEFINE_ERROR(NonUniformGrid)
SPINSENSE_DEFINE_ERROR(InvalidParams)
SPINSENSE_DEFINE_ERROR(InsufficientData)
SPINSENSE_DEFINE_ERROR(NoConvergence)

#undef SPINSENSE_DEFINE_ERROR

/// Raised by configuration parsing; the CLI maps it to exit code 2.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("ConfigError", what) {}
};

}  // namespace spinsense
