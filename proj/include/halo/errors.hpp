#pragma once

#include <stdexcept>
#include <string>

// Error taxonomy. Exceptions deriving from ConfigError indicate bad user
// input (geometry/config validation); NumericError covers failures of the
// numerical machinery on otherwise valid input.
namespace halo {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// --- geometry / grid validation ---
struct InvalidGeometry : ConfigError {
  using ConfigError::ConfigError;
};
struct NonPositiveSpacing : ConfigError {
  using ConfigError::ConfigError;
};
struct DomainTooSmall : ConfigError {
  using ConfigError::ConfigError;
};
struct GridMismatch : ConfigError {
  using ConfigError::ConfigError;
};
struct OutOfDomain : ConfigError {
  using ConfigError::ConfigError;
};

// --- field solve ---
struct NoConvergence : NumericError {
  long iterations;
  NoConvergence(const std::string& msg, long iters)
      : NumericError(msg), iterations(iters) {}
};

// --- fitting ---
struct NoNodeFound : NumericError {
  using NumericError::NumericError;
};
struct EmptyRegion : ConfigError {
  using ConfigError::ConfigError;
};
struct DegenerateFit : NumericError {
  using NumericError::NumericError;
};

// --- pseudopotential ---
struct SaddleNotFound : NumericError {
  using NumericError::NumericError;
};
struct Unstable : NumericError {
  using NumericError::NumericError;
};

// --- voltage tuning / optimization ---
struct NoSolution : NumericError {
  using NumericError::NumericError;
};
struct InfeasibleStart : NumericError {
  using NumericError::NumericError;
};

// --- crystal ---
struct InvalidTrap : ConfigError {
  using ConfigError::ConfigError;
};
struct CoincidentIons : ConfigError {
  using ConfigError::ConfigError;
};
struct Singularity : NumericError {
  using NumericError::NumericError;
};

}  // namespace halo
