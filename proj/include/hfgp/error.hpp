#pragma once

#include <stdexcept>
#include <string>

namespace hfgp {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed configuration, unknown keys, unreadable input files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Parameters outside the family's admissible domain.
class ParameterDomainError : public Error {
 public:
  using Error::Error;
};

// Requested capability is not available for the kernel family
// (e.g. a fourth derivative of a kernel that is not C^4 at the origin).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class NotDifferentiableError : public CapabilityError {
 public:
  using CapabilityError::CapabilityError;
};

// Everything that fails for numerical rather than structural reasons.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class DegenerateVarianceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IdentifiabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class RootNotFoundError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SimulationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hfgp
