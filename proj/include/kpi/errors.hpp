#pragma once

#include <stdexcept>
#include <string>

namespace kpi {

/// Root of every error thrown by the library. The CLI maps subclasses to
/// exit codes: validation-type errors exit 2, numerical errors exit 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Validation-type errors.
class DomainError : public Error { using Error::Error; };
class SizeError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class IngestionError : public Error { using Error::Error; };
class GeometryError : public Error { using Error::Error; };

// Numerical / feasibility errors.
class RefinementError : public Error { using Error::Error; };
class TopologyError : public Error { using Error::Error; };
class NumericalError : public Error { using Error::Error; };
class FeasibilityError : public Error { using Error::Error; };
class ParametrizationError : public Error { using Error::Error; };

}  // namespace kpi
