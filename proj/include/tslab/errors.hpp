#pragma once

#include <stdexcept>
#include <string>

namespace tslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct SingularMatrix : Error { using Error::Error; };
struct InvalidEigenvalue : Error { using Error::Error; };
struct InvalidRotation : Error { using Error::Error; };
struct ActionOutOfSet : Error { using Error::Error; };
struct HypothesisViolated : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct InvalidHorizon : Error { using Error::Error; };
struct InvalidInit : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace tslab
