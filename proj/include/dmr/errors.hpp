#pragma once

#include <stdexcept>
#include <string>

namespace dmr {

// Base of every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateInput : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct EmptyMesh : Error {
  using Error::Error;
};
struct EmptySubmesh : Error {
  using Error::Error;
};
struct EmptyEndEffectorSet : Error {
  using Error::Error;
};
struct SkeletonMismatch : Error {
  using Error::Error;
};
struct InvalidSpec : Error {
  using Error::Error;
};
struct NoForearmSensors : Error {
  using Error::Error;
};
struct EmptyArmSet : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

// Raised when loaded or constructed data breaks a documented invariant.
// The message always names the invariant that failed.
struct InvariantViolation : Error {
  using Error::Error;
};

}  // namespace dmr
