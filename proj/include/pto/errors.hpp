#pragma once

#include <stdexcept>
#include <string>

namespace pto {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A problem definition or configuration is inconsistent.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// The reduced stiffness system could not be factorized or solved to tolerance.
class SingularSystem : public Error {
 public:
  using Error::Error;
};

/// The requested material amount lies outside what the bounds allow.
class UnreachableTarget : public Error {
 public:
  using Error::Error;
};

/// The proportional distribution loop hit its pass cap.
class StagnantInnerLoop : public Error {
 public:
  using Error::Error;
};

/// The OC bisection could not bracket the Lagrange multiplier.
class BisectionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace pto
