#pragma once

#include <stdexcept>
#include <string>

namespace calderon {

// Base class of every error raised by the library. Numeric conditions that
// are *checked* (class membership, sign conditions) are reported through
// result structs instead of exceptions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An argument lies outside its admissible interval (t outside [1/lambda, lambda], tau <= 0, ...).
class RangeError : public Error {
 public:
  using Error::Error;
};

// A callable or input violated a structural invariant (non-symmetric matrix, mesh mismatch).
class InvariantError : public Error {
 public:
  using Error::Error;
};

// Evaluation at a singular point or inversion of a singular matrix.
class SingularityError : public Error {
 public:
  using Error::Error;
};

// Geometric construction impossible (empty patch, probe inside the domain, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration (mesh size not dividing the box, bad template name, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Linear solver breakdown; the message carries iteration diagnostics.
class SolverError : public Error {
 public:
  using Error::Error;
};

// Generic numerical failure (non SPD Gram matrix, finite-difference step too large, ...).
class NumericError : public Error {
 public:
  using Error::Error;
};

// Caller misuse of the API (fields on different meshes, refused estimator runs, ...).
class UsageError : public Error {
 public:
  using Error::Error;
};

// The estimator refuses to run because the sign condition on F failed.
class SignConditionError : public UsageError {
 public:
  using UsageError::UsageError;
};

// File could not be read or written; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace calderon
