#pragma once

#include <stdexcept>
#include <string>

namespace bprp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

// Fewer observations than an estimator needs (e.g. a PRP estimate from < 2 packets).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// The upper tail 1 - Phi(z) underflowed: essentially every packet is below threshold.
class Saturation : public Error {
 public:
  using Error::Error;
};

class InitializationError : public Error {
 public:
  using Error::Error;
};

class InsufficientGeometry : public Error {
 public:
  using Error::Error;
};

class SingularDistance : public Error {
 public:
  using Error::Error;
};

// Inputs are individually valid but disagree with each other (ids, windows).
class DataConsistency : public Error {
 public:
  using Error::Error;
};

}  // namespace bprp
