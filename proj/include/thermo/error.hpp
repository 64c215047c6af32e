#pragma once

#include <stdexcept>
#include <string>

namespace thermo {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two operands live in different lattices (Z vs Z^2).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument violates an operation's precondition.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed the configured scale cap.
class ScaleCapError : public Error {
 public:
  ScaleCapError(const std::string& what, double requested, double cap)
      : Error(what), requested_(requested), cap_(cap) {}
  double requested() const { return requested_; }
  double cap() const { return cap_; }

 private:
  double requested_;
  double cap_;
};

/// An audit case whose hypotheses are not met. Not a failed check.
class CaseRejected : public Error {
 public:
  using Error::Error;
};

}  // namespace thermo
