#pragma once

#include <stdexcept>
#include <string>

namespace graymode {

// Base of everything the library throws on contract violations.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights that do not describe a valid linear operator, or an
// operator that cannot be built from the requested family member.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The requested (K, fixed weight) member has a weight outside (0, 1).
class InfeasibleMemberError : public DomainError {
 public:
  using DomainError::DomainError;
};

// No real member exists: the quadratic for the fixed green weight has a
// negative discriminant at this K.
class FamilyIncompatibleError : public DomainError {
 public:
  using DomainError::DomainError;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// Mode data too degenerate for the shape heuristics.
class UnclassifiableError : public Error {
 public:
  using Error::Error;
};

class ResourceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace graymode
