#pragma once

#include <stdexcept>
#include <string>

namespace regulab {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A set that was required to be nonempty turned out empty.
class EmptySetError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NotInvertibleError : public Error {
 public:
  using Error::Error;
};

/// An enumeration-based routine was asked to handle more than its size cap.
class SizeError : public Error {
 public:
  using Error::Error;
};

class ContractionViolated : public Error {
 public:
  using Error::Error;
};

class SubproblemUnsolvable : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace regulab
