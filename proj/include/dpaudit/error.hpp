#pragma once

#include <stdexcept>
#include <string>

namespace dpaudit {

// Base for every error raised by the library. Validation results that are
// "data" (ValidationReport) are never thrown.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition of an operation does not hold (bad argument, empty input).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnknownEntity : public Error {
 public:
  explicit UnknownEntity(const std::string& id) : Error("unknown entity '" + id + "'"), id_(id) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

// Evidence quote is not a verbatim substring of the referenced entity.
class FabricatedEvidence : public Error {
 public:
  using Error::Error;
};

class UnreachableTarget : public Error {
 public:
  using Error::Error;
};

// A document does not match its interchange schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// The requested plants cannot be realised within the requested shape.
class UnsatisfiablePlant : public Error {
 public:
  using Error::Error;
};

}  // namespace dpaudit
