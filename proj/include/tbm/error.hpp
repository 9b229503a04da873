#pragma once

#include <stdexcept>
#include <string>

namespace tbm {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A domain (or a frame built from it) exceeds the configured product-size bound.
class DomainSizeError : public Error {
 public:
  using Error::Error;
};

// Operands live on incompatible domains, or a variable/label is unknown.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Masses that violate the mass-function invariants.
class MassError : public Error {
 public:
  using Error::Error;
};

// Total conflict (m(empty) = 1) where a probability is required.
class ContradictoryEvidence : public Error {
 public:
  using Error::Error;
};

// Planning preconditions (non-binary tests, unknown tests, bad depth).
class PlanError : public Error {
 public:
  using Error::Error;
};

// Model documents: parse and schema violations. `where` is a JSON pointer
// or a "line L, column C" location.
class ModelError : public Error {
 public:
  ModelError(std::string where, const std::string& what)
      : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}

  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

// Session service failures; `code` is the stable machine-readable tag.
class SessionError : public Error {
 public:
  SessionError(std::string code, const std::string& what)
      : Error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace tbm
