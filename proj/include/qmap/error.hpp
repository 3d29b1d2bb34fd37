#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qmap {

// Base of every exception thrown by the library. The CLI maps the concrete
// subclass onto its exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: unknown or duplicated labels, dimension mismatch, invalid
// state, out-of-range parameters.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, std::string path = {})
      : Error(what), path_(std::move(path)) {}
  // JSON path of the offending field when the error came from a spec file.
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A numerically checked identity or invariant failed.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

// Requested Hilbert space exceeds the configured budget.
class BudgetExceeded : public Error {
 public:
  using Error::Error;
};

// A rate/set-function precondition failed; carries the witnessing subset
// as a bitmask over senders (bit z-1 set for sender z).
class SubsetError : public Error {
 public:
  SubsetError(const std::string& what, std::uint32_t subset)
      : Error(what), subset_(subset) {}
  std::uint32_t subset() const noexcept { return subset_; }

 private:
  std::uint32_t subset_;
};

}  // namespace qmap
