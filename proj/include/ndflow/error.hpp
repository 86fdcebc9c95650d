#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ndflow {

enum class ErrorKind {
  InvalidInput,       // malformed or out-of-contract input
  DegenerateMoments,  // zero or negative variance where a scale is needed
  FitFailure,         // no mixture component survived
  Numerical,          // non-finite values or integration failure
  Io,                 // file could not be read or written
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base exception for every failure raised by the library. The kind maps
/// directly onto the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error invalid_input(const std::string& what) {
  return Error(ErrorKind::InvalidInput, what);
}

}  // namespace ndflow
