#pragma once

#include <stdexcept>
#include <string>

namespace rpsf {

// Base of every error thrown by the library. The CLI maps the subclasses
// onto exit codes (see tools/rpsf_cli.cpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or parameters. `path` names the offending field
// (a JSON pointer such as "/mask/epsilon" when loaded from a document).
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string path = {})
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

// A numerical precondition was violated (non-finite result, z = 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Sampling condition for a discretised operator does not hold.
class SamplingError : public Error {
 public:
  using Error::Error;
};

// Input carries no usable signal (all-zero pupil, flat kernel, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

// Inverse filter hits an exact zero with no regularisation.
class SingularError : public Error {
 public:
  using Error::Error;
};

// Missing or unreadable input files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace rpsf
