#pragma once

#include <stdexcept>
#include <string>

namespace gtrack {

inline constexpr const char* kVersion = "0.1.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand dimensions do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A configuration value violates its documented range or structure.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A call-site precondition was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file or text.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace gtrack
