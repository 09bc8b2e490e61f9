#pragma once

#include <stdexcept>
#include <string>

namespace ocular {

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that cannot be parsed or violates a file schema.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace ocular
