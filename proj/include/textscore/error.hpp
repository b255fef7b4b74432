#pragma once

#include <stdexcept>
#include <string>

namespace textscore {

// A file whose contents do not match its expected format.
struct ParseError : std::runtime_error {
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A configuration that cannot be acted on (missing dictionary, bad K, ...).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Data that violates an operation's preconditions (unscored document,
// empty vocabulary, zero-variance vector, ...).
struct DataError : std::runtime_error {
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace textscore
