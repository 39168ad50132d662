#ifndef LOOPLESS_ERRORS_HPP
#define LOOPLESS_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace loopless {

/// Malformed LIBSVM input. `line()` is 1-based; 0 means "whole stream".
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Dataset invariant violated, or a data file could not be read.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid algorithm parameters or run configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mismatched vector dimensions between a state, an oracle and a reference.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace loopless

#endif
