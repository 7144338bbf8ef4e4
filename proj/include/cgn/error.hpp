#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cgn {

// Bad input: malformed files, out-of-range parameters, violated preconditions.
// The CLI maps these to exit code 1; everything else is a runtime failure.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace cgn
