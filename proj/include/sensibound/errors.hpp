#pragma once

#include <stdexcept>
#include <string>

namespace sensibound {

/// Invalid argument or violated precondition supplied by the caller.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument lies outside the mathematical domain of a map (e.g. outcome inverse).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite intermediate values during estimation or optimization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested point lies outside the range spanned by a frontier curve.
class ExtrapolationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Target bound value cannot be reached at any sensitivity level.
class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File header does not match the expected column layout.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed record in a data file; the message names the offending line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Refusal to clobber an existing output file.
class FileExistsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sensibound
