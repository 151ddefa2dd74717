#pragma once

#include <stdexcept>
#include <string>

namespace imcabs {

/// Malformed or out-of-contract argument (degenerate boxes, zero resolution, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Expression text that does not match the grammar.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : std::runtime_error(what + " at line " + std::to_string(line) + ", column " +
                           std::to_string(column)),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// Declared noise structure contradicted by the expression text.
class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Division by zero, sqrt of a negative, or an interval divisor containing zero.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gridding a noise component with unbounded support, and similar.
class UnsupportedConfiguration : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or inconsistent user input (posterior tables, labels, files).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// IMC row that is not a feasible set of distributions.
class InvalidModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reach-avoid specification that is ill-formed (overlapping goal/avoid labels).
class SpecificationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken during abstraction; indicates a bug, never user error.
class SoundnessError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace imcabs
