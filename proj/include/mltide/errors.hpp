#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mltide {

/// Operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization met a zero, missing or nonpositive pivot.
class PivotError : public std::runtime_error {
 public:
  PivotError(const std::string& what, std::size_t index)
      : std::runtime_error(what + " (pivot index " + std::to_string(index) + ")"), message_(what), index_(index) {}

  /// Row/column of the offending pivot in the caller's (unpermuted) numbering.
  std::size_t index() const { return index_; }
  /// The description without the pivot index.
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::size_t index_;
};

/// An iterative eigenvalue or linear solve hit its iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mltide
