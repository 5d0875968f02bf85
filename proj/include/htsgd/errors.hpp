#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace htsgd {

/// A parameter outside its mathematical domain (alpha not in (0, 2], dt <= 0, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input carries no usable information (all zeros, non-finite values, ...).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Too few samples for the requested computation.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Vectors of incompatible dimension.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operation needs basin geometry the objective does not declare.
class UnsupportedObjectiveError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of the call does not hold.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Generator matrix whose null space is not one-dimensional.
class DegenerateChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed binary input; carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

  [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace htsgd
