#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tamed {

/// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a geometric operation (pole, negative length, off-sheet point).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at byte " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Expression evaluation produced a non-finite value; `offset` locates the node in the source.
class EvaluationError : public Error {
 public:
  EvaluationError(const std::string& what, std::size_t offset)
      : Error(what + " (node at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Induced metric lost rank.
class DegeneracyError : public Error {
 public:
  using Error::Error;
};

/// Requested tamedness level c is incompatible with the estimate (c <= a(M) or c >= 1).
class LevelError : public Error {
 public:
  using Error::Error;
};

/// Input was classified as not tamed; downstream certificates refuse it.
class NotTamedError : public Error {
 public:
  using Error::Error;
};

/// Gradient of the extrinsic distance collapsed below the critical-point tolerance.
class CriticalPointError : public Error {
 public:
  using Error::Error;
};

/// Iterative solver failed to bracket, converge or produce a well-behaved sequence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tamed
