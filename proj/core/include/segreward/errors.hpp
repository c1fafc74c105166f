#pragma once

#include <stdexcept>
#include <string>

namespace segreward {

/// Base class for all typed engine errors.
class EngineError : public std::runtime_error {
 public:
  explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionMismatchError : public EngineError {
 public:
  explicit DimensionMismatchError(const std::string& what) : EngineError(what) {}
};

class LengthMismatchError : public EngineError {
 public:
  explicit LengthMismatchError(const std::string& what) : EngineError(what) {}
};

class OutOfBoundsError : public EngineError {
 public:
  explicit OutOfBoundsError(const std::string& what) : EngineError(what) {}
};

class InvalidBoxError : public EngineError {
 public:
  explicit InvalidBoxError(const std::string& what) : EngineError(what) {}
};

class EmptyInputError : public EngineError {
 public:
  explicit EmptyInputError(const std::string& what) : EngineError(what) {}
};

class TooLargeError : public EngineError {
 public:
  explicit TooLargeError(const std::string& what) : EngineError(what) {}
};

class GroupTooSmallError : public EngineError {
 public:
  explicit GroupTooSmallError(const std::string& what) : EngineError(what) {}
};

class InvalidConfigError : public EngineError {
 public:
  explicit InvalidConfigError(const std::string& what) : EngineError(what) {}
};

class UnresolvableError : public EngineError {
 public:
  explicit UnresolvableError(const std::string& what) : EngineError(what) {}
};

class NonFiniteGradientError : public EngineError {
 public:
  explicit NonFiniteGradientError(const std::string& what) : EngineError(what) {}
};

class PolicyFailureError : public EngineError {
 public:
  explicit PolicyFailureError(const std::string& what) : EngineError(what) {}
};

}  // namespace segreward
