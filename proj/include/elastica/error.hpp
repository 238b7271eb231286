#pragma once

#include <stdexcept>
#include <string>

namespace elastica {

enum class ErrorKind {
  InvalidArgument,
  OutOfDomain,
  DegenerateGradient,
  NotAccepted,
  MaxStepsExceeded,
  Unreachable,
  NonConvergence,
  Io,
  DimensionMismatch,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::InvalidArgument, what);
}

}  // namespace elastica
