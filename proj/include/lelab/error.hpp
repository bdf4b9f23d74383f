#pragma once

#include <stdexcept>
#include <string>

namespace lelab {

enum class ErrorKind {
  InvalidArgument,
  InvalidSpacing,
  EmptyInterior,
  OutOfDomain,
  GridMismatch,
  NoConvergence,
  NonPositive,
  NewtonDiverged,
  JacobianSolveFailed,
  StepUnderflow,
  NoZeroFound,
  BallExitsDomain,
  ScaleUnderflow,
  SourceTooCloseToBoundary,
  PointsTooClose,
  NotConverged,
  TestPointTooClose,
  Config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void ensure(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace lelab
