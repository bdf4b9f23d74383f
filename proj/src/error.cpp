#include "lelab/error.hpp"

namespace lelab {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidSpacing: return "InvalidSpacing";
    case ErrorKind::EmptyInterior: return "EmptyInterior";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NonPositive: return "NonPositive";
    case ErrorKind::NewtonDiverged: return "NewtonDiverged";
    case ErrorKind::JacobianSolveFailed: return "JacobianSolveFailed";
    case ErrorKind::StepUnderflow: return "StepUnderflow";
    case ErrorKind::NoZeroFound: return "NoZeroFound";
    case ErrorKind::BallExitsDomain: return "BallExitsDomain";
    case ErrorKind::ScaleUnderflow: return "ScaleUnderflow";
    case ErrorKind::SourceTooCloseToBoundary: return "SourceTooCloseToBoundary";
    case ErrorKind::PointsTooClose: return "PointsTooClose";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::TestPointTooClose: return "TestPointTooClose";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace lelab
