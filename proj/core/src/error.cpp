#include "retmap/error.hpp"

namespace retmap {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::OffSurface:
      return "OffSurface";
    case ErrorKind::ProjectionFailed:
      return "ProjectionFailed";
    case ErrorKind::InadmissibleThickness:
      return "InadmissibleThickness";
    case ErrorKind::ImmersionFailure:
      return "ImmersionFailure";
    case ErrorKind::NormalRayMissesCore:
      return "NormalRayMissesCore";
    case ErrorKind::CurvatureSingularity:
      return "CurvatureSingularity";
    case ErrorKind::NotAFixedPoint:
      return "NotAFixedPoint";
    case ErrorKind::InvalidArgument:
      return "InvalidArgument";
  }
  return "Unknown";
}

GeometryError::GeometryError(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

}  // namespace retmap
