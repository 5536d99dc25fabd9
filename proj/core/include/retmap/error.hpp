#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace retmap {

enum class ErrorKind {
  OffSurface,
  ProjectionFailed,
  InadmissibleThickness,
  ImmersionFailure,
  NormalRayMissesCore,
  CurvatureSingularity,
  NotAFixedPoint,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Raised by geometric kernels when a precondition or numerical step fails.
class GeometryError : public std::runtime_error {
 public:
  GeometryError(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace retmap
