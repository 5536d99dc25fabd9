#pragma once

#include <Eigen/Core>

namespace retmap {

/// Point or vector of the ambient space. Planar cores (N = 2) keep z = 0.
using AmbientVector = Eigen::Vector3d;

/// Coordinates in a tangent frame; length N - 1 (1 or 2).
using TangentVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using TangentMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

/// Frame vectors stored column-wise, N - 1 columns.
using FrameBasis = Eigen::Matrix<double, 3, Eigen::Dynamic, 0, 3, 2>;

inline constexpr double kSurfaceTolerance = 1e-12;

}  // namespace retmap
