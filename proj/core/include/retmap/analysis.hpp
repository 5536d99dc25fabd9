#pragma once

#include <complex>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "retmap/fixed_point_search.hpp"
#include "retmap/return_map.hpp"

namespace retmap {

/// Leading-order gain through which the gradient enters the return map.
///   Nominal:  A = 2d (I - dS)^-1, with F(c) ~ c - A grad d
///   RayTilt:  A = -d (I - dS)^-1, the tilt of the outer normal traced back
///             along the inward ray to first order
enum class GainModel { Nominal, RayTilt };

std::string_view to_string(GainModel model) noexcept;

/// Gain operator in the frame. Throws CurvatureSingularity when
/// |det(I - dS)| <= 1e-10.
TangentMatrix operator_A(const RadialDomain& dom, const SurfacePoint& c, const TangentFrame& frame,
                         GainModel model = GainModel::Nominal);

/// Same operator for a given thickness value.
TangentMatrix operator_A(const ConvexCore& core, const SurfacePoint& c, const TangentFrame& frame, double d,
                         GainModel model = GainModel::Nominal);

/// |A - 2dI - 2d^2 S| in the frame at c for thickness d.
double operator_A_series_residual(const ConvexCore& core, const SurfacePoint& c, double d);

/// |F(c) - retract(c, -A grad d)|.
double first_order_residual(const RadialDomain& dom, const SurfacePoint& c, GainModel model = GainModel::Nominal);

struct SecondOrderResidual {
  /// |F(c) - retract(c, -A g + 2d^2 H g + 2d |g|^2 g)|
  double total = 0.0;
  /// Part of P_T(F(c) - c) + A g orthogonal to g.
  double transverse = 0.0;
};

SecondOrderResidual second_order_residual(const RadialDomain& dom, const SurfacePoint& c,
                                          GainModel model = GainModel::Nominal);

/// |n(Phi(c)) + nu(c) - (I - dS)^-1 grad d|.
double normal_expansion_residual(const RadialDomain& dom, const SurfacePoint& c);

struct SlopeFit {
  double slope = 0.0;
  /// All residuals below 1e-13: the quantity vanishes identically and the
  /// slope is reported as +inf.
  bool vanishing = false;
};

inline constexpr double kVanishingResidual = 1e-13;

/// Least-squares slope of log(y) against log(x).
SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

struct ExpansionResidualReport {
  std::vector<double> epsilons;
  GainModel model = GainModel::Nominal;
  std::vector<double> residual_norms;
  double fitted_slope = 0.0;
  std::vector<double> second_order_norms;
  double second_order_slope = 0.0;
  std::vector<double> transverse_residual_norms;
  double transverse_slope = 0.0;
  bool transverse_vanishing = false;
  std::vector<double> normal_residual_norms;
  double normal_slope = 0.0;
};

using DomainFamily = std::function<RadialDomain(double eps)>;

/// Residuals at a fixed point c of the core over a family of fields d_eps.
ExpansionResidualReport expansion_sweep(const DomainFamily& family, const SurfacePoint& c,
                                        const std::vector<double>& epsilons, GainModel model = GainModel::Nominal);

enum class Stability { Attracting, Repelling, Saddle, Neutral, Mixed };
enum class DirectionLabel { Contracting, Expanding, Neutral };

std::string_view to_string(Stability s) noexcept;
std::string_view to_string(DirectionLabel s) noexcept;

struct Classification {
  Stability stability = Stability::Neutral;
  /// One label per eigenvalue, in the order of eigenvalues_DF.
  std::vector<DirectionLabel> labels;
  /// Negative eigenvalues of A^-1 (I - DF) outside the neutral subspace; only
  /// claimed when the gain is known and positive definite and not every
  /// direction is neutral.
  std::optional<int> morse_index;
  bool neutral_excluded = false;
};

inline constexpr double kClassificationTolerance = 1e-6;

struct LinearizationReport {
  SurfacePoint point;
  TangentFrame frame;
  TangentMatrix DF;
  TangentMatrix composite;
  /// Sorted by real part, then imaginary part.
  std::vector<std::complex<double>> eigenvalues_DF;
  std::optional<TangentMatrix> gain;
  std::optional<TangentMatrix> hessian;
  double fixed_point_residual = 0.0;
  Classification classification;
};

inline constexpr double kFixedPointTolerance = 1e-8;
inline constexpr double kDefaultFdStep = 1e-5;

/// Central-difference DF of any surface map at a fixed point, in frame
/// coordinates. Throws NotAFixedPoint when |G(c) - c| >= 1e-8.
TangentMatrix finite_difference_jacobian(const ConvexCore& core, const SurfaceMap& map, const SurfacePoint& c_star,
                                         const TangentFrame& frame, double h = kDefaultFdStep,
                                         double* residual = nullptr);

/// DF by central differences of the exact map; the nominal gain is attached.
LinearizationReport linearize_fd(const RadialDomain& dom, const SurfacePoint& c_star, const TangentFrame& frame,
                                 double h = kDefaultFdStep);

/// DF = I - A Hess d with the chosen gain model.
LinearizationReport linearize_analytic(const RadialDomain& dom, const SurfacePoint& c_star,
                                       const TangentFrame& frame, GainModel model = GainModel::Nominal);

/// Builds a report from a DF matrix (eigenvalues, composite, classification).
LinearizationReport make_linearization_report(const SurfacePoint& c, const TangentFrame& frame, TangentMatrix df,
                                              std::optional<TangentMatrix> gain,
                                              std::optional<TangentMatrix> hessian);

Classification classify_fixed_point(const LinearizationReport& report, double tol = kClassificationTolerance);

struct CriticalPoint {
  SurfacePoint point;
  double residual = 0.0;
  double grad_norm = 0.0;
};

struct CriticalPointSearch {
  std::vector<CriticalPoint> points;
  bool continuum = false;
  std::size_t grid_fixed_count = 0;
  std::vector<SurfacePoint> nonconvergent_seeds;
  std::size_t error_seeds = 0;
};

CriticalPointSearch find_fixed_points(const RadialDomain& dom, std::size_t n_seeds, double tol,
                                      unsigned threads = 1, std::size_t max_iters = kDefaultMaxIterations);

/// CSV: index,re,im,label
void write_eigenvalues_csv(std::ostream& os, const LinearizationReport& report);
/// CSV: row,col,DF,composite[,gain][,hessian]
void write_matrices_csv(std::ostream& os, const LinearizationReport& report);
/// CSV: eps,first_order,second_order_total,transverse,normal
void write_csv(std::ostream& os, const ExpansionResidualReport& report);
/// CSV: index,theta,phi,x,y,z,residual,grad_norm
void write_csv(std::ostream& os, const CriticalPointSearch& search);

}  // namespace retmap
