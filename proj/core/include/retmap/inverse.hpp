#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "retmap/analysis.hpp"
#include "retmap/fixed_point_search.hpp"

namespace retmap {

/// A surface map observed only through evaluation.
class BlackBoxMap {
 public:
  BlackBoxMap(ConvexCore core, SurfaceMap map) : core_(std::move(core)), map_(std::move(map)) {}

  /// F = pi o Phi of a domain; the domain is copied into the closure.
  static BlackBoxMap wrap(const RadialDomain& dom);
  /// k-fold composition of f.
  static BlackBoxMap iterate(const BlackBoxMap& f, int k);

  SurfacePoint operator()(const SurfacePoint& c) const { return map_(c); }
  const ConvexCore& core() const { return core_; }
  const SurfaceMap& map() const { return map_; }

 private:
  ConvexCore core_;
  SurfaceMap map_;
};

struct DescentSample {
  SurfacePoint point;
  /// Unit tangent direction of F(c) - c.
  AmbientVector direction = AmbientVector::Zero();
  double displacement = 0.0;
};

struct DescentFieldRecovery {
  std::vector<DescentSample> samples;
  /// Points with |F(c) - c| <= skip threshold.
  std::vector<SurfacePoint> skipped;
  std::size_t errors = 0;
};

inline constexpr double kDescentSkipThreshold = 1e-9;

DescentFieldRecovery recover_descent_field(const BlackBoxMap& f, const std::vector<SurfacePoint>& samples,
                                           double skip_threshold = kDescentSkipThreshold, unsigned threads = 1);

/// The fixed-point search of the analysis module, run through f alone.
FixedPointSearchResult detect_fixed_points_blackbox(const BlackBoxMap& f, std::size_t n_seeds, double tol,
                                                    unsigned threads = 1,
                                                    std::size_t max_iters = kDefaultMaxIterations);

/// I - DF(c*) by central differences through f. Throws NotAFixedPoint.
TangentMatrix estimate_composite_operator(const BlackBoxMap& f, const SurfacePoint& c_star,
                                          const TangentFrame& frame, double h = kDefaultFdStep);

/// Where the scalar gain used for a reconstruction came from.
enum class AlphaMode { Known, Assumed, Swept };

std::string_view to_string(AlphaMode mode) noexcept;

struct HessianReconstruction {
  TangentMatrix hessian;
  /// Ascending, with matching eigenvector columns.
  TangentVector eigenvalues;
  TangentMatrix eigenvectors;
  double alpha = 0.0;
  AlphaMode mode = AlphaMode::Known;
};

/// Hess = composite / alpha, symmetrized, with its eigendecomposition.
HessianReconstruction reconstruct_hessian_isotropic(const TangentMatrix& composite, double alpha,
                                                    AlphaMode mode = AlphaMode::Known);

enum class LineFieldVerdict { SameLineField, DifferentLineField };

std::string_view to_string(LineFieldVerdict v) noexcept;

struct ScalingAmbiguityReport {
  /// Signed cosine between the tangent displacements of F1 and F2.
  std::vector<double> cosines;
  /// |F2(c) - c| / |F1(c) - c|.
  std::vector<double> norm_ratios;
  double mean_cosine = 0.0;
  double min_cosine = 0.0;
  double mean_ratio = 0.0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  /// max | |F1(c) - c| - |F2(c) - c| |
  double max_norm_difference = 0.0;
  std::size_t skipped = 0;
  LineFieldVerdict verdict = LineFieldVerdict::DifferentLineField;
};

inline constexpr double kDirectionTolerance = 1e-3;

ScalingAmbiguityReport scaling_ambiguity_diagnostic(const BlackBoxMap& f1, const BlackBoxMap& f2,
                                                    const std::vector<SurfacePoint>& samples,
                                                    double tol_dir = kDirectionTolerance, unsigned threads = 1);

inline constexpr int kUnresolved = -1;

struct BasinOptions {
  double tol = 1e-10;
  std::size_t max_iters = kDefaultMaxIterations;
  /// Limits closer than this are linked into one cluster (single linkage), so
  /// a connected manifold of fixed points forms one cluster.
  double link_radius = 1e-3;
  unsigned threads = 1;
};

struct BasinLabeling {
  std::vector<SurfacePoint> seeds;
  std::vector<int> labels;
  std::vector<SurfacePoint> limits;
  std::vector<SurfacePoint> cluster_reps;
  std::vector<std::size_t> cluster_sizes;
  /// More than half of the seeds are fixed themselves.
  bool continuum = false;
  std::size_t unresolved = 0;
};

BasinLabeling basin_decomposition(const BlackBoxMap& f, const std::vector<SurfacePoint>& seeds,
                                  const BasinOptions& options = {});

enum class EquivalenceVerdict {
  ConsistentWithEquivalence,
  DistinguishedFixedPoints,
  DistinguishedBasins,
  DistinguishedLineField,
};

std::string_view to_string(EquivalenceVerdict v) noexcept;

struct EquivalenceOptions {
  double hausdorff_tol = 1e-4;
  double basin_agreement = 0.99;
  double direction_tol = kDirectionTolerance;
  std::size_t fixed_point_seeds = 400;
  double fixed_point_tol = 1e-10;
  BasinOptions basins;
};

struct EquivalenceEvidence {
  /// Symmetric distance between the fixed-point sets, each point of one set
  /// measured against the fixed-point set of the other map.
  double fixed_point_hausdorff = 0.0;
  std::size_t fixed_points_1 = 0;
  std::size_t fixed_points_2 = 0;
  double basin_agreement = 0.0;
  double mean_abs_cosine = 0.0;
  bool fixed_points_match = false;
  bool basins_match = false;
  bool line_fields_match = false;
  EquivalenceVerdict verdict = EquivalenceVerdict::ConsistentWithEquivalence;
};

/// Necessary conditions for dynamical equivalence: matching fixed-point sets,
/// matching basin partitions after cluster matching, matching unsigned
/// displacement directions.
EquivalenceEvidence dynamical_equivalence_check(const BlackBoxMap& f1, const BlackBoxMap& f2,
                                                const std::vector<SurfacePoint>& seeds,
                                                const EquivalenceOptions& options = {});

/// Fraction of seeds whose labels agree after greedy one-to-one matching of
/// clusters by overlap. Seeds unresolved under both maps are left out; a seed
/// unresolved under only one of them counts as a disagreement.
double basin_partition_agreement(const BasinLabeling& a, const BasinLabeling& b);

struct CompositeSample {
  SurfacePoint point;
  TangentFrame frame;
  TangentMatrix composite;
};

struct HessianSample {
  SurfacePoint point;
  TangentFrame frame;
  HessianReconstruction reconstruction;
};

struct ReconstructionReport {
  std::vector<FixedPointCandidate> fixed_points;
  bool continuum = false;
  std::vector<DescentSample> descent_samples;
  std::size_t skipped_samples = 0;
  std::vector<CompositeSample> composite_ops;
  std::vector<HessianSample> hessians_isotropic;
};

/// Supplies the scalar gain at a fixed point and records where it came from.
struct AlphaSource {
  AlphaMode mode = AlphaMode::Assumed;
  std::function<std::vector<double>(const SurfacePoint&)> values;
};

struct ReconstructionOptions {
  std::size_t n_seeds = 400;
  double tol = 1e-10;
  std::size_t max_iters = kDefaultMaxIterations;
  double h = kDefaultFdStep;
  /// Fixed points closer than this to an earlier one are analysed once.
  double dedup_radius = 1e-3;
  std::size_t max_fixed_points = 64;
  unsigned threads = 1;
};

/// Black-box pipeline: fixed points, descent directions at the samples, the
/// composite operator at each distinct fixed point and its isotropic Hessian.
ReconstructionReport reconstruct(const BlackBoxMap& f, const std::vector<SurfacePoint>& samples,
                                 const AlphaSource& alpha, const ReconstructionOptions& options = {});

/// CSV: index,theta,phi,x,y,z,residual
void write_fixed_points_csv(std::ostream& os, const std::vector<FixedPointCandidate>& points);
/// CSV: index,theta,phi,x,y,z,dx,dy,dz,displacement
void write_descent_csv(std::ostream& os, const std::vector<DescentSample>& samples);
/// CSV: index,x,y,z,row,col,composite
void write_composites_csv(std::ostream& os, const std::vector<CompositeSample>& ops);
/// CSV: index,x,y,z,alpha,alpha_mode,eigen_index,eigenvalue,vx,vy,vz
void write_hessians_csv(std::ostream& os, const std::vector<HessianSample>& hessians);
/// CSV: seed,theta,phi,label,limit_x,limit_y,limit_z
void write_csv(std::ostream& os, const BasinLabeling& basins);
/// CSV: index,cosine,norm_ratio
void write_csv(std::ostream& os, const ScalingAmbiguityReport& report);

}  // namespace retmap
