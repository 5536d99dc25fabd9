#include "retmap/inverse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "parallel.hpp"
#include "retmap/csv.hpp"

namespace retmap {
namespace {

AmbientVector tangent_part(const ConvexCore& core, const SurfacePoint& c, const AmbientVector& v) {
  const AmbientVector n = normal_at(core, c);
  return v - n.dot(v) * n;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Distance from each point of `from` to the fixed-point set of `map`, found by
// Gauss-Newton from the point itself; infinite when no fixed point is reached.
double directed_distance(const ConvexCore& core, const SurfaceMap& map, const std::vector<FixedPointCandidate>& from,
                         double tol) {
  double worst = 0.0;
  for (const auto& p : from) {
    double dist = std::numeric_limits<double>::infinity();
    try {
      const FixedPointCandidate q = polish_fixed_point(core, map, p.point);
      if (q.residual < tol) dist = (q.point.ambient - p.point.ambient).norm();
    } catch (const GeometryError&) {
    }
    worst = std::max(worst, dist);
  }
  return worst;
}

}  // namespace

BlackBoxMap BlackBoxMap::wrap(const RadialDomain& dom) {
  auto owned = std::make_shared<const RadialDomain>(dom);
  return BlackBoxMap(dom.core(), [owned](const SurfacePoint& c) { return return_map(*owned, c); });
}

BlackBoxMap BlackBoxMap::iterate(const BlackBoxMap& f, int k) {
  if (k < 1) throw GeometryError(ErrorKind::InvalidArgument, "iteration count must be positive");
  SurfaceMap inner = f.map();
  return BlackBoxMap(f.core(), [inner, k](const SurfacePoint& c) {
    SurfacePoint p = c;
    for (int i = 0; i < k; ++i) p = inner(p);
    return p;
  });
}

std::string_view to_string(AlphaMode mode) noexcept {
  switch (mode) {
    case AlphaMode::Known:
      return "known";
    case AlphaMode::Assumed:
      return "assumed";
    case AlphaMode::Swept:
      return "swept";
  }
  return "unknown";
}

std::string_view to_string(LineFieldVerdict v) noexcept {
  return v == LineFieldVerdict::SameLineField ? "SameLineField" : "DifferentLineField";
}

std::string_view to_string(EquivalenceVerdict v) noexcept {
  switch (v) {
    case EquivalenceVerdict::ConsistentWithEquivalence:
      return "ConsistentWithEquivalence";
    case EquivalenceVerdict::DistinguishedFixedPoints:
      return "Distinguished(fixed_points)";
    case EquivalenceVerdict::DistinguishedBasins:
      return "Distinguished(basins)";
    case EquivalenceVerdict::DistinguishedLineField:
      return "Distinguished(line_field)";
  }
  return "unknown";
}

DescentFieldRecovery recover_descent_field(const BlackBoxMap& f, const std::vector<SurfacePoint>& samples,
                                           double skip_threshold, unsigned threads) {
  enum class Outcome { Sample, Skipped, Failed };
  std::vector<Outcome> outcome(samples.size(), Outcome::Failed);
  std::vector<DescentSample> out(samples.size());
  detail::parallel_for(samples.size(), threads, [&](std::size_t i) {
    try {
      const SurfacePoint& c = samples[i];
      const AmbientVector delta = f(c).ambient - c.ambient;
      const double norm = delta.norm();
      if (!(norm > skip_threshold)) {
        outcome[i] = Outcome::Skipped;
        return;
      }
      const AmbientVector t = tangent_part(f.core(), c, delta);
      out[i] = DescentSample{c, t.normalized(), norm};
      outcome[i] = Outcome::Sample;
    } catch (const GeometryError&) {
      outcome[i] = Outcome::Failed;
    }
  });
  DescentFieldRecovery rec;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    switch (outcome[i]) {
      case Outcome::Sample:
        rec.samples.push_back(out[i]);
        break;
      case Outcome::Skipped:
        rec.skipped.push_back(samples[i]);
        break;
      case Outcome::Failed:
        ++rec.errors;
        break;
    }
  }
  return rec;
}

FixedPointSearchResult detect_fixed_points_blackbox(const BlackBoxMap& f, std::size_t n_seeds, double tol,
                                                    unsigned threads, std::size_t max_iters) {
  FixedPointSearchOptions options;
  options.n_seeds = n_seeds;
  options.tol = tol;
  options.threads = threads;
  options.max_iters = max_iters;
  return search_fixed_points(f.core(), f.map(), options);
}

TangentMatrix estimate_composite_operator(const BlackBoxMap& f, const SurfacePoint& c_star,
                                          const TangentFrame& frame, double h) {
  const TangentMatrix df = finite_difference_jacobian(f.core(), f.map(), c_star, frame, h);
  return TangentMatrix::Identity(df.rows(), df.cols()) - df;
}

HessianReconstruction reconstruct_hessian_isotropic(const TangentMatrix& composite, double alpha, AlphaMode mode) {
  if (!(alpha > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "alpha must be positive");
  HessianReconstruction out;
  out.alpha = alpha;
  out.mode = mode;
  out.hessian = 0.5 * (composite + composite.transpose()) / alpha;
  Eigen::SelfAdjointEigenSolver<TangentMatrix> eig(out.hessian);
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = eig.eigenvectors();
  // sign convention: largest component of each eigenvector positive
  for (int j = 0; j < out.eigenvectors.cols(); ++j) {
    Eigen::Index imax = 0;
    out.eigenvectors.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.eigenvectors(imax, j) < 0.0) out.eigenvectors.col(j) *= -1.0;
  }
  return out;
}

ScalingAmbiguityReport scaling_ambiguity_diagnostic(const BlackBoxMap& f1, const BlackBoxMap& f2,
                                                    const std::vector<SurfacePoint>& samples, double tol_dir,
                                                    unsigned threads) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> cosines(samples.size(), nan);
  std::vector<double> ratios(samples.size(), nan);
  std::vector<double> differences(samples.size(), nan);
  detail::parallel_for(samples.size(), threads, [&](std::size_t i) {
    try {
      const SurfacePoint& c = samples[i];
      const AmbientVector a = f1(c).ambient - c.ambient;
      const AmbientVector b = f2(c).ambient - c.ambient;
      differences[i] = std::abs(a.norm() - b.norm());
      const AmbientVector ta = tangent_part(f1.core(), c, a);
      const AmbientVector tb = tangent_part(f1.core(), c, b);
      const double na = ta.norm();
      const double nb = tb.norm();
      if (!(na > 0.0) || !(nb > 0.0)) return;
      cosines[i] = ta.dot(tb) / (na * nb);
      ratios[i] = b.norm() / a.norm();
    } catch (const GeometryError&) {
    }
  });

  ScalingAmbiguityReport report;
  report.min_cosine = std::numeric_limits<double>::infinity();
  report.min_ratio = std::numeric_limits<double>::infinity();
  report.max_ratio = -std::numeric_limits<double>::infinity();
  double sum_cos = 0.0;
  double sum_ratio = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!std::isnan(differences[i])) report.max_norm_difference = std::max(report.max_norm_difference, differences[i]);
    if (std::isnan(cosines[i])) {
      ++report.skipped;
      continue;
    }
    report.cosines.push_back(cosines[i]);
    report.norm_ratios.push_back(ratios[i]);
    sum_cos += cosines[i];
    sum_ratio += ratios[i];
    report.min_cosine = std::min(report.min_cosine, cosines[i]);
    report.min_ratio = std::min(report.min_ratio, ratios[i]);
    report.max_ratio = std::max(report.max_ratio, ratios[i]);
  }
  if (!report.cosines.empty()) {
    const double n = static_cast<double>(report.cosines.size());
    report.mean_cosine = sum_cos / n;
    report.mean_ratio = sum_ratio / n;
    if (report.mean_cosine >= 1.0 - tol_dir) report.verdict = LineFieldVerdict::SameLineField;
  } else {
    report.min_cosine = report.min_ratio = report.max_ratio = nan;
    report.mean_cosine = report.mean_ratio = nan;
  }
  return report;
}

BasinLabeling basin_decomposition(const BlackBoxMap& f, const std::vector<SurfacePoint>& seeds,
                                  const BasinOptions& options) {
  const std::size_t n = seeds.size();
  std::vector<char> converged(n, 0);
  std::vector<char> fixed_seed(n, 0);
  std::vector<SurfacePoint> limits(seeds);
  detail::parallel_for(n, options.threads, [&](std::size_t i) {
    try {
      SurfacePoint c = seeds[i];
      for (std::size_t k = 0; k < options.max_iters; ++k) {
        SurfacePoint next = f(c);
        const double disp = (next.ambient - c.ambient).norm();
        c = next;
        if (disp < options.tol) {
          converged[i] = 1;
          fixed_seed[i] = k == 0 ? 1 : 0;
          break;
        }
      }
      limits[i] = c;
    } catch (const GeometryError&) {
    }
  });

  BasinLabeling out;
  out.seeds = seeds;
  out.limits = limits;
  out.labels.assign(n, kUnresolved);

  std::vector<std::size_t> resolved;
  for (std::size_t i = 0; i < n; ++i) {
    if (converged[i]) resolved.push_back(i);
  }
  out.unresolved = n - resolved.size();
  const auto fixed = static_cast<std::size_t>(std::count(fixed_seed.begin(), fixed_seed.end(), 1));
  out.continuum = n > 0 && 2 * fixed > n;

  UnionFind uf(resolved.size());
  for (std::size_t a = 0; a < resolved.size(); ++a) {
    for (std::size_t b = a + 1; b < resolved.size(); ++b) {
      if ((limits[resolved[a]].ambient - limits[resolved[b]].ambient).norm() <= options.link_radius) uf.unite(a, b);
    }
  }
  std::map<std::size_t, int> label_of_root;
  for (std::size_t a = 0; a < resolved.size(); ++a) {
    const std::size_t root = uf.find(a);
    auto it = label_of_root.find(root);
    if (it == label_of_root.end()) {
      it = label_of_root.emplace(root, static_cast<int>(out.cluster_reps.size())).first;
      out.cluster_reps.push_back(limits[resolved[a]]);
      out.cluster_sizes.push_back(0);
    }
    out.labels[resolved[a]] = it->second;
    ++out.cluster_sizes[static_cast<std::size_t>(it->second)];
  }
  return out;
}

double basin_partition_agreement(const BasinLabeling& a, const BasinLabeling& b) {
  if (a.labels.size() != b.labels.size()) {
    throw GeometryError(ErrorKind::InvalidArgument, "basin labelings cover different seed sets");
  }
  std::map<std::pair<int, int>, std::size_t> overlap;
  std::size_t considered = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (a.labels[i] == kUnresolved && b.labels[i] == kUnresolved) continue;
    ++considered;
    if (a.labels[i] == kUnresolved || b.labels[i] == kUnresolved) continue;
    ++overlap[{a.labels[i], b.labels[i]}];
  }
  if (considered == 0) return 1.0;
  std::vector<std::pair<std::size_t, std::pair<int, int>>> pairs;
  for (const auto& [key, count] : overlap) pairs.push_back({count, key});
  std::sort(pairs.begin(), pairs.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  std::map<int, bool> used_a;
  std::map<int, bool> used_b;
  std::size_t matched = 0;
  for (const auto& [count, key] : pairs) {
    if (used_a[key.first] || used_b[key.second]) continue;
    used_a[key.first] = used_b[key.second] = true;
    matched += count;
  }
  return static_cast<double>(matched) / static_cast<double>(considered);
}

EquivalenceEvidence dynamical_equivalence_check(const BlackBoxMap& f1, const BlackBoxMap& f2,
                                                const std::vector<SurfacePoint>& seeds,
                                                const EquivalenceOptions& options) {
  EquivalenceEvidence ev;
  const unsigned threads = options.basins.threads;

  const FixedPointSearchResult fp1 =
      detect_fixed_points_blackbox(f1, options.fixed_point_seeds, options.fixed_point_tol, threads);
  const FixedPointSearchResult fp2 =
      detect_fixed_points_blackbox(f2, options.fixed_point_seeds, options.fixed_point_tol, threads);
  ev.fixed_points_1 = fp1.fixed_points.size();
  ev.fixed_points_2 = fp2.fixed_points.size();
  if (fp1.continuum || fp2.continuum) {
    ev.fixed_point_hausdorff = fp1.continuum == fp2.continuum ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    const double polish_tol = 10.0 * options.fixed_point_tol;
    ev.fixed_point_hausdorff = std::max(directed_distance(f1.core(), f2.map(), fp1.fixed_points, polish_tol),
                                        directed_distance(f1.core(), f1.map(), fp2.fixed_points, polish_tol));
  }
  ev.fixed_points_match = ev.fixed_point_hausdorff < options.hausdorff_tol;

  const BasinLabeling b1 = basin_decomposition(f1, seeds, options.basins);
  const BasinLabeling b2 = basin_decomposition(f2, seeds, options.basins);
  ev.basin_agreement = basin_partition_agreement(b1, b2);
  ev.basins_match = ev.basin_agreement >= options.basin_agreement;

  const ScalingAmbiguityReport lines = scaling_ambiguity_diagnostic(f1, f2, seeds, options.direction_tol, threads);
  double sum = 0.0;
  for (double c : lines.cosines) sum += std::abs(c);
  ev.mean_abs_cosine = lines.cosines.empty() ? 1.0 : sum / static_cast<double>(lines.cosines.size());
  ev.line_fields_match = ev.mean_abs_cosine >= 1.0 - options.direction_tol;

  if (!ev.fixed_points_match) {
    ev.verdict = EquivalenceVerdict::DistinguishedFixedPoints;
  } else if (!ev.basins_match) {
    ev.verdict = EquivalenceVerdict::DistinguishedBasins;
  } else if (!ev.line_fields_match) {
    ev.verdict = EquivalenceVerdict::DistinguishedLineField;
  } else {
    ev.verdict = EquivalenceVerdict::ConsistentWithEquivalence;
  }
  return ev;
}

ReconstructionReport reconstruct(const BlackBoxMap& f, const std::vector<SurfacePoint>& samples,
                                 const AlphaSource& alpha, const ReconstructionOptions& options) {
  ReconstructionReport report;
  const FixedPointSearchResult fps =
      detect_fixed_points_blackbox(f, options.n_seeds, options.tol, options.threads, options.max_iters);
  report.fixed_points = fps.fixed_points;
  report.continuum = fps.continuum;

  const DescentFieldRecovery descent = recover_descent_field(f, samples, kDescentSkipThreshold, options.threads);
  report.descent_samples = descent.samples;
  report.skipped_samples = descent.skipped.size() + descent.errors;

  if (report.continuum) return report;
  std::vector<FixedPointCandidate> distinct;
  for (const auto& p : fps.fixed_points) {
    if (distinct.size() >= options.max_fixed_points) break;
    if (nearest_cluster(distinct, p.point.ambient, options.dedup_radius) < 0) distinct.push_back(p);
  }
  for (const auto& p : distinct) {
    const TangentFrame frame = f.core().frame_at(p.point);
    TangentMatrix composite;
    try {
      composite = estimate_composite_operator(f, p.point, frame, options.h);
    } catch (const GeometryError&) {
      continue;
    }
    report.composite_ops.push_back({p.point, frame, composite});
    if (!alpha.values) continue;
    for (double a : alpha.values(p.point)) {
      report.hessians_isotropic.push_back({p.point, frame, reconstruct_hessian_isotropic(composite, a, alpha.mode)});
    }
  }
  return report;
}

void write_fixed_points_csv(std::ostream& os, const std::vector<FixedPointCandidate>& points) {
  os << "index,theta,phi,x,y,z,residual\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    os << i << ',' << csv::num(p.point.chart.theta) << ',' << csv::num(p.point.chart.phi) << ','
       << csv::num(p.point.ambient.x()) << ',' << csv::num(p.point.ambient.y()) << ','
       << csv::num(p.point.ambient.z()) << ',' << csv::num(p.residual) << '\n';
  }
}

void write_descent_csv(std::ostream& os, const std::vector<DescentSample>& samples) {
  os << "index,theta,phi,x,y,z,dx,dy,dz,displacement\n";
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    os << i << ',' << csv::num(s.point.chart.theta) << ',' << csv::num(s.point.chart.phi) << ','
       << csv::num(s.point.ambient.x()) << ',' << csv::num(s.point.ambient.y()) << ','
       << csv::num(s.point.ambient.z()) << ',' << csv::num(s.direction.x()) << ',' << csv::num(s.direction.y())
       << ',' << csv::num(s.direction.z()) << ',' << csv::num(s.displacement) << '\n';
  }
}

void write_composites_csv(std::ostream& os, const std::vector<CompositeSample>& ops) {
  os << "index,x,y,z,row,col,composite\n";
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& op = ops[i];
    for (int r = 0; r < op.composite.rows(); ++r) {
      for (int c = 0; c < op.composite.cols(); ++c) {
        os << i << ',' << csv::num(op.point.ambient.x()) << ',' << csv::num(op.point.ambient.y()) << ','
           << csv::num(op.point.ambient.z()) << ',' << r << ',' << c << ',' << csv::num(op.composite(r, c)) << '\n';
      }
    }
  }
}

void write_hessians_csv(std::ostream& os, const std::vector<HessianSample>& hessians) {
  os << "index,x,y,z,alpha,alpha_mode,eigen_index,eigenvalue,vx,vy,vz\n";
  for (std::size_t i = 0; i < hessians.size(); ++i) {
    const auto& h = hessians[i];
    const auto& r = h.reconstruction;
    for (int j = 0; j < r.eigenvalues.size(); ++j) {
      const AmbientVector v = h.frame.to_ambient(r.eigenvectors.col(j));
      os << i << ',' << csv::num(h.point.ambient.x()) << ',' << csv::num(h.point.ambient.y()) << ','
         << csv::num(h.point.ambient.z()) << ',' << csv::num(r.alpha) << ',' << to_string(r.mode) << ',' << j << ','
         << csv::num(r.eigenvalues[j]) << ',' << csv::num(v.x()) << ',' << csv::num(v.y()) << ',' << csv::num(v.z())
         << '\n';
    }
  }
}

void write_csv(std::ostream& os, const BasinLabeling& basins) {
  os << "seed,theta,phi,label,limit_x,limit_y,limit_z\n";
  for (std::size_t i = 0; i < basins.seeds.size(); ++i) {
    const auto& s = basins.seeds[i];
    const auto& l = basins.limits[i];
    os << i << ',' << csv::num(s.chart.theta) << ',' << csv::num(s.chart.phi) << ',' << basins.labels[i] << ','
       << csv::num(l.ambient.x()) << ',' << csv::num(l.ambient.y()) << ',' << csv::num(l.ambient.z()) << '\n';
  }
}

void write_csv(std::ostream& os, const ScalingAmbiguityReport& report) {
  os << "index,cosine,norm_ratio\n";
  for (std::size_t i = 0; i < report.cosines.size(); ++i) {
    os << i << ',' << csv::num(report.cosines[i]) << ',' << csv::num(report.norm_ratios[i]) << '\n';
  }
}

}  // namespace retmap
