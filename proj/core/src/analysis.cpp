#include "retmap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include "retmap/csv.hpp"

namespace retmap {
namespace {

constexpr double kSingularDeterminant = 1e-10;

TangentMatrix identity(int k) { return TangentMatrix::Identity(k, k); }

TangentMatrix symmetrize(const TangentMatrix& m) { return 0.5 * (m + m.transpose()); }

TangentMatrix curvature_factor_inverse(const ConvexCore& core, const SurfacePoint& c, const TangentFrame& frame,
                                       double d) {
  const TangentMatrix m = identity(frame.dim()) - d * shape_operator_at(core, c, frame);
  const double det = m.determinant();
  if (!(std::abs(det) > kSingularDeterminant)) {
    throw GeometryError(ErrorKind::CurvatureSingularity, fmt::format("det(I - dS) = {:.3e}", det));
  }
  return symmetrize(m.inverse());
}

std::vector<std::complex<double>> sorted_eigenvalues(const TangentMatrix& m) {
  std::vector<std::complex<double>> ev;
  if (m.rows() == 1) {
    ev.emplace_back(m(0, 0), 0.0);
  } else {
    Eigen::EigenSolver<Eigen::Matrix2d> solver(Eigen::Matrix2d(m), false);
    for (int i = 0; i < 2; ++i) ev.push_back(solver.eigenvalues()[i]);
  }
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return ev;
}

}  // namespace

std::string_view to_string(GainModel model) noexcept {
  return model == GainModel::Nominal ? "nominal" : "ray_tilt";
}

std::string_view to_string(Stability s) noexcept {
  switch (s) {
    case Stability::Attracting:
      return "Attracting";
    case Stability::Repelling:
      return "Repelling";
    case Stability::Saddle:
      return "Saddle";
    case Stability::Neutral:
      return "Neutral";
    case Stability::Mixed:
      return "Mixed";
  }
  return "unknown";
}

std::string_view to_string(DirectionLabel s) noexcept {
  switch (s) {
    case DirectionLabel::Contracting:
      return "Contracting";
    case DirectionLabel::Expanding:
      return "Expanding";
    case DirectionLabel::Neutral:
      return "Neutral";
  }
  return "unknown";
}

TangentMatrix operator_A(const ConvexCore& core, const SurfacePoint& c, const TangentFrame& frame, double d,
                         GainModel model) {
  const TangentMatrix inv = curvature_factor_inverse(core, c, frame, d);
  return model == GainModel::Nominal ? TangentMatrix(2.0 * d * inv) : TangentMatrix(-d * inv);
}

TangentMatrix operator_A(const RadialDomain& dom, const SurfacePoint& c, const TangentFrame& frame,
                         GainModel model) {
  return operator_A(dom.core(), c, frame, eval(dom.field(), c), model);
}

double operator_A_series_residual(const ConvexCore& core, const SurfacePoint& c, double d) {
  const TangentFrame frame = core.frame_at(c);
  const TangentMatrix s = shape_operator_at(core, c, frame);
  const TangentMatrix a = operator_A(core, c, frame, d, GainModel::Nominal);
  return (a - 2.0 * d * identity(frame.dim()) - 2.0 * d * d * s).norm();
}

double first_order_residual(const RadialDomain& dom, const SurfacePoint& c, GainModel model) {
  const ConvexCore& core = dom.core();
  const SurfacePoint f = return_map(dom, c);
  const TangentFrame frame = core.frame_at(c);
  const TangentVector g = surface_gradient(dom.field(), c, frame);
  const TangentVector v = -operator_A(dom, c, frame, model) * g;
  const SurfacePoint predicted = retract(core, c, frame.to_ambient(v), 1.0);
  return (f.ambient - predicted.ambient).norm();
}

SecondOrderResidual second_order_residual(const RadialDomain& dom, const SurfacePoint& c, GainModel model) {
  const ConvexCore& core = dom.core();
  const double d = eval(dom.field(), c);
  const SurfacePoint f = return_map(dom, c);
  const TangentFrame frame = core.frame_at(c);
  const TangentVector g = surface_gradient(dom.field(), c, frame);
  const TangentMatrix h = surface_hessian(dom.field(), c, frame);
  const TangentVector first = -operator_A(core, c, frame, d, model) * g;
  const TangentVector second = first + 2.0 * d * d * h * g + 2.0 * d * g.squaredNorm() * g;

  SecondOrderResidual out;
  const SurfacePoint predicted = retract(core, c, frame.to_ambient(second), 1.0);
  out.total = (f.ambient - predicted.ambient).norm();

  const TangentVector w = frame.coords(f.ambient - c.ambient) - first;
  const double gn = g.norm();
  out.transverse = gn > 0.0 ? (w - w.dot(g / gn) * (g / gn)).norm() : w.norm();
  return out;
}

double normal_expansion_residual(const RadialDomain& dom, const SurfacePoint& c) {
  const ConvexCore& core = dom.core();
  const OuterBoundaryPoint x = radial_map(dom, c);
  const TangentFrame frame = core.frame_at(c);
  const TangentVector g = surface_gradient(dom.field(), c, frame);
  const TangentVector tilt = curvature_factor_inverse(core, c, frame, x.thickness) * g;
  return (x.inward_normal + normal_at(core, c) - frame.to_ambient(tilt)).norm();
}

SlopeFit loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw GeometryError(ErrorKind::InvalidArgument, "slope fit needs two or more matching samples");
  }
  SlopeFit fit;
  if (*std::max_element(y.begin(), y.end()) < kVanishingResidual) {
    fit.vanishing = true;
    fit.slope = std::numeric_limits<double>::infinity();
    return fit;
  }
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], std::numeric_limits<double>::min()));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return fit;
}

ExpansionResidualReport expansion_sweep(const DomainFamily& family, const SurfacePoint& c,
                                        const std::vector<double>& epsilons, GainModel model) {
  ExpansionResidualReport report;
  report.epsilons = epsilons;
  report.model = model;
  for (double eps : epsilons) {
    const RadialDomain dom = family(eps);
    report.residual_norms.push_back(first_order_residual(dom, c, model));
    const SecondOrderResidual so = second_order_residual(dom, c, model);
    report.second_order_norms.push_back(so.total);
    report.transverse_residual_norms.push_back(so.transverse);
    report.normal_residual_norms.push_back(normal_expansion_residual(dom, c));
  }
  if (epsilons.size() >= 2) {
    report.fitted_slope = loglog_slope(epsilons, report.residual_norms).slope;
    report.second_order_slope = loglog_slope(epsilons, report.second_order_norms).slope;
    const SlopeFit t = loglog_slope(epsilons, report.transverse_residual_norms);
    report.transverse_slope = t.slope;
    report.transverse_vanishing = t.vanishing;
    report.normal_slope = loglog_slope(epsilons, report.normal_residual_norms).slope;
  }
  return report;
}

TangentMatrix finite_difference_jacobian(const ConvexCore& core, const SurfaceMap& map, const SurfacePoint& c_star,
                                         const TangentFrame& frame, double h, double* residual) {
  if (!(h > 0.0)) throw GeometryError(ErrorKind::InvalidArgument, "finite-difference step must be positive");
  const double r = (map(c_star).ambient - c_star.ambient).norm();
  if (residual) *residual = r;
  if (!(r < kFixedPointTolerance)) {
    throw GeometryError(ErrorKind::NotAFixedPoint, fmt::format("|F(c) - c| = {:.3e}", r));
  }
  const int k = frame.dim();
  TangentMatrix df(k, k);
  for (int i = 0; i < k; ++i) {
    const AmbientVector v = frame.vectors.col(i);
    const AmbientVector plus = map(retract(core, c_star, v, h)).ambient;
    const AmbientVector minus = map(retract(core, c_star, v, -h)).ambient;
    df.col(i) = frame.coords((plus - minus) / (2.0 * h));
  }
  return df;
}

LinearizationReport make_linearization_report(const SurfacePoint& c, const TangentFrame& frame, TangentMatrix df,
                                              std::optional<TangentMatrix> gain,
                                              std::optional<TangentMatrix> hessian) {
  LinearizationReport report;
  report.point = c;
  report.frame = frame;
  report.composite = identity(frame.dim()) - df;
  report.DF = std::move(df);
  report.eigenvalues_DF = sorted_eigenvalues(report.DF);
  report.gain = std::move(gain);
  report.hessian = std::move(hessian);
  report.classification = classify_fixed_point(report);
  return report;
}

LinearizationReport linearize_fd(const RadialDomain& dom, const SurfacePoint& c_star, const TangentFrame& frame,
                                 double h) {
  double residual = 0.0;
  const SurfaceMap map = [&dom](const SurfacePoint& p) { return return_map(dom, p); };
  TangentMatrix df = finite_difference_jacobian(dom.core(), map, c_star, frame, h, &residual);
  std::optional<TangentMatrix> gain;
  try {
    gain = operator_A(dom, c_star, frame, GainModel::Nominal);
  } catch (const GeometryError&) {
  }
  LinearizationReport report = make_linearization_report(c_star, frame, std::move(df), std::move(gain), std::nullopt);
  report.fixed_point_residual = residual;
  return report;
}

LinearizationReport linearize_analytic(const RadialDomain& dom, const SurfacePoint& c_star,
                                       const TangentFrame& frame, GainModel model) {
  const TangentMatrix a = operator_A(dom, c_star, frame, model);
  const TangentMatrix h = surface_hessian(dom.field(), c_star, frame);
  TangentMatrix df = identity(frame.dim()) - a * h;
  LinearizationReport report = make_linearization_report(c_star, frame, std::move(df), a, h);
  report.fixed_point_residual = surface_gradient_ambient(dom.field(), c_star).norm();
  return report;
}

Classification classify_fixed_point(const LinearizationReport& report, double tol) {
  Classification out;
  std::size_t contracting = 0, expanding = 0, neutral = 0;
  for (const auto& mu : report.eigenvalues_DF) {
    const double m = std::abs(mu);
    if (m < 1.0 - tol) {
      out.labels.push_back(DirectionLabel::Contracting);
      ++contracting;
    } else if (m > 1.0 + tol) {
      out.labels.push_back(DirectionLabel::Expanding);
      ++expanding;
    } else {
      out.labels.push_back(DirectionLabel::Neutral);
      ++neutral;
    }
  }
  const std::size_t total = out.labels.size();
  if (contracting == total) {
    out.stability = Stability::Attracting;
  } else if (expanding == total) {
    out.stability = Stability::Repelling;
  } else if (neutral == total) {
    out.stability = Stability::Neutral;
  } else if (neutral == 0) {
    out.stability = Stability::Saddle;
  } else {
    out.stability = Stability::Mixed;
  }

  if (!report.gain) return out;
  const TangentMatrix a = symmetrize(*report.gain);
  Eigen::SelfAdjointEigenSolver<TangentMatrix> gain_eig(a);
  if (!(gain_eig.eigenvalues().minCoeff() > 0.0)) return out;

  const TangentMatrix a_inv = a.inverse();
  const TangentMatrix m = symmetrize(a_inv * report.composite);
  Eigen::SelfAdjointEigenSolver<TangentMatrix> eig(m);
  const double threshold = tol * gain_eig.eigenvalues().cwiseInverse().maxCoeff();
  int negative = 0;
  int counted = 0;
  for (int i = 0; i < eig.eigenvalues().size(); ++i) {
    const double lambda = eig.eigenvalues()[i];
    if (std::abs(lambda) <= threshold) {
      out.neutral_excluded = true;
      continue;
    }
    ++counted;
    if (lambda < 0.0) ++negative;
  }
  if (counted > 0) out.morse_index = negative;
  return out;
}

CriticalPointSearch find_fixed_points(const RadialDomain& dom, std::size_t n_seeds, double tol, unsigned threads,
                                      std::size_t max_iters) {
  FixedPointSearchOptions options;
  options.n_seeds = n_seeds;
  options.tol = tol;
  options.threads = threads;
  options.max_iters = max_iters;
  const SurfaceMap map = [&dom](const SurfacePoint& p) { return return_map(dom, p); };
  FixedPointSearchResult raw = search_fixed_points(dom.core(), map, options);

  CriticalPointSearch out;
  out.continuum = raw.continuum;
  out.grid_fixed_count = raw.grid_fixed_count;
  out.nonconvergent_seeds = std::move(raw.nonconvergent_seeds);
  out.error_seeds = raw.error_seeds;
  for (const auto& fp : raw.fixed_points) {
    out.points.push_back({fp.point, fp.residual, surface_gradient_ambient(dom.field(), fp.point).norm()});
  }
  return out;
}

void write_eigenvalues_csv(std::ostream& os, const LinearizationReport& report) {
  os << "index,re,im,label\n";
  for (std::size_t i = 0; i < report.eigenvalues_DF.size(); ++i) {
    const auto& mu = report.eigenvalues_DF[i];
    os << i << ',' << csv::num(mu.real()) << ',' << csv::num(mu.imag()) << ','
       << to_string(report.classification.labels[i]) << '\n';
  }
}

void write_matrices_csv(std::ostream& os, const LinearizationReport& report) {
  os << "row,col,DF,composite";
  if (report.gain) os << ",gain";
  if (report.hessian) os << ",hessian";
  os << '\n';
  for (int i = 0; i < report.DF.rows(); ++i) {
    for (int j = 0; j < report.DF.cols(); ++j) {
      os << i << ',' << j << ',' << csv::num(report.DF(i, j)) << ',' << csv::num(report.composite(i, j));
      if (report.gain) os << ',' << csv::num((*report.gain)(i, j));
      if (report.hessian) os << ',' << csv::num((*report.hessian)(i, j));
      os << '\n';
    }
  }
}

void write_csv(std::ostream& os, const ExpansionResidualReport& report) {
  os << "eps,first_order,second_order_total,transverse,normal\n";
  for (std::size_t i = 0; i < report.epsilons.size(); ++i) {
    os << csv::num(report.epsilons[i]) << ',' << csv::num(report.residual_norms[i]) << ','
       << csv::num(report.second_order_norms[i]) << ',' << csv::num(report.transverse_residual_norms[i]) << ','
       << csv::num(report.normal_residual_norms[i]) << '\n';
  }
}

void write_csv(std::ostream& os, const CriticalPointSearch& search) {
  os << "index,theta,phi,x,y,z,residual,grad_norm\n";
  for (std::size_t i = 0; i < search.points.size(); ++i) {
    const auto& p = search.points[i];
    os << i << ',' << csv::num(p.point.chart.theta) << ',' << csv::num(p.point.chart.phi) << ','
       << csv::num(p.point.ambient.x()) << ',' << csv::num(p.point.ambient.y()) << ','
       << csv::num(p.point.ambient.z()) << ',' << csv::num(p.residual) << ',' << csv::num(p.grad_norm) << '\n';
  }
}

}  // namespace retmap
