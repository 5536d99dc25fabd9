#include "retmap/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <ostream>

#include <fmt/format.h>

#include "retmap/analysis.hpp"
#include "retmap/csv.hpp"
#include "retmap/inverse.hpp"
#include "retmap/sampling.hpp"
#include "retmap/version.hpp"

namespace retmap {
namespace {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Summary {
  csv::SummaryRows rows;

  void add(const std::string& key, double v) { rows.emplace_back(key, csv::fixed6(v)); }
  void add(const std::string& key, std::size_t v) { rows.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, int v) { rows.emplace_back(key, std::to_string(v)); }
  void add(const std::string& key, bool v) { rows.emplace_back(key, v ? "true" : "false"); }
  void add(const std::string& key, std::string_view v) { rows.emplace_back(key, std::string(v)); }
  void add(const std::string& key, const char* v) { rows.emplace_back(key, std::string(v)); }
};

class Context {
 public:
  Context(const Scenario& s, const RunOptions& options, std::filesystem::path dir)
      : scenario(s),
        out_dir(std::move(dir)),
        seed(options.seed ? *options.seed : static_cast<std::uint64_t>(s.get_int("rng_seed", 0))),
        threads(options.threads ? *options.threads : static_cast<unsigned>(s.get_int("threads", 1))),
        rng(seed) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const std::filesystem::path path = out_dir / name;
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(fmt::format("cannot write {}", path.string()));
    body(os);
    if (!os) throw IoError(fmt::format("write failed for {}", path.string()));
    files.push_back(name);
  }

  const Scenario& scenario;
  std::filesystem::path out_dir;
  std::uint64_t seed;
  unsigned threads;
  Rng rng;
  Summary summary;
  std::vector<std::string> files;
  /// Name of the operation currently running, for diagnostics.
  std::string operation = "setup";
};

void add_point(Summary& sum, const std::string& prefix, const SurfacePoint& p) {
  sum.add(prefix + ".theta", p.chart.theta);
  sum.add(prefix + ".phi", p.chart.phi);
  sum.add(prefix + ".x", p.ambient.x());
  sum.add(prefix + ".y", p.ambient.y());
  sum.add(prefix + ".z", p.ambient.z());
}

void add_eigenvalues(Summary& sum, const std::string& prefix, const LinearizationReport& r) {
  for (std::size_t i = 0; i < r.eigenvalues_DF.size(); ++i) {
    sum.add(fmt::format("{}.eigenvalue_{}.re", prefix, i), r.eigenvalues_DF[i].real());
    sum.add(fmt::format("{}.eigenvalue_{}.im", prefix, i), r.eigenvalues_DF[i].imag());
  }
  sum.add(prefix + ".stability", to_string(r.classification.stability));
  sum.add(prefix + ".morse_index",
          r.classification.morse_index ? std::to_string(*r.classification.morse_index) : std::string("none"));
  sum.add(prefix + ".neutral_excluded", r.classification.neutral_excluded);
}

int run_orbit(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const SurfacePoint seed = dom.core().point_at(s.get_double("orbit.theta"), s.get_double("orbit.phi", 0.0));
  ctx.operation = "iterate_orbit";
  const OrbitRecord rec = iterate_orbit(dom, seed, static_cast<std::size_t>(s.get_int("orbit.max_iters", 100000)),
                                        s.get_double("orbit.tol", kDefaultOrbitTolerance));
  ctx.write("orbit.csv", [&](std::ostream& os) { write_csv(os, rec); });
  if (rec.terminated == Termination::Error) {
    ctx.operation = "iterate_orbit";
    throw GeometryError(rec.error.value_or(ErrorKind::InvalidArgument), rec.message);
  }

  std::size_t increases = 0;
  for (std::size_t k = 1; k < rec.thickness_values.size(); ++k) {
    if (rec.thickness_values[k] > rec.thickness_values[k - 1] + 1e-12) ++increases;
  }
  auto& sum = ctx.summary;
  sum.add("terminated", to_string(rec.terminated));
  sum.add("steps", rec.steps());
  add_point(sum, "seed", seed);
  add_point(sum, "limit", rec.last());
  sum.add("d_initial", rec.thickness_values.front());
  sum.add("d_final", rec.thickness_values.back());
  sum.add("thickness_increases", increases);
  if (rec.terminated == Termination::Converged) sum.add("limit_grad_norm", rec.limit_grad_norm);

  const auto audit_samples = static_cast<std::size_t>(s.get_int("orbit.audit_samples", 0));
  if (audit_samples > 0) {
    ctx.operation = "descent_audit";
    const auto points = random_surface_points(dom.core(), audit_samples, ctx.rng);
    const DescentAudit audit = descent_audit(dom, points, 1e-12, ctx.threads);
    sum.add("audit.samples", audit.samples);
    sum.add("audit.violations", audit.violations);
    sum.add("audit.errors", audit.errors);
    sum.add("audit.max_increase", audit.max_increase);
  }
  return kExitOk;
}

int run_fixed_points(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  ctx.operation = "find_fixed_points";
  const CriticalPointSearch res =
      find_fixed_points(dom, static_cast<std::size_t>(s.get_int("fixed_points.n_seeds", 1000)),
                        s.get_double("fixed_points.tol", 1e-10), ctx.threads,
                        static_cast<std::size_t>(s.get_int("fixed_points.max_iters", 100000)));
  ctx.write("fixed_points.csv", [&](std::ostream& os) { write_csv(os, res); });
  double max_residual = 0.0;
  double max_grad = 0.0;
  for (const auto& p : res.points) {
    max_residual = std::max(max_residual, p.residual);
    max_grad = std::max(max_grad, p.grad_norm);
  }
  auto& sum = ctx.summary;
  sum.add("fixed_points", res.points.size());
  sum.add("ContinuumOfFixedPoints", res.continuum);
  sum.add("grid_fixed_count", res.grid_fixed_count);
  sum.add("nonconvergent_seeds", res.nonconvergent_seeds.size());
  sum.add("error_seeds", res.error_seeds);
  sum.add("max_residual", max_residual);
  sum.add("max_grad_norm", max_grad);
  return kExitOk;
}

int run_linearize(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const ConvexCore& core = dom.core();
  SurfacePoint c = core.point_at(s.get_double("linearize.theta"), s.get_double("linearize.phi", 0.0));
  if (s.get_bool("linearize.polish", false)) {
    ctx.operation = "polish_fixed_point";
    const SurfaceMap map = [&dom](const SurfacePoint& p) { return return_map(dom, p); };
    c = polish_fixed_point(core, map, c).point;
  }
  const TangentFrame frame = core.frame_at(c);
  const double tol = s.get_double("linearize.tol", kClassificationTolerance);

  ctx.operation = "linearize_fd";
  LinearizationReport fd = linearize_fd(dom, c, frame, s.get_double("linearize.h", kDefaultFdStep));
  fd.classification = classify_fixed_point(fd, tol);
  ctx.operation = "linearize_analytic";
  LinearizationReport an = linearize_analytic(dom, c, frame, GainModel::Nominal);
  an.classification = classify_fixed_point(an, tol);
  LinearizationReport tilt = linearize_analytic(dom, c, frame, GainModel::RayTilt);
  tilt.classification = classify_fixed_point(tilt, tol);

  ctx.write("eigenvalues_fd.csv", [&](std::ostream& os) { write_eigenvalues_csv(os, fd); });
  ctx.write("matrices_fd.csv", [&](std::ostream& os) { write_matrices_csv(os, fd); });
  ctx.write("eigenvalues_analytic.csv", [&](std::ostream& os) { write_eigenvalues_csv(os, an); });
  ctx.write("matrices_analytic.csv", [&](std::ostream& os) { write_matrices_csv(os, an); });

  auto& sum = ctx.summary;
  add_point(sum, "point", c);
  sum.add("fixed_point_residual", fd.fixed_point_residual);
  add_eigenvalues(sum, "fd", fd);
  add_eigenvalues(sum, "analytic", an);
  add_eigenvalues(sum, "analytic_ray_tilt", tilt);
  sum.add("fd_vs_analytic", (fd.DF - an.DF).norm());
  sum.add("fd_vs_analytic_ray_tilt", (fd.DF - tilt.DF).norm());
  return kExitOk;
}

int run_expansion(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const SurfacePoint c = dom.core().point_at(s.get_double("expansion.theta"), s.get_double("expansion.phi", 0.0));
  const GainModel model =
      s.get_string("expansion.model", "nominal") == "ray_tilt" ? GainModel::RayTilt : GainModel::Nominal;
  ctx.operation = "expansion_sweep";
  const DomainFamily family = [&s](double eps) { return build_domain(s, eps); };
  const ExpansionResidualReport rep = expansion_sweep(family, c, s.get_list("expansion.eps"), model);
  ctx.write("expansion.csv", [&](std::ostream& os) { write_csv(os, rep); });
  auto& sum = ctx.summary;
  add_point(sum, "point", c);
  sum.add("model", to_string(model));
  sum.add("fitted_slope", rep.fitted_slope);
  sum.add("second_order_slope", rep.second_order_slope);
  sum.add("transverse_slope", rep.transverse_slope);
  sum.add("transverse_vanishing", rep.transverse_vanishing);
  sum.add("normal_slope", rep.normal_slope);
  return kExitOk;
}

int run_reconstruct(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const BlackBoxMap f = BlackBoxMap::wrap(dom);
  const auto samples =
      random_surface_points(dom.core(), static_cast<std::size_t>(s.get_int("reconstruct.samples", 200)), ctx.rng);

  AlphaSource alpha;
  const std::string mode = s.get_string("reconstruct.alpha_mode", "known");
  if (mode == "known") {
    alpha.mode = AlphaMode::Known;
    // isotropic gain from the core geometry and the thickness at the point
    alpha.values = [&dom](const SurfacePoint& p) {
      const TangentFrame frame = dom.core().frame_at(p);
      const TangentMatrix a = operator_A(dom, p, frame);
      return std::vector<double>{a.trace() / static_cast<double>(a.rows())};
    };
  } else if (mode == "assumed") {
    alpha.mode = AlphaMode::Assumed;
    const double a = s.get_double("reconstruct.alpha");
    alpha.values = [a](const SurfacePoint&) { return std::vector<double>{a}; };
  } else {
    alpha.mode = AlphaMode::Swept;
    const std::vector<double> list = s.get_list("reconstruct.alpha_sweep");
    alpha.values = [list](const SurfacePoint&) { return list; };
  }

  ReconstructionOptions opts;
  opts.n_seeds = static_cast<std::size_t>(s.get_int("reconstruct.n_seeds", 400));
  opts.tol = s.get_double("reconstruct.tol", 1e-10);
  opts.h = s.get_double("reconstruct.h", kDefaultFdStep);
  opts.max_fixed_points = static_cast<std::size_t>(s.get_int("reconstruct.max_fixed_points", 64));
  opts.threads = ctx.threads;
  ctx.operation = "reconstruct";
  const ReconstructionReport rep = reconstruct(f, samples, alpha, opts);

  ctx.write("fixed_points.csv", [&](std::ostream& os) { write_fixed_points_csv(os, rep.fixed_points); });
  ctx.write("descent.csv", [&](std::ostream& os) { write_descent_csv(os, rep.descent_samples); });
  ctx.write("composites.csv", [&](std::ostream& os) { write_composites_csv(os, rep.composite_ops); });
  ctx.write("hessians.csv", [&](std::ostream& os) { write_hessians_csv(os, rep.hessians_isotropic); });

  auto& sum = ctx.summary;
  sum.add("fixed_points", rep.fixed_points.size());
  sum.add("ContinuumOfFixedPoints", rep.continuum);
  sum.add("descent_samples", rep.descent_samples.size());
  sum.add("skipped_samples", rep.skipped_samples);
  sum.add("composite_ops", rep.composite_ops.size());
  sum.add("hessians", rep.hessians_isotropic.size());
  sum.add("alpha_mode", to_string(alpha.mode));
  return kExitOk;
}

int run_scaling(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const double lambda = s.get_double("scaling.lambda");
  const RadialDomain scaled(ThicknessField::scaled(lambda, dom.field()));
  const BlackBoxMap f1 = BlackBoxMap::wrap(dom);
  const BlackBoxMap f2 = BlackBoxMap::wrap(scaled);
  const auto samples =
      random_surface_points(dom.core(), static_cast<std::size_t>(s.get_int("scaling.samples", 200)), ctx.rng);
  ctx.operation = "scaling_ambiguity_diagnostic";
  const ScalingAmbiguityReport rep = scaling_ambiguity_diagnostic(f1, f2, samples, kDirectionTolerance, ctx.threads);
  ctx.write("scaling.csv", [&](std::ostream& os) { write_csv(os, rep); });
  auto& sum = ctx.summary;
  sum.add("lambda", lambda);
  sum.add("samples", rep.cosines.size());
  sum.add("skipped", rep.skipped);
  sum.add("mean_cosine", rep.mean_cosine);
  sum.add("min_cosine", rep.min_cosine);
  sum.add("mean_norm_ratio", rep.mean_ratio);
  sum.add("min_norm_ratio", rep.min_ratio);
  sum.add("max_norm_ratio", rep.max_ratio);
  sum.add("max_norm_difference", rep.max_norm_difference);
  sum.add("verdict", to_string(rep.verdict));

  if (s.get_bool("scaling.equivalence", false)) {
    ctx.operation = "dynamical_equivalence_check";
    EquivalenceOptions eo;
    eo.basins.threads = ctx.threads;
    const auto seeds =
        surface_grid(dom.core(), static_cast<std::size_t>(s.get_int("scaling.equivalence_seeds", 200)));
    const EquivalenceEvidence ev = dynamical_equivalence_check(f1, f2, seeds, eo);
    sum.add("equivalence.verdict", to_string(ev.verdict));
    sum.add("equivalence.fixed_point_hausdorff", ev.fixed_point_hausdorff);
    sum.add("equivalence.basin_agreement", ev.basin_agreement);
    sum.add("equivalence.mean_abs_cosine", ev.mean_abs_cosine);
  }
  return kExitOk;
}

int run_basins(Context& ctx, const RadialDomain& dom) {
  const Scenario& s = ctx.scenario;
  const auto seeds = surface_grid(dom.core(), static_cast<std::size_t>(s.get_int("basins.n_seeds", 500)));
  BasinOptions opts;
  opts.tol = s.get_double("basins.tol", 1e-10);
  opts.max_iters = static_cast<std::size_t>(s.get_int("basins.max_iters", 100000));
  opts.link_radius = s.get_double("basins.link_radius", 1e-3);
  opts.threads = ctx.threads;
  ctx.operation = "basin_decomposition";
  const BasinLabeling b = basin_decomposition(BlackBoxMap::wrap(dom), seeds, opts);
  ctx.write("basins.csv", [&](std::ostream& os) { write_csv(os, b); });
  ctx.write("clusters.csv", [&](std::ostream& os) {
    os << "label,theta,phi,x,y,z,size\n";
    for (std::size_t i = 0; i < b.cluster_reps.size(); ++i) {
      const auto& p = b.cluster_reps[i];
      os << i << ',' << csv::num(p.chart.theta) << ',' << csv::num(p.chart.phi) << ',' << csv::num(p.ambient.x())
         << ',' << csv::num(p.ambient.y()) << ',' << csv::num(p.ambient.z()) << ',' << b.cluster_sizes[i] << '\n';
    }
  });
  auto& sum = ctx.summary;
  sum.add("seeds", b.seeds.size());
  sum.add("clusters", b.cluster_reps.size());
  sum.add("unresolved", b.unresolved);
  sum.add("ContinuumOfFixedPoints", b.continuum);
  return kExitOk;
}

int run_admissibility(Context& ctx, const RadialDomain& dom) {
  ctx.operation = "admissibility_check";
  const AdmissibilityReport rep = admissibility_check(
      dom, static_cast<std::size_t>(ctx.scenario.get_int("admissibility.grid_size", 10000)), ctx.threads);
  ctx.write("admissibility.csv", [&](std::ostream& os) { write_csv(os, rep); });
  auto& sum = ctx.summary;
  sum.add("grid_points", rep.rows.size());
  sum.add("min_d", rep.min_d);
  sum.add("min_sv_DPhi", rep.min_singular_value);
  sum.add("normal_ray_hit_rate", rep.hit_rate);
  sum.add("admissible", rep.admissible);
  return kExitOk;
}

void write_summary(Context& ctx) {
  ctx.write("summary.csv", [&](std::ostream& os) {
    os << "key,value\n";
    for (const auto& [k, v] : ctx.summary.rows) os << k << ',' << v << '\n';
  });
}

void write_manifest(Context& ctx, const RunOptions& options, double seconds, int exit_code) {
  std::vector<std::string> listed = ctx.files;
  ctx.write("manifest.txt", [&](std::ostream& os) {
    os << "tool = retmap " << kVersion << '\n';
    os << "scenario = " << ctx.scenario.source() << '\n';
    os << "rng_seed = " << ctx.seed << '\n';
    os << "threads = " << ctx.threads << '\n';
    os << "exit_code = " << exit_code << '\n';
    if (!options.deterministic_manifest) os << "wall_time_seconds = " << fmt::format("{:.3f}", seconds) << '\n';
    for (const auto& f : listed) os << "file = " << f << '\n';
    os << "\n# scenario echo\n";
    for (const auto& e : ctx.scenario.entries()) os << e.key << " = " << e.value << '\n';
  });
}

}  // namespace

std::filesystem::path resolve_output_dir(const Scenario& s, const RunOptions& options) {
  if (options.out_dir) return *options.out_dir;
  if (s.has("output_dir")) return s.get_string("output_dir");
  if (const char* env = std::getenv("RETMAP_OUT_DIR"); env && *env) return std::filesystem::path(env) / s.name();
  return std::filesystem::path("out") / s.name();
}

RunResult run_scenario(const Scenario& s, const RunOptions& options, std::ostream& log) {
  RunResult result;
  try {
    validate_scenario(s);
  } catch (const ScenarioParseError& e) {
    result.exit_code = kExitParse;
    result.diagnostic = e.what();
    return result;
  }

  result.out_dir = resolve_output_dir(s, options);
  std::error_code ec;
  std::filesystem::create_directories(result.out_dir, ec);
  if (ec) {
    result.exit_code = kExitIo;
    result.diagnostic = fmt::format("cannot create output directory {}: {}", result.out_dir.string(), ec.message());
    return result;
  }

  Context ctx(s, options, result.out_dir);
  const auto start = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    ctx.operation = "build_domain";
    const RadialDomain dom = build_domain(s);
    const std::string task = s.task();
    log << fmt::format("running {} ({}) on {} with {}\n", s.name(), task, dom.core().describe(),
                       dom.field().describe());
    if (task == "orbit") {
      code = run_orbit(ctx, dom);
    } else if (task == "fixed_points") {
      code = run_fixed_points(ctx, dom);
    } else if (task == "linearize") {
      code = run_linearize(ctx, dom);
    } else if (task == "expansion_sweep") {
      code = run_expansion(ctx, dom);
    } else if (task == "reconstruct") {
      code = run_reconstruct(ctx, dom);
    } else if (task == "scaling") {
      code = run_scaling(ctx, dom);
    } else if (task == "basins") {
      code = run_basins(ctx, dom);
    } else {
      code = run_admissibility(ctx, dom);
    }
  } catch (const GeometryError& e) {
    code = kExitNumeric;
    result.diagnostic = fmt::format("numeric failure in {}: {}", ctx.operation, e.what());
  } catch (const ScenarioParseError& e) {
    code = kExitParse;
    result.diagnostic = e.what();
  } catch (const IoError& e) {
    code = kExitIo;
    result.diagnostic = e.what();
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  try {
    if (code != kExitParse) {
      write_summary(ctx);
      write_manifest(ctx, options, seconds, code);
    }
  } catch (const IoError& e) {
    if (code == kExitOk) {
      code = kExitIo;
      result.diagnostic = e.what();
    }
  }
  result.exit_code = code;
  result.files = ctx.files;
  return result;
}

RunResult run_scenario_file(const std::filesystem::path& path, const RunOptions& options, std::ostream& log) {
  if (!std::ifstream(path)) {
    RunResult r;
    r.exit_code = kExitIo;
    r.diagnostic = fmt::format("{}: cannot open scenario file", path.string());
    return r;
  }
  try {
    return run_scenario(Scenario::load(path), options, log);
  } catch (const ScenarioParseError& e) {
    RunResult r;
    r.exit_code = kExitParse;
    r.diagnostic = e.what();
    return r;
  }
}

}  // namespace retmap
