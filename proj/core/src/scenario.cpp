#include "retmap/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "retmap/error.hpp"

namespace retmap {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_plain_number(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

// number | [k*]pi[/n] | -[k*]pi[/n]
bool parse_number(std::string_view s, double& out) {
  s = trim(s);
  if (parse_plain_number(s, out)) return true;
  double sign = 1.0;
  if (!s.empty() && s.front() == '-') {
    sign = -1.0;
    s.remove_prefix(1);
  }
  const auto pi_at = s.find("pi");
  if (pi_at == std::string_view::npos) return false;
  double factor = 1.0;
  if (pi_at > 0) {
    std::string_view head = trim(s.substr(0, pi_at));
    if (head.empty() || head.back() != '*') return false;
    head.remove_suffix(1);
    if (!parse_plain_number(head, factor)) return false;
  }
  double divisor = 1.0;
  std::string_view tail = trim(s.substr(pi_at + 2));
  if (!tail.empty()) {
    if (tail.front() != '/') return false;
    tail.remove_prefix(1);
    if (!parse_plain_number(tail, divisor) || divisor == 0.0) return false;
  }
  out = sign * factor * std::numbers::pi / divisor;
  return true;
}

const std::set<std::string>& common_keys() {
  static const std::set<std::string> keys = {
      "name",       "task",       "description", "rng_seed",     "output_dir",  "core.kind",
      "core.radius", "core.axes", "field.kind",  "field.d0",     "field.eps",   "field.coeffs",
      "field.axis", "field.modes", "field.scale", "threads"};
  return keys;
}

const std::map<std::string, std::set<std::string>>& task_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"orbit", {"orbit.theta", "orbit.phi", "orbit.max_iters", "orbit.tol", "orbit.audit_samples"}},
      {"fixed_points", {"fixed_points.n_seeds", "fixed_points.tol", "fixed_points.max_iters"}},
      {"linearize", {"linearize.theta", "linearize.phi", "linearize.h", "linearize.tol", "linearize.polish"}},
      {"expansion_sweep", {"expansion.eps", "expansion.theta", "expansion.phi", "expansion.model"}},
      {"reconstruct",
       {"reconstruct.n_seeds", "reconstruct.tol", "reconstruct.samples", "reconstruct.alpha_mode",
        "reconstruct.alpha", "reconstruct.alpha_sweep", "reconstruct.h", "reconstruct.max_fixed_points"}},
      {"scaling", {"scaling.lambda", "scaling.samples", "scaling.equivalence", "scaling.equivalence_seeds"}},
      {"basins", {"basins.n_seeds", "basins.tol", "basins.max_iters", "basins.link_radius"}},
      {"admissibility", {"admissibility.grid_size"}},
  };
  return keys;
}

}  // namespace

ScenarioParseError::ScenarioParseError(std::string source, int line, int column, const std::string& message)
    : std::runtime_error(fmt::format("{}:{}:{}: {}", source, line, column, message)),
      source_(std::move(source)),
      line_(line),
      column_(column) {}

Scenario Scenario::parse(std::istream& in, const std::string& source) {
  Scenario s;
  s.source_ = source;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;

    const auto eq = line.find('=');
    const auto first = line.find_first_not_of(" \t");
    if (eq == std::string_view::npos) {
      throw ScenarioParseError(source, line_no, static_cast<int>(first) + 1, "expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ScenarioParseError(source, line_no, static_cast<int>(first) + 1, "missing key");
    for (std::size_t i = 0; i < key.size(); ++i) {
      const char ch = key[i];
      if (!(std::islower(static_cast<unsigned char>(ch)) || std::isdigit(static_cast<unsigned char>(ch)) ||
            ch == '_' || ch == '.')) {
        throw ScenarioParseError(source, line_no, static_cast<int>(first + i) + 1,
                                 fmt::format("invalid character '{}' in key", ch));
      }
    }
    const std::string_view after = line.substr(eq + 1);
    const auto vstart = after.find_first_not_of(" \t");
    const std::string_view value = trim(after);
    const int value_col = static_cast<int>(eq + 1 + (vstart == std::string_view::npos ? 0 : vstart)) + 1;
    if (value.empty()) throw ScenarioParseError(source, line_no, value_col, fmt::format("empty value for '{}'", key));
    if (s.index_.count(std::string(key))) {
      throw ScenarioParseError(source, line_no, static_cast<int>(first) + 1, fmt::format("duplicate key '{}'", key));
    }
    s.index_[std::string(key)] = s.entries_.size();
    s.entries_.push_back(ScenarioEntry{std::string(key), std::string(value), line_no, value_col});
  }
  return s;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioParseError(path.string(), 0, 0, "cannot open scenario file");
  return parse(in, path.string());
}

const ScenarioEntry* Scenario::find(const std::string& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void Scenario::fail(const std::string& key, const std::string& message) const {
  if (const ScenarioEntry* e = find(key)) throw ScenarioParseError(source_, e->line, e->value_column, message);
  throw ScenarioParseError(source_, 1, 1, message);
}

std::string Scenario::get_string(const std::string& key) const {
  const ScenarioEntry* e = find(key);
  if (!e) fail(key, fmt::format("missing required key '{}'", key));
  return e->value;
}

std::string Scenario::get_string(const std::string& key, const std::string& fallback) const {
  const ScenarioEntry* e = find(key);
  return e ? e->value : fallback;
}

double Scenario::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  double out = 0.0;
  if (!parse_number(v, out)) fail(key, fmt::format("'{}' is not a number", v));
  return out;
}

double Scenario::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t Scenario::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::int64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) fail(key, fmt::format("'{}' is not an integer", v));
  return out;
}

std::int64_t Scenario::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool Scenario::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(key, fmt::format("'{}' is not a boolean", v));
}

std::vector<double> Scenario::get_list(const std::string& key) const {
  const std::string v = get_string(key);
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double x = 0.0;
    if (!parse_number(item, x)) fail(key, fmt::format("list item '{}' is not a number", std::string(trim(item))));
    out.push_back(x);
  }
  return out;
}

std::vector<double> Scenario::get_list(const std::string& key, std::vector<double> fallback) const {
  return has(key) ? get_list(key) : fallback;
}

ConvexCore build_core(const Scenario& s) {
  const std::string kind = s.get_string("core.kind");
  try {
    if (kind == "circle") return ConvexCore::circle(s.get_double("core.radius", 1.0));
    if (kind == "sphere") return ConvexCore::sphere(s.get_double("core.radius", 1.0));
    if (kind == "ellipsoid") {
      const std::vector<double> ax = s.get_list("core.axes");
      if (ax.size() != 3) s.fail("core.axes", "ellipsoid needs three semi-axes");
      return ConvexCore::ellipsoid(ax[0], ax[1], ax[2]);
    }
  } catch (const GeometryError& e) {
    s.fail(s.has("core.axes") ? "core.axes" : "core.radius", e.what());
  }
  s.fail("core.kind", fmt::format("unknown core kind '{}' (circle, sphere, ellipsoid)", kind));
}

ThicknessField build_field(const Scenario& s, const ConvexCore& core, std::optional<double> eps_override) {
  const std::string kind = s.get_string("field.kind");
  const double d0 = s.get_double("field.d0");
  const auto eps = [&] { return eps_override ? *eps_override : s.get_double("field.eps"); };
  const auto axis = [&] {
    const std::vector<double> a = s.get_list("field.axis", {0.0, 0.0, 1.0});
    if (a.size() != 3) s.fail("field.axis", "axis needs three components");
    return AmbientVector(a[0], a[1], a[2]);
  };
  std::optional<ThicknessField> field;
  try {
    if (kind == "constant") {
      field = ThicknessField::constant(core, d0);
    } else if (kind == "zonal_legendre") {
      field = ThicknessField::zonal_legendre(core, d0, eps(), axis());
    } else if (kind == "zonal_series") {
      field = ThicknessField::zonal_series(core, d0, eps(), s.get_list("field.coeffs"), axis());
    } else if (kind == "fourier_2d") {
      std::vector<FourierMode> modes;
      const std::string raw = s.get_string("field.modes");
      std::stringstream ss(raw);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        double k = 0.0;
        double amp = 0.0;
        if (colon == std::string::npos || !parse_plain_number(item.substr(0, colon), k) ||
            !parse_number(item.substr(colon + 1), amp) || k != std::floor(k) || k < 0) {
          s.fail("field.modes", fmt::format("mode '{}' is not 'k:amplitude'", std::string(trim(item))));
        }
        modes.push_back({static_cast<int>(k), amp});
      }
      // amplitudes are multiplied by field.eps when it is given
      const double scale = eps_override ? *eps_override : s.get_double("field.eps", 1.0);
      for (auto& m : modes) m.amplitude *= scale;
      field = ThicknessField::fourier_2d(core, d0, modes);
    } else {
      s.fail("field.kind",
             fmt::format("unknown field kind '{}' (constant, zonal_legendre, zonal_series, fourier_2d)", kind));
    }
    if (s.has("field.scale")) field = ThicknessField::scaled(s.get_double("field.scale"), *field);
  } catch (const GeometryError& e) {
    s.fail("field.kind", e.what());
  }
  return *field;
}

RadialDomain build_domain(const Scenario& s, std::optional<double> eps) {
  const ConvexCore core = build_core(s);
  return RadialDomain(build_field(s, core, eps));
}

void validate_scenario(const Scenario& s) {
  const std::string task = s.task();
  const auto& tasks = task_keys();
  const auto it = tasks.find(task);
  if (it == tasks.end()) {
    s.fail("task", fmt::format("unknown task '{}'", task));
  }
  for (const auto& e : s.entries()) {
    if (common_keys().count(e.key) || it->second.count(e.key)) continue;
    throw ScenarioParseError(s.source(), e.line, 1, fmt::format("unknown key '{}' for task '{}'", e.key, task));
  }
  if (s.name().empty()) s.fail("name", "name must not be empty");
  for (char ch : s.name()) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) {
      s.fail("name", "name may only contain letters, digits, '_' and '-'");
    }
  }
  if (s.has("rng_seed") && s.get_int("rng_seed") < 0) s.fail("rng_seed", "rng_seed must be nonnegative");

  const ConvexCore core = build_core(s);
  const ThicknessField field = build_field(s, core);
  (void)field;

  const auto positive = [&](const std::string& key) {
    if (s.has(key) && !(s.get_double(key) > 0.0)) s.fail(key, fmt::format("'{}' must be positive", key));
  };
  const auto positive_int = [&](const std::string& key) {
    if (s.has(key) && s.get_int(key) <= 0) s.fail(key, fmt::format("'{}' must be a positive integer", key));
  };
  const auto require = [&](const std::string& key) {
    if (!s.has(key)) s.fail(key, fmt::format("task '{}' needs '{}'", task, key));
  };

  if (task == "orbit") {
    require("orbit.theta");
    s.get_double("orbit.theta");
    s.get_double("orbit.phi", 0.0);
    positive_int("orbit.max_iters");
    positive("orbit.tol");
    if (s.has("orbit.audit_samples") && s.get_int("orbit.audit_samples") < 0) {
      s.fail("orbit.audit_samples", "audit sample count must be nonnegative");
    }
  } else if (task == "fixed_points") {
    positive_int("fixed_points.n_seeds");
    positive("fixed_points.tol");
    positive_int("fixed_points.max_iters");
  } else if (task == "linearize") {
    require("linearize.theta");
    s.get_double("linearize.theta");
    s.get_double("linearize.phi", 0.0);
    positive("linearize.h");
    positive("linearize.tol");
    s.get_bool("linearize.polish", false);
  } else if (task == "expansion_sweep") {
    require("expansion.eps");
    const std::vector<double> eps = s.get_list("expansion.eps");
    if (eps.size() < 4) s.fail("expansion.eps", "a slope fit needs at least four epsilons");
    for (double e : eps) {
      if (!(e > 0.0)) s.fail("expansion.eps", "epsilons must be positive");
    }
    require("expansion.theta");
    s.get_double("expansion.theta");
    s.get_double("expansion.phi", 0.0);
    const std::string model = s.get_string("expansion.model", "nominal");
    if (model != "nominal" && model != "ray_tilt") s.fail("expansion.model", "model must be nominal or ray_tilt");
  } else if (task == "reconstruct") {
    positive_int("reconstruct.n_seeds");
    positive("reconstruct.tol");
    positive("reconstruct.h");
    positive_int("reconstruct.max_fixed_points");
    if (s.has("reconstruct.samples") && s.get_int("reconstruct.samples") < 0) {
      s.fail("reconstruct.samples", "sample count must be nonnegative");
    }
    const std::string mode = s.get_string("reconstruct.alpha_mode", "known");
    if (mode == "assumed") {
      require("reconstruct.alpha");
      positive("reconstruct.alpha");
    } else if (mode == "swept") {
      require("reconstruct.alpha_sweep");
      for (double a : s.get_list("reconstruct.alpha_sweep")) {
        if (!(a > 0.0)) s.fail("reconstruct.alpha_sweep", "alpha values must be positive");
      }
    } else if (mode != "known") {
      s.fail("reconstruct.alpha_mode", "alpha_mode must be known, assumed or swept");
    }
  } else if (task == "scaling") {
    require("scaling.lambda");
    positive("scaling.lambda");
    positive_int("scaling.samples");
    s.get_bool("scaling.equivalence", false);
    positive_int("scaling.equivalence_seeds");
  } else if (task == "basins") {
    positive_int("basins.n_seeds");
    positive("basins.tol");
    positive_int("basins.max_iters");
    positive("basins.link_radius");
  } else if (task == "admissibility") {
    positive_int("admissibility.grid_size");
  }
}

}  // namespace retmap
