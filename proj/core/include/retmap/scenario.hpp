#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "retmap/domain.hpp"

namespace retmap {

/// Parse or validation failure with a 1-based source position.
class ScenarioParseError : public std::runtime_error {
 public:
  ScenarioParseError(std::string source, int line, int column, const std::string& message);

  const std::string& source() const noexcept { return source_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string source_;
  int line_;
  int column_;
};

struct ScenarioEntry {
  std::string key;
  std::string value;
  int line = 0;
  /// Column of the first character of the value.
  int value_column = 0;
};

/// Flat `key = value` scenario. Blank lines and `#` comments are ignored;
/// keys are dotted identifiers (core.kind, field.eps, orbit.theta, ...).
class Scenario {
 public:
  static Scenario parse(std::istream& in, const std::string& source = "<input>");
  static Scenario load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  const std::vector<ScenarioEntry>& entries() const { return entries_; }
  bool has(const std::string& key) const { return index_.count(key) > 0; }
  const ScenarioEntry* find(const std::string& key) const;

  std::string name() const { return get_string("name"); }
  std::string task() const { return get_string("task"); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;
  std::vector<double> get_list(const std::string& key, std::vector<double> fallback) const;

  /// Error located at the value of `key` (or at line 1 when absent).
  [[noreturn]] void fail(const std::string& key, const std::string& message) const;

 private:
  std::string source_;
  std::vector<ScenarioEntry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// Checks keys, task name and every referenced parameter; throws
/// ScenarioParseError on the first problem.
void validate_scenario(const Scenario& s);

ConvexCore build_core(const Scenario& s);
/// Field with field.eps replaced by `eps` when given.
ThicknessField build_field(const Scenario& s, const ConvexCore& core, std::optional<double> eps = std::nullopt);
RadialDomain build_domain(const Scenario& s, std::optional<double> eps = std::nullopt);

inline const std::vector<std::string>& scenario_tasks() {
  static const std::vector<std::string> tasks = {"orbit",       "fixed_points", "linearize", "expansion_sweep",
                                                 "reconstruct", "scaling",      "basins",    "admissibility"};
  return tasks;
}

}  // namespace retmap
