#pragma once

#include "conorbit/critical.hpp"

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace conorbit {

/// Configuration problem with the dotted key it concerns.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Textual boundary description as it appears in configs.
struct BoundaryText {
  std::string kind = "point";  // point | circle | hline | vline
  double x = 0.0;
  double y = 0.0;
  double r = 0.0;

  BoundarySpec build() const;
  std::string describe() const;
};

/// Known values of a scenario that are not estimated (recorded for audits).
struct ScenarioFacts {
  std::map<std::string, double> values;
  std::string note;
};

struct Scenario {
  std::string name;
  std::string description;
  std::string model_id = "torus_magnetic";
  ModelParams params;
  BoundaryText q0, q1;
  std::optional<Vec2> anchor;
  double epsilon = 0.1;
  double k = 0.5;
  std::vector<double> k_grid;
  ScenarioFacts facts;

  ModelPtr model() const { return make_model(model_id, params); }
  PathSpace space() const { return PathSpace::open(q0.build(), q1.build()); }
};

const std::vector<Scenario>& builtin_scenarios();
/// Throws ConfigError for unknown names.
const Scenario& builtin_scenario(const std::string& name);

// ---- config files ---------------------------------------------------------------

enum class Task { minimize, mountain_pass, struwe_scan, brackets, chain_audit, no_connection, reproduce };

std::string to_string(Task task);
Task parse_task(const std::string& text);

/// Flat key = value document; '#' starts a comment.
struct ConfigDoc {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  static ConfigDoc parse(const std::string& text);
  static ConfigDoc load(const std::string& file);
};

struct Expectations {
  std::optional<double> action;
  double tol = 1e-6;
  std::optional<std::string> status;
  std::optional<std::string> verdict;
  /// Values that must lie inside the bracket of the same name.
  std::map<std::string, double> contains;
  std::optional<double> max_width;
};

struct RunConfig {
  Task task = Task::minimize;
  Scenario scenario;
  std::string reproduce_name;
  Vec2 component = Vec2::Zero();
  MinimizeConfig solver;
  StringConfig string;
  BracketConfig bracket;
  KnConfig kn;
  Expectations expect;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";
};

struct SchemaEntry {
  std::string key;
  std::string type;
  std::string tasks;
  std::string description;
};

/// Every accepted key; `model.<param>` stands for the catalog parameters of the model.
const std::vector<SchemaEntry>& config_schema();

/// Validate and convert; unknown keys, bad values and missing task fields raise ConfigError.
RunConfig build_run_config(const ConfigDoc& doc);

/// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& key, const std::string& text);

}  // namespace conorbit
