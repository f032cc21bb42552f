#pragma once

#include "conorbit/scenario.hpp"

#include <json.hpp>

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace conorbit {

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

struct RunResult {
  /// 0 all checks passed, 1 a check failed, 2 configuration error.
  int exit_code = 0;
  nlohmann::ordered_json verdict;
  /// Relative file name -> contents, written together at the end of a run.
  std::map<std::string, std::string> files;
};

RunResult run_config(const RunConfig& rc, std::ostream& log);

/// Parse, validate and run a config file; writes the artifacts into the output directory.
RunResult run_scenario_file(const std::string& file, const RunOptions& options, std::ostream& log);

void write_artifacts(const std::string& out_dir, const RunResult& result);

// ---- reproduction fixtures -----------------------------------------------------------

/// How an expected value is known: a closed form stated in the source material,
/// an elementary identity, or an independent computation.
enum class Provenance { reference, trivial, derived };

std::string to_string(Provenance p);

struct ReproContext {
  int threads = 1;
  std::uint64_t seed = 1;
};

struct FixtureCheck {
  std::string what;
  double value = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

struct FixtureOutcome {
  std::vector<FixtureCheck> checks;
  std::string detail;
  bool passed() const;
};

struct ReproTarget {
  std::string name;
  std::string claim;
  Provenance provenance = Provenance::reference;
  /// Short description of where the expected value comes from.
  std::string anchor;
  std::function<FixtureOutcome(const ReproContext&)> run;
};

const std::vector<ReproTarget>& repro_targets();

/// Fixture rows missing a provenance anchor or claim (must be empty).
std::vector<std::string> incomplete_fixtures();

/// Run one fixture (or all when name is empty); unknown names are configuration errors.
RunResult reproduce_suite(const std::string& name, const ReproContext& ctx, std::ostream& log);

// ---- shared computations -------------------------------------------------------------

struct ComponentSolve {
  IVec2 label{0, 0};
  SolveReport report;
};

/// Minimize the torus example at energy k in the components reached with Q1 lifted by
/// (0, m) for each m in `shifts`.
std::vector<ComponentSolve> supercritical_components(double k, int segments,
                                                     const std::vector<int>& shifts,
                                                     const ReproContext& ctx);

}  // namespace conorbit
