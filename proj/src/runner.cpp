#include "conorbit/runner.hpp"

#include "conorbit/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace conorbit {

namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string path_csv(const DiscretePath& p) {
  std::ostringstream out;
  write_path_csv(out, p);
  return out.str();
}

json check_json(const std::string& name, bool passed, json detail = json::object()) {
  json j;
  j["name"] = name;
  j["passed"] = passed;
  for (auto& [k, v] : detail.items()) j[k] = v;
  return j;
}

json report_json(const SolveReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["k"] = r.k;
  j["action"] = r.action.A;
  j["T"] = r.path.T;
  j["N"] = r.path.segments();
  j["iterations"] = r.iterations;
  j["grad_norm"] = r.grad_norm;
  j["el_residual"] = r.residuals.el_residual;
  j["conormal_0"] = r.residuals.conormal_0;
  j["conormal_1"] = r.residuals.conormal_1;
  j["shooting_gap"] = r.residuals.shooting_gap;
  j["energy_drift"] = r.residuals.energy_drift;
  j["energy_mean_mismatch"] = std::abs(r.action.energy_mean - r.k);
  j["bound_violations"] = r.bound_violations;
  j["trust_region_hit"] = r.trust_region_hit;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

/// Records checks and derives the exit code.
struct Verdict {
  json checks = json::array();
  bool ok = true;

  void add(const std::string& name, bool passed, json detail = json::object()) {
    checks.push_back(check_json(name, passed, std::move(detail)));
    ok = ok && passed;
  }
};

bool same_word(std::string a, std::string b) {
  auto lower = [](std::string& s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  };
  lower(a);
  lower(b);
  return a == b;
}

void finish(RunResult& res, const RunConfig& rc, Verdict& v, json extra) {
  res.verdict["task"] = to_string(rc.task);
  res.verdict["scenario"] = rc.scenario.name;
  res.verdict["seed"] = rc.seed;
  for (auto& [k, val] : extra.items()) res.verdict[k] = val;
  res.verdict["checks"] = v.checks;
  res.verdict["passed"] = v.ok;
  res.exit_code = v.ok ? 0 : 1;
  res.files["verdict.json"] = res.verdict.dump(2) + "\n";
}

void expect_report(const RunConfig& rc, Verdict& v, const SolveReport& r) {
  if (rc.expect.action) {
    double err = std::abs(r.action.A - *rc.expect.action);
    v.add("expected_action", err <= rc.expect.tol,
          {{"value", r.action.A}, {"expected", *rc.expect.action}, {"tolerance", rc.expect.tol}});
  }
  if (rc.expect.status) {
    v.add("expected_status", same_word(to_string(r.status), *rc.expect.status),
          {{"value", to_string(r.status)}, {"expected", *rc.expect.status}});
  }
}

RunResult run_minimize(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  PathSpace space = sc.space();
  MinimizeConfig cfg = rc.solver;
  if (cfg.v_max <= 0.0) cfg.v_max = 10.0 * std::sqrt(2.0 * std::max(sc.k, 1e-12));
  auto inits = random_chords(*model, space, sc.k, rc.component, cfg.multistart, cfg.N, rc.seed);
  MultistartResult ms = multistart_minimize(*model, space, sc.k, inits, cfg);
  std::vector<std::string> labels{"best"};
  std::vector<SolveReport> reports{ms.best};
  int violations = 0;
  for (std::size_t i = 0; i < ms.runs.size(); ++i) {
    labels.push_back("run" + std::to_string(i));
    reports.push_back(ms.runs[i]);
    violations += ms.runs[i].bound_violations;
  }
  std::ostringstream summary;
  write_solve_summary_csv(summary, labels, reports);
  res.files["summary.csv"] = summary.str();
  res.files["path_best.csv"] = path_csv(ms.best.path);
  {
    const DiscretePath& p = ms.best.path;
    auto [p0, p1] = endpoint_momenta(*model, p);
    (void)p1;
    FlowState s0{p.nodes[0], model->hamiltonian_dp(p.nodes[0], p0), 0.0};
    Trajectory traj = integrate_el(*model, s0, p.T, p.T / std::max(2000, 8 * p.segments()));
    std::ostringstream out;
    write_trajectory_csv(out, *model, traj);
    res.files["trajectory_best.csv"] = out.str();
  }
  v.add("action_lower_bound", violations == 0, {{"violations", violations}});
  expect_report(rc, v, ms.best);
  log << "minimize: " << to_string(ms.best.status) << " A=" << fmt(ms.best.action.A)
      << " T=" << fmt(ms.best.path.T) << "\n";
  finish(res, rc, v, {{"best", report_json(ms.best)}});
  return res;
}

json mountain_json(const MountainPassReport& r) {
  json j;
  j["status"] = to_string(r.status);
  j["minimax"] = r.minimax;
  j["alpha"] = r.alpha;
  j["alpha_local"] = r.alpha_local;
  j["T0"] = r.T0;
  j["head_action"] = r.head_action;
  j["tail_action"] = r.tail_action;
  j["residual"] = r.residual;
  j["iterations"] = r.iterations;
  j["class_invariant"] = r.class_invariant;
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

RunResult run_mountain_pass(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  PathSpace space = sc.space();
  MountainPassReport r = mountain_pass(*model, space, *sc.anchor, sc.k, rc.string);
  if (r.status != SolveStatus::not_applicable) {
    std::ostringstream summary;
    write_solve_summary_csv(summary, {"saddle"}, {r.saddle});
    res.files["summary.csv"] = summary.str();
    res.files["path_saddle.csv"] = path_csv(r.saddle.path);
    for (std::size_t i = 0; i < r.string.beads.size(); ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "bead_%02zu.csv", i);
      res.files[name] = path_csv(r.string.beads[i]);
    }
    v.add("class_invariant", r.class_invariant);
    if (r.status == SolveStatus::converged) {
      v.add("minimax_above_alpha", r.minimax >= r.alpha - 1e-9,
            {{"minimax", r.minimax}, {"alpha", r.alpha}});
      v.add("minimax_above_local_alpha", r.minimax >= r.alpha_local - 1e-9,
            {{"minimax", r.minimax}, {"alpha_local", r.alpha_local}});
    }
  }
  if (rc.expect.status) {
    v.add("expected_status", same_word(to_string(r.status), *rc.expect.status),
          {{"value", to_string(r.status)}, {"expected", *rc.expect.status}});
  }
  if (rc.expect.action) {
    v.add("expected_action", std::abs(r.minimax - *rc.expect.action) <= rc.expect.tol,
          {{"value", r.minimax}, {"expected", *rc.expect.action}});
  }
  log << "mountain_pass: " << to_string(r.status) << " minimax=" << fmt(r.minimax)
      << " alpha=" << fmt(r.alpha) << "\n";
  finish(res, rc, v, {{"mountain_pass", mountain_json(r)}});
  return res;
}

RunResult run_struwe(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  PathSpace space = sc.space();
  MinimaxCurve curve = struwe_scan(*model, space, *sc.anchor, sc.k_grid, rc.string);
  std::ostringstream out;
  write_minimax_csv(out, curve);
  res.files["minimax.csv"] = out.str();
  json failed = json::array();
  for (const auto& row : curve.rows) {
    if (!row.converged) failed.push_back(row.k);
  }
  v.add("monotone", curve.worst_decrease <= 1e-6, {{"worst_decrease", curve.worst_decrease}});
  log << "struwe_scan: " << curve.rows.size() << " points, worst decrease "
      << fmt(curve.worst_decrease) << ", " << failed.size() << " flagged\n";
  finish(res, rc, v,
         {{"flagged_not_converged", failed}, {"flagged_difference_quotient", curve.suspect_k}});
  return res;
}

/// Known values recorded with a scenario, used where estimators do not apply.
std::optional<double> fact(const Scenario& sc, const std::string& key) {
  auto it = sc.facts.values.find(key);
  if (it == sc.facts.values.end()) return std::nullopt;
  return it->second;
}

void add_bracket(RunResult& res, std::ostringstream& csv, const CriticalBracket& b) {
  std::string lower_file, upper_file;
  if (b.lower_witness) {
    lower_file = "witness_lower_" + b.name + ".csv";
    res.files[lower_file] = path_csv(*b.lower_witness);
  }
  if (b.upper_witness) {
    upper_file = "witness_upper_" + b.name + ".csv";
    std::ostringstream u;
    write_grid_function_csv(u, *b.upper_witness);
    res.files[upper_file] = u.str();
  }
  write_bracket_csv_row(csv, b, lower_file, upper_file);
}

RunResult run_brackets(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  BoundarySpec q0 = sc.q0.build(), q1 = sc.q1.build();
  std::vector<CriticalBracket> brackets;
  std::ostringstream csv;
  write_bracket_csv_header(csv);
  if (model->chart().periodic()) {
    brackets.push_back(bracket_critical(*model, CriticalKind::c, rc.bracket));
    brackets.push_back(bracket_critical(*model, CriticalKind::cu_c0, rc.bracket));
    brackets.push_back(bracket_critical(*model, CriticalKind::c_pair, rc.bracket, &q0, &q1));
    if (sc.anchor) {
      PathSpace space = sc.space();
      brackets.push_back(k_N_estimate(*model, space, *sc.anchor, rc.kn));
    }
  } else {
    for (const char* name : {"c", "c_u", "c_pair"}) {
      if (auto f = fact(sc, name)) {
        CriticalBracket b;
        b.name = name;
        b.lower = b.upper = *f;
        b.method = "recorded";
        brackets.push_back(b);
      }
    }
  }
  CriticalBracket obstruction;
  obstruction.name = "k_obstruction";
  obstruction.lower = obstruction.upper = k_obstruction(*model, q0, q1);
  obstruction.method = "conormal_sampling+brent";
  brackets.push_back(obstruction);
  for (const auto& b : brackets) {
    add_bracket(res, csv, b);
    v.add("bracket_" + b.name + "_ordered", b.lower <= b.upper + 1e-6,
          {{"lower", b.lower}, {"upper", b.upper}});
  }
  // the pair value cannot sit below the obstruction
  for (const auto& b : brackets) {
    if (b.name == "c_pair") {
      v.add("obstruction_below_pair", obstruction.lower <= b.upper + rc.bracket.tol,
            {{"obstruction", obstruction.lower}, {"c_pair_upper", b.upper}});
    }
  }
  json kom = nullptr;
  if (!intersect(model->chart(), q0, q1).empty()) {
    double cpair = std::numeric_limits<double>::infinity();
    for (const auto& b : brackets) {
      if (b.name == "c_pair") cpair = b.upper;
    }
    kom = k_omega(*model, q0, q1, {}, cpair);
  }
  for (const auto& [name, value] : rc.expect.contains) {
    bool found = false;
    for (const auto& b : brackets) {
      if (b.name != name) continue;
      found = true;
      v.add("contains_" + name, b.lower <= value + 1e-9 && value <= b.upper + 1e-9,
            {{"value", value}, {"lower", b.lower}, {"upper", b.upper}});
      if (rc.expect.max_width) {
        v.add("width_" + name, b.width() <= *rc.expect.max_width,
              {{"width", b.width()}, {"max", *rc.expect.max_width}});
      }
    }
    if (!found) v.add("contains_" + name, false, {{"error", "no such bracket"}});
  }
  res.files["brackets.csv"] = csv.str();
  json list = json::array();
  for (const auto& b : brackets) {
    list.push_back({{"name", b.name},
                    {"lower", b.lower},
                    {"upper", b.upper},
                    {"method", b.method},
                    {"soft_upper", b.soft_upper},
                    {"note", b.note}});
    log << b.name << ": [" << fmt(b.lower) << ", " << fmt(b.upper) << "] " << b.method << "\n";
  }
  finish(res, rc, v, {{"brackets", list}, {"k_omega", kom}});
  return res;
}

double obstruction_or_none(const SurfaceModel& model, const BoundarySpec& q0,
                           const BoundarySpec& q1) {
  try {
    return k_obstruction(model, q0, q1);
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

RunResult run_chain(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  BoundarySpec q0 = sc.q0.build(), q1 = sc.q1.build();
  ChainReport report;
  if (model->chart().periodic()) {
    report = chain_audit(*model, q0, q1, rc.bracket).report;
  } else {
    double e = fact(sc, "e0").value_or(0.0);
    double cu = fact(sc, "c_u").value_or(e);
    double cp = fact(sc, "c_pair").value_or(cu);
    double c = fact(sc, "c").value_or(cp);
    double t = model->theta_sup();
    double top = e + t * t / (4.0 * model->convexity());
    report = audit_chain({{"e0", e, e},
                          {"c_u", cu, cu},
                          {"c_pair", cp, cp},
                          {"c", c, c},
                          {"k0", c, top},
                          {"e0+theta^2/4a", top, top}},
                         obstruction_or_none(*model, q0, q1));
  }
  std::ostringstream csv;
  csv << "name,lower,upper\n";
  for (const auto& l : report.links) csv << l.name << ',' << fmt(l.lower) << ',' << fmt(l.upper) << '\n';
  res.files["chain.csv"] = csv.str();
  v.add("chain", report.passed, {{"failure", report.failure}});
  log << "chain_audit: " << (report.passed ? "PASS" : "FAIL " + report.failure) << "\n";
  finish(res, rc, v, {{"obstruction", std::isfinite(report.obstruction) ? json(report.obstruction) : json(nullptr)}});
  return res;
}

RunResult run_no_connection(const RunConfig& rc, std::ostream& log) {
  RunResult res;
  Verdict v;
  const Scenario& sc = rc.scenario;
  ModelPtr model = sc.model();
  ConnectionCertificate c =
      no_connection_certificate(*model, {sc.q0.x, sc.q0.y}, {sc.q1.x, sc.q1.y}, sc.k);
  if (rc.expect.verdict) {
    v.add("expected_verdict", same_word(to_string(c.verdict), *rc.expect.verdict),
          {{"value", to_string(c.verdict)}, {"expected", *rc.expect.verdict}});
  }
  log << "no_connection: " << to_string(c.verdict) << (c.contact ? " (contact)" : "") << "\n";
  finish(res, rc, v,
         {{"verdict", to_string(c.verdict)},
          {"contact", c.contact},
          {"range0", {c.range0[0], c.range0[1]}},
          {"range1", {c.range1[0], c.range1[1]}}});
  return res;
}

}  // namespace

RunResult run_config(const RunConfig& rc, std::ostream& log) {
  switch (rc.task) {
    case Task::minimize:
      return run_minimize(rc, log);
    case Task::mountain_pass:
      return run_mountain_pass(rc, log);
    case Task::struwe_scan:
      return run_struwe(rc, log);
    case Task::brackets:
      return run_brackets(rc, log);
    case Task::chain_audit:
      return run_chain(rc, log);
    case Task::no_connection:
      return run_no_connection(rc, log);
    case Task::reproduce: {
      ReproContext ctx{rc.threads, rc.seed};
      return reproduce_suite(rc.reproduce_name, ctx, log);
    }
  }
  throw ConfigError("task", "unhandled task");
}

RunResult run_scenario_file(const std::string& file, const RunOptions& options, std::ostream& log) {
  RunResult res;
  RunConfig rc;
  try {
    ConfigDoc doc = ConfigDoc::load(file);
    rc = build_run_config(doc);
    if (options.seed) rc.seed = *options.seed;
    if (options.threads) rc.threads = *options.threads;
    if (options.out_dir) rc.out_dir = *options.out_dir;
    rc.solver.seed = rc.seed;
    rc.solver.threads = rc.threads;
    rc.string.head.threads = rc.threads;
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.verdict["error"] = e.what();
    res.verdict["key"] = e.key();
    log << "config error: " << e.what() << "\n";
    return res;
  }
  try {
    res = run_config(rc, log);
  } catch (const ConfigError& e) {
    res.exit_code = 2;
    res.verdict["error"] = e.what();
    log << "config error: " << e.what() << "\n";
    return res;
  } catch (const std::invalid_argument& e) {
    res.exit_code = 2;
    res.verdict["error"] = e.what();
    log << "invalid scenario: " << e.what() << "\n";
    return res;
  }
  write_artifacts(rc.out_dir, res);
  return res;
}

void write_artifacts(const std::string& out_dir, const RunResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [name, contents] : result.files) {
    std::ofstream out(fs::path(out_dir) / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + name + " in " + out_dir);
    out << contents;
  }
}

// ---- reproduction fixtures -------------------------------------------------------------

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::reference:
      return "reference";
    case Provenance::trivial:
      return "trivial";
    case Provenance::derived:
      return "derived";
  }
  return "unknown";
}

bool FixtureOutcome::passed() const {
  if (checks.empty()) return false;
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

namespace {

FixtureCheck near(const std::string& what, double value, double expected, double tol) {
  return {what, value, expected, tol, std::abs(value - expected) <= tol};
}

FixtureCheck holds(const std::string& what, bool ok, double value = 0.0) {
  return {what, value, 0.0, 0.0, ok};
}

FixtureOutcome bracket_fixture(const CriticalBracket& b, double target, double width) {
  FixtureOutcome o;
  o.checks.push_back(holds(b.name + " lower <= target", b.lower <= target + 1e-12, b.lower));
  o.checks.push_back(holds(b.name + " upper >= target", b.upper >= target - 1e-12, b.upper));
  o.checks.push_back({b.name + " width", b.width(), 0.0, width, b.width() <= width});
  return o;
}

/// Independent re-evaluation of a loop certificate at lower + 1e-9.
FixtureCheck witness_check(const SurfaceModel& model, const CriticalBracket& b) {
  if (!b.lower_witness) return holds(b.name + " witness present", false);
  double A = discrete_action(model, *b.lower_witness, b.lower + 1e-9).A;
  return {b.name + " witness action < 0", A, 0.0, 0.0, A < 0.0};
}

std::vector<ReproTarget> make_targets() {
  std::vector<ReproTarget> t;
  t.push_back({"torus_path_action", "backward unit-speed loop at y = 1/2 has action k - 1/2",
               Provenance::reference, "action of the horizontal loop a on the magnetic torus",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("torus_magnetic");
                 for (double k : {0.1, 0.3, 0.45}) {
                   for (int n : {1, 7, 64}) {
                     double A = discrete_action(*m, torus_backward_loop(n), k).A;
                     o.checks.push_back(near("k=" + fmt(k) + " N=" + std::to_string(n), A, k - 0.5, 1e-12));
                   }
                 }
                 return o;
               }});
  t.push_back({"ladder_loops", "ladder loop action n (2 sqrt(2k) - 1) + sqrt(2k)",
               Provenance::reference, "contractible loops alpha_n winding n times along y = 1/2",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("torus_magnetic");
                 for (double k : {0.045, 0.08, 0.125}) {
                   for (int n = 1; n <= 10; ++n) {
                     o.checks.push_back(near("n=" + std::to_string(n) + " k=" + fmt(k),
                                             ladder_action(*m, n, k), ladder_action_formula(n, k),
                                             1e-10));
                   }
                 }
                 return o;
               }});
  t.push_back({"torus_c", "c(L) = 1/2 on the magnetic torus", Provenance::reference,
               "Mane critical value of the torus example", [](const ReproContext& ctx) {
                 ModelPtr m = make_model("torus_magnetic");
                 BracketConfig cfg;
                 cfg.probe.threads = ctx.threads;
                 CriticalBracket b = bracket_critical(*m, CriticalKind::c, cfg);
                 FixtureOutcome o = bracket_fixture(b, 0.5, 0.05);
                 o.checks.push_back(witness_check(*m, b));
                 return o;
               }});
  t.push_back({"torus_cu", "c_u(L) = 1/8 on the magnetic torus", Provenance::reference,
               "universal-cover critical value via u = x/2", [](const ReproContext& ctx) {
                 ModelPtr m = make_model("torus_magnetic");
                 BracketConfig cfg;
                 cfg.probe.threads = ctx.threads;
                 CriticalBracket b = bracket_critical(*m, CriticalKind::cu_c0, cfg);
                 FixtureOutcome o = bracket_fixture(b, 0.125, 0.05);
                 o.checks.push_back(witness_check(*m, b));
                 return o;
               }});
  t.push_back({"conserved_momentum", "I = v_x + psi(y) is conserved", Provenance::reference,
               "integral of motion of the torus example", [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("torus_magnetic");
                 std::mt19937_64 rng(3);
                 std::uniform_real_distribution<double> u(-1.0, 1.0);
                 for (int trial = 0; trial < 4; ++trial) {
                   FlowState s{{0.5 * (u(rng) + 1.0), 0.5 * (u(rng) + 1.0)}, {u(rng), u(rng)}, 0.0};
                   Trajectory tr = integrate_el(*m, s, 10.0, 1e-3);
                   double I0 = torus_conserved_quantity(*m, s.q, s.v), drift = 0.0;
                   for (const auto& st : tr.states) {
                     drift = std::max(drift, std::abs(torus_conserved_quantity(*m, st.q, st.v) - I0));
                   }
                   o.checks.push_back(near("I drift, start " + std::to_string(trial), drift, 0.0, 1e-8));
                 }
                 return o;
               }});
  t.push_back({"no_connection", "no orbit joins (1/2,0) and (1/2,1/2) below k = 1/8",
               Provenance::reference, "interval argument with the conserved momentum",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("torus_magnetic");
                 auto a = no_connection_certificate(*m, {0.5, 0.0}, {0.5, 0.5}, 0.08);
                 auto b = no_connection_certificate(*m, {0.5, 0.0}, {0.5, 0.5}, 0.125);
                 o.checks.push_back(holds("k=0.08 DISJOINT", a.verdict == ConnectionVerdict::disjoint));
                 o.checks.push_back(near("k=0.08 range0 upper", a.range0[1], 0.4, 1e-12));
                 o.checks.push_back(near("k=0.08 range1 lower", a.range1[0], 0.6, 1e-12));
                 o.checks.push_back(holds("k=0.125 OVERLAP with contact",
                                          b.verdict == ConnectionVerdict::overlap && b.contact));
                 return o;
               }});
  t.push_back({"obstruction", "k(L;Q0,Q1) = 1/2 for the point and the line y = 1/2",
               Provenance::reference, "conormal obstruction of the torus example",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 const Scenario& sc = builtin_scenario("torus_example");
                 ModelPtr m = sc.model();
                 o.checks.push_back(near("k_obstruction",
                                         k_obstruction(*m, sc.q0.build(), sc.q1.build()), 0.5, 1e-4));
                 return o;
               }});
  t.push_back({"figure4_kN", "k_N(L) = 1/2 for two contractible circles", Provenance::reference,
               "segment of y = 1/2 joining the circles has action |J|(k - 1/2)",
               [](const ReproContext& ctx) {
                 const Scenario& sc = builtin_scenario("figure4");
                 ModelPtr m = sc.model();
                 KnConfig cfg;
                 cfg.threads = ctx.threads;
                 cfg.seed = ctx.seed;
                 CriticalBracket b = k_N_estimate(*m, sc.space(), *sc.anchor, cfg);
                 FixtureOutcome o = bracket_fixture(b, 0.5, 0.05);
                 o.checks.push_back(witness_check(*m, b));
                 return o;
               }});
  t.push_back({"hyperbolic_length", "length of a hyperbolic circle is 2 pi sinh r",
               Provenance::reference, "circle of radius r in the half-plane", [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("half_plane_horocycle");
                 for (double r : {0.5, 1.0, 2.0}) {
                   o.checks.push_back(near("r=" + fmt(r), hyperbolic_circle(*m, r, 0.5).length,
                                           hyperbolic_length_formula(r), 1e-6));
                 }
                 return o;
               }});
  t.push_back({"hyperbolic_area", "area of a hyperbolic disc is 2 pi (cosh r - 1)",
               Provenance::reference, "disc of radius r in the half-plane", [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("half_plane_horocycle");
                 for (double r : {0.5, 1.0, 2.0}) {
                   o.checks.push_back(near("r=" + fmt(r), hyperbolic_circle(*m, r, 0.5).area,
                                           hyperbolic_area_formula(r), 1e-6));
                 }
                 return o;
               }});
  t.push_back({"hyperbolic_action", "clockwise circle action changes sign only below k = 1/2",
               Provenance::derived, "length and area closed forms combined",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("half_plane_horocycle");
                 o.checks.push_back(near("r=1 k=0.5", hyperbolic_circle(*m, 1.0, 0.5).action_clockwise,
                                         hyperbolic_action_formula(1.0, 0.5), 1e-6));
                 for (double r : {0.5, 1.0, 2.0, 4.0}) {
                   double a = hyperbolic_circle(*m, r, 0.6).action_clockwise;
                   o.checks.push_back(holds("k=0.6 r=" + fmt(r) + " positive", a > 0.0, a));
                 }
                 double neg = hyperbolic_circle(*m, 4.0, 0.45).action_clockwise;
                 o.checks.push_back(holds("k=0.45 r=4 negative", neg < 0.0, neg));
                 return o;
               }});
  t.push_back({"horocycle_orbit", "orbits below energy 1/2 are closed", Provenance::reference,
               "periodic magnetic flow on low energy levels of the half-plane",
               [](const ReproContext&) {
                 FixtureOutcome o;
                 ModelPtr m = make_model("half_plane_horocycle");
                 OrbitClosure c = orbit_closure(*m, {0.0, 1.0}, 0.125, 1e-3, 40.0);
                 o.checks.push_back(near("closure gap", c.gap, 0.0, 1e-4));
                 return o;
               }});
  t.push_back({"flat_geodesic", "flat minimizer between points has action d sqrt(2k)",
               Provenance::trivial, "kinetic free-time action at its optimal time",
               [](const ReproContext& ctx) {
                 FixtureOutcome o;
                 const Scenario& sc = builtin_scenario("flat_points");
                 ModelPtr m = sc.model();
                 MinimizeConfig cfg;
                 cfg.threads = ctx.threads;
                 cfg.multistart = 2;
                 auto inits = random_chords(*m, sc.space(), 0.5, Vec2::Zero(), 2, 64, ctx.seed);
                 MultistartResult r = multistart_minimize(*m, sc.space(), 0.5, inits, cfg);
                 o.checks.push_back(near("action", r.best.action.A, 0.5, 1e-4));
                 o.checks.push_back(near("T", r.best.path.T, 0.5, 1e-4));
                 return o;
               }});
  t.push_back({"supercritical_components", "above k = 1/2 every component carries an orbit",
               Provenance::reference, "global minimizers in each component for k > c",
               [](const ReproContext& ctx) {
                 FixtureOutcome o;
                 auto sols = supercritical_components(0.75, 256, {0, -1, 1}, ctx);
                 std::vector<IVec2> labels;
                 for (const auto& s : sols) {
                   const SolveReport& r = s.report;
                   std::string tag = "component " + to_string(s.label);
                   o.checks.push_back(holds(tag + " converged", r.status == SolveStatus::converged));
                   o.checks.push_back(near(tag + " conormal", r.residuals.conormal_1, 0.0, 1e-5));
                   o.checks.push_back(near(tag + " energy", r.action.energy_mean, 0.75, 1e-5));
                   o.checks.push_back(near(tag + " shooting gap", r.residuals.shooting_gap, 0.0, 1e-3));
                   if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) {
                     labels.push_back(s.label);
                   }
                 }
                 o.checks.push_back(holds("distinct components", labels.size() >= 3,
                                          double(labels.size())));
                 return o;
               }});
  t.push_back({"figure4_mountain_pass", "minimax value above 2 eps sqrt(a k) at k = 1/4",
               Provenance::reference, "mountain-pass geometry near the intersection point",
               [](const ReproContext& ctx) {
                 FixtureOutcome o;
                 const Scenario& sc = builtin_scenario("figure4");
                 ModelPtr m = sc.model();
                 StringConfig cfg;
                 cfg.epsilon = sc.epsilon;
                 cfg.head.threads = ctx.threads;
                 MountainPassReport r = mountain_pass(*m, sc.space(), *sc.anchor, 0.25, cfg);
                 double alpha = 2.0 * sc.epsilon * std::sqrt(0.5 * 0.25);
                 o.checks.push_back(holds("converged", r.status == SolveStatus::converged));
                 o.checks.push_back({"minimax >= alpha", r.minimax, alpha, 0.0, r.minimax >= alpha});
                 o.checks.push_back({"saddle residual", r.residual, 0.0, 1e-4, r.residual <= 1e-4});
                 return o;
               }});
  return t;
}

}  // namespace

const std::vector<ReproTarget>& repro_targets() {
  static const std::vector<ReproTarget> targets = make_targets();
  return targets;
}

std::vector<std::string> incomplete_fixtures() {
  std::vector<std::string> out;
  for (const auto& t : repro_targets()) {
    if (t.anchor.empty() || t.claim.empty() || !t.run) out.push_back(t.name);
  }
  return out;
}

RunResult reproduce_suite(const std::string& name, const ReproContext& ctx, std::ostream& log) {
  RunResult res;
  std::vector<const ReproTarget*> chosen;
  for (const auto& t : repro_targets()) {
    if (name.empty() || t.name == name) chosen.push_back(&t);
  }
  if (chosen.empty()) {
    res.exit_code = 2;
    res.verdict["error"] = "unknown fixture '" + name + "'";
    log << "unknown fixture '" << name << "'; available:";
    for (const auto& t : repro_targets()) log << ' ' << t.name;
    log << "\n";
    return res;
  }
  bool ok = incomplete_fixtures().empty();
  json rows = json::array();
  std::ostringstream csv;
  csv << "name,provenance,anchor,passed\n";
  for (const ReproTarget* t : chosen) {
    auto start = std::chrono::steady_clock::now();
    FixtureOutcome outcome;
    try {
      outcome = t->run(ctx);
    } catch (const std::exception& e) {
      outcome.detail = e.what();
      outcome.checks.push_back(holds("exception", false));
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = outcome.passed();
    ok = ok && pass;
    json checks = json::array();
    for (const auto& c : outcome.checks) {
      checks.push_back({{"what", c.what},
                        {"value", c.value},
                        {"expected", c.expected},
                        {"tolerance", c.tolerance},
                        {"passed", c.passed}});
      if (!c.passed) {
        log << "  " << t->name << ": " << c.what << " value " << fmt(c.value) << " expected "
            << fmt(c.expected) << " tol " << fmt(c.tolerance) << "\n";
      }
    }
    rows.push_back({{"name", t->name},
                    {"claim", t->claim},
                    {"provenance", to_string(t->provenance)},
                    {"anchor", t->anchor},
                    {"passed", pass},
                    {"detail", outcome.detail},
                    {"checks", checks}});
    char line[160];
    std::snprintf(line, sizeof line, "%-26s %-10s %s  (%.2fs)\n", t->name.c_str(),
                  to_string(t->provenance).c_str(), pass ? "PASS" : "FAIL", secs);
    log << line;
    // timings stay on stdout so reruns produce identical files
    csv << t->name << ',' << to_string(t->provenance) << ",\"" << t->anchor << "\","
        << (pass ? 1 : 0) << "\n";
  }
  res.verdict["task"] = "reproduce";
  res.verdict["fixtures"] = rows;
  res.verdict["passed"] = ok;
  res.exit_code = ok ? 0 : 1;
  res.files["reproduce.csv"] = csv.str();
  res.files["verdict.json"] = res.verdict.dump(2) + "\n";
  return res;
}

std::vector<ComponentSolve> supercritical_components(double k, int segments,
                                                     const std::vector<int>& shifts,
                                                     const ReproContext& ctx) {
  const Scenario& sc = builtin_scenario("torus_example");
  ModelPtr model = sc.model();
  PathSpace space = sc.space();
  MinimizeConfig cfg;
  cfg.N = segments;
  cfg.threads = ctx.threads;
  cfg.multistart = 3;
  std::vector<ComponentSolve> out;
  for (int m : shifts) {
    auto inits = random_chords(*model, space, k, Vec2(0.0, m), cfg.multistart, segments,
                               ctx.seed + 17 * static_cast<std::uint64_t>(m + 100));
    MultistartResult r = multistart_minimize(*model, space, k, inits, cfg);
    ComponentSolve s;
    s.report = r.best;
    s.label = classify_component(model->chart(), r.best.path, space.q0(), space.q1());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace conorbit
