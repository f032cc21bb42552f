// One pass/fail line per acceptance criterion; exit status is nonzero if any fails.
#include "conorbit/fixtures.hpp"
#include "conorbit/runner.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

using namespace conorbit;

namespace {

int total_violations = 0;

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void tally(const SolveReport& r) { total_violations += r.bound_violations; }

Outcome torus_fixtures() {
  Outcome o;
  ModelPtr m = make_model("torus_magnetic");
  double worst_loop = 0.0, worst_ladder = 0.0;
  for (double k : {0.0, 0.1, 0.3, 0.45}) {
    for (int n : {1, 8, 64}) {
      worst_loop = std::max(worst_loop, std::abs(discrete_action(*m, torus_backward_loop(n), k).A - (k - 0.5)));
    }
  }
  for (double k : {0.045, 0.08, 0.125}) {
    for (int n = 1; n <= 10; ++n) {
      worst_ladder = std::max(worst_ladder, std::abs(ladder_action(*m, n, k) - ladder_action_formula(n, k)));
    }
  }
  o.require(worst_loop <= 1e-12, "loop error " + num(worst_loop));
  o.require(worst_ladder <= 1e-10, "ladder error " + num(worst_ladder));
  o.detail = o.detail.empty() ? "loop err " + num(worst_loop) + ", ladder err " + num(worst_ladder) : o.detail;
  return o;
}

Outcome critical_brackets() {
  Outcome o;
  ModelPtr m = make_model("torus_magnetic");
  CriticalBracket c = bracket_critical(*m, CriticalKind::c, BracketConfig{});
  CriticalBracket cu = bracket_critical(*m, CriticalKind::cu_c0, BracketConfig{});
  o.require(c.lower <= 0.5 && 0.5 <= c.upper && c.width() <= 0.05, "c bracket");
  o.require(cu.lower <= 0.125 && 0.125 <= cu.upper && cu.width() <= 0.05, "c_u bracket");
  for (const auto* b : {&c, &cu}) {
    o.require(b->lower_witness && discrete_action(*m, *b->lower_witness, b->lower + 1e-9).A < 0.0,
              b->name + " witness");
  }
  if (o.passed) {
    o.detail = "c in [" + num(c.lower) + ", " + num(c.upper) + "], c_u in [" + num(cu.lower) + ", " +
               num(cu.upper) + "]";
  }
  return o;
}

Outcome obstruction_and_chain() {
  Outcome o;
  const Scenario& sc = builtin_scenario("torus_example");
  double k = k_obstruction(*sc.model(), sc.q0.build(), sc.q1.build());
  o.require(std::abs(k - 0.5) <= 1e-4, "obstruction " + num(k));
  int audited = 0;
  for (const auto& s : builtin_scenarios()) {
    ConfigDoc doc = ConfigDoc::parse("task = chain_audit\nscenario = " + s.name + "\n");
    std::ostringstream log;
    RunResult r = run_config(build_run_config(doc), log);
    o.require(r.exit_code == 0, "chain fails on " + s.name);
    ++audited;
  }
  if (o.passed) o.detail = "obstruction " + num(k) + ", chain holds on " + std::to_string(audited) + " scenarios";
  return o;
}

Outcome conservation() {
  Outcome o;
  ModelPtr m = make_model("torus_magnetic");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst_I = 0.0, worst_E = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    FlowState s{{0.5 + 0.5 * u(rng), 0.5 + 0.5 * u(rng)}, {u(rng), u(rng)}, 0.0};
    Trajectory tr = integrate_el(*m, s, 10.0, 1e-3);
    double I0 = torus_conserved_quantity(*m, s.q, s.v);
    for (const auto& st : tr.states) worst_I = std::max(worst_I, std::abs(torus_conserved_quantity(*m, st.q, st.v) - I0));
  }
  for (const auto& e : model_catalog()) {
    ModelPtr mm = make_model(e.id);
    for (int trial = 0; trial < 3; ++trial) {
      FlowState s{mm->random_point(rng), Vec2(u(rng), u(rng)) * 0.3, 0.0};
      Trajectory tr = integrate_el(*mm, s, 10.0, 1e-3);
      double E0 = mm->energy(s.q, s.v), drift = 0.0;
      for (const auto& st : tr.states) drift = std::max(drift, std::abs(mm->energy(st.q, st.v) - E0));
      worst_E = std::max(worst_E, drift / std::max(tr.states.back().t, 1e-3));
    }
  }
  o.require(worst_I <= 1e-8, "I drift " + num(worst_I));
  o.require(worst_E <= 1e-7, "energy drift rate " + num(worst_E));
  if (o.passed) o.detail = "I drift " + num(worst_I) + ", energy drift rate " + num(worst_E);
  return o;
}

Outcome no_connection() {
  Outcome o;
  ModelPtr m = make_model("torus_magnetic");
  auto a = no_connection_certificate(*m, {0.5, 0.0}, {0.5, 0.5}, 0.08);
  auto b = no_connection_certificate(*m, {0.5, 0.0}, {0.5, 0.5}, 0.125);
  o.require(a.verdict == ConnectionVerdict::disjoint, "k = 0.08 not disjoint");
  o.require(b.verdict == ConnectionVerdict::overlap && b.contact, "k = 0.125 not overlap with contact");
  if (o.passed) o.detail = "DISJOINT at 0.08, OVERLAP with contact at 0.125";
  return o;
}

Outcome supercritical() {
  Outcome o;
  auto sols = supercritical_components(0.75, 256, {0, -1, 1}, ReproContext{});
  std::vector<IVec2> labels;
  double conormal = 0.0, energy = 0.0, gap = 0.0;
  for (const auto& s : sols) {
    tally(s.report);
    const auto& r = s.report;
    o.require(r.status == SolveStatus::converged, to_string(s.label) + " " + to_string(r.status));
    conormal = std::max({conormal, r.residuals.conormal_0, r.residuals.conormal_1});
    energy = std::max(energy, std::abs(r.action.energy_mean - 0.75));
    gap = std::max(gap, r.residuals.shooting_gap);
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) labels.push_back(s.label);
  }
  o.require(labels.size() >= 3, "components " + std::to_string(labels.size()));
  o.require(conormal <= 1e-5, "conormal " + num(conormal));
  o.require(energy <= 1e-5, "energy mismatch " + num(energy));
  o.require(gap <= 1e-3, "shooting gap " + num(gap));
  if (o.passed) {
    o.detail = std::to_string(labels.size()) + " components, conormal " + num(conormal) + ", energy " +
               num(energy) + ", gap " + num(gap);
  }
  return o;
}

Outcome flat_geodesics() {
  Outcome o;
  ModelPtr m = make_model("torus_magnetic", {{"theta_scale", 0.0}});
  std::mt19937_64 rng(20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MinimizeConfig cfg;
  cfg.multistart = 2;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Vec2 a(u(rng), u(rng)), b(u(rng), u(rng));
    PathSpace space = PathSpace::open(BoundarySpec::point(a), BoundarySpec::point(b));
    auto inits = random_chords(*m, space, 0.5, Vec2::Zero(), 2, 32, trial);
    for (auto& p : inits) {
      for (int i = 1; i < p.segments(); ++i) p.nodes[i].x() += 0.05 * std::sin(2.0 * i);
    }
    MultistartResult r = multistart_minimize(*m, space, 0.5, inits, cfg);
    for (const auto& run : r.runs) tally(run);
    worst = std::max(worst, std::abs(r.best.action.A - (b - a).norm()));
  }
  o.require(worst <= 1e-4, "worst error " + num(worst));
  if (o.passed) o.detail = "20 pairs, worst error " + num(worst);
  return o;
}

Outcome mountain_pass_check() {
  Outcome o;
  const Scenario& sc = builtin_scenario("figure4");
  ModelPtr m = sc.model();
  StringConfig cfg;
  cfg.epsilon = sc.epsilon;
  MountainPassReport r = mountain_pass(*m, sc.space(), *sc.anchor, 0.25, cfg);
  double alpha = 2.0 * sc.epsilon * std::sqrt(m->convexity() * 0.25);
  o.require(r.status == SolveStatus::converged, "saddle " + to_string(r.status));
  o.require(r.minimax >= alpha, "minimax " + num(r.minimax) + " < alpha " + num(alpha));
  o.require(r.residual <= 1e-4, "residual " + num(r.residual));
  MinimaxCurve curve = struwe_scan(*m, sc.space(), *sc.anchor, parse_grid("k", "0.15:0.45:0.05"), cfg);
  o.require(curve.worst_decrease <= 1e-6, "decrease " + num(curve.worst_decrease));
  int failed = 0;
  for (const auto& row : curve.rows) failed += row.converged ? 0 : 1;
  if (o.passed) {
    o.detail = "minimax " + num(r.minimax) + " >= alpha " + num(alpha) + ", residual " + num(r.residual) +
               ", scan monotone, " + std::to_string(failed) + " flagged";
  }
  return o;
}

Outcome kn_bracket() {
  Outcome o;
  const Scenario& sc = builtin_scenario("figure4");
  ModelPtr m = sc.model();
  CriticalBracket b = k_N_estimate(*m, sc.space(), *sc.anchor, KnConfig{});
  o.require(b.lower <= 0.5 && 0.5 <= b.upper, "bracket [" + num(b.lower) + ", " + num(b.upper) + "]");
  o.require(b.width() <= 0.05, "width " + num(b.width()));
  o.require(b.lower_witness && discrete_action(*m, *b.lower_witness, b.lower + 1e-9).A < 0.0, "witness");
  if (o.passed) o.detail = "k_N in [" + num(b.lower) + ", " + num(b.upper) + "]";
  return o;
}

Outcome hyperbolic() {
  Outcome o;
  ModelPtr m = make_model("half_plane_horocycle");
  double worst = 0.0;
  for (double r : {0.5, 1.0, 2.0}) {
    CircleQuadrature c = hyperbolic_circle(*m, r, 0.5);
    worst = std::max({worst, std::abs(c.length - hyperbolic_length_formula(r)),
                      std::abs(c.area - hyperbolic_area_formula(r))});
  }
  o.require(worst <= 1e-6, "length/area error " + num(worst));
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    o.require(hyperbolic_circle(*m, r, 0.6).action_clockwise > 0.0, "k = 0.6 sign at r = " + num(r));
  }
  o.require(hyperbolic_circle(*m, 4.0, 0.45).action_clockwise < 0.0, "k = 0.45 sign at r = 4");
  OrbitClosure cl = orbit_closure(*m, {0.0, 1.0}, 0.125, 1e-3, 40.0);
  o.require(cl.gap <= 1e-4, "orbit gap " + num(cl.gap));
  if (o.passed) o.detail = "length/area error " + num(worst) + ", orbit gap " + num(cl.gap);
  return o;
}

Outcome property_suites() {
  Outcome o;
  // finite-difference gradient
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.03);
  ModelPtr torus = make_model("torus_magnetic");
  PathSpace space = PathSpace::open(BoundarySpec::circle({0.35, 0.5}, 0.25), BoundarySpec::horizontal_line(0.7));
  double worst_grad = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    DiscretePath p = space.straight(u(rng), u(rng), Vec2(0, trial % 3 - 1), 12, 0.3 + u(rng));
    for (int i = 1; i < p.segments(); ++i) p.nodes[i] += Vec2(noise(rng), noise(rng));
    double k = 0.05 + u(rng);
    Eigen::VectorXd g = action_gradient(*torus, space, p, k), z = space.pack(p);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      DiscretePath a = p, b = p;
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += 1e-6;
      zm[i] -= 1e-6;
      space.unpack(zp, a);
      space.unpack(zm, b);
      double fd = (discrete_action(*torus, a, k).A - discrete_action(*torus, b, k).A) / 2e-6;
      worst_grad = std::max(worst_grad, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
    }
  }
  o.require(worst_grad <= 1e-5, "gradient " + num(worst_grad));
  // Fenchel identities
  double worst_fenchel = 0.0;
  for (const auto& e : model_catalog()) {
    ModelPtr m = make_model(e.id, e.id == "plane_patch_custom" ? ModelParams{{"quartic", 0.3}} : ModelParams{});
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
      Vec2 q = m->random_point(rng), v(n(rng), n(rng));
      Vec2 p = m->dL_dv(q, v);
      double L = m->lagrangian(q, v);
      double scale = 1.0 + std::abs(L) + std::abs(p.dot(v));
      worst_fenchel = std::max(worst_fenchel, std::abs(m->hamiltonian(q, p) + L - p.dot(v)) / scale);
      worst_fenchel = std::max(worst_fenchel, (m->hamiltonian_dp(q, p) - v).norm() / (1.0 + v.norm()));
    }
  }
  o.require(worst_fenchel <= 1e-9, "Fenchel " + num(worst_fenchel));
  o.require(total_violations == 0, "lower bound violated " + std::to_string(total_violations) + " times");
  // quadrature order
  const double T = 1.3, k = 0.3;
  auto x = [](double s) { return Vec2(0.2 + 0.6 * s, 0.5 + 0.15 * std::sin(std::numbers::pi * s)); };
  auto dx = [](double s) { return Vec2(0.6, 0.15 * std::numbers::pi * std::cos(std::numbers::pi * s)); };
  double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double s) { return T * (torus->lagrangian(x(s), dx(s) / T) + k); }, 0.0, 1.0, 15, 1e-14);
  auto quad_error = [&](int n) {
    DiscretePath p;
    for (int i = 0; i <= n; ++i) p.nodes.push_back(x(double(i) / n));
    p.T = T;
    return std::abs(discrete_action(*torus, p, k).A - exact);
  };
  double quad_order = std::log2(quad_error(32) / quad_error(64));
  o.require(quad_order >= 1.8, "quadrature order " + num(quad_order));
  // RK4 order
  FlowState s{{0.3, 0.4}, {0.8, 0.3}, 0.0};
  Vec2 ref = integrate_el(*torus, s, 2.0, 1e-4).states.back().q;
  double e1 = (integrate_el(*torus, s, 2.0, 0.02).states.back().q - ref).norm();
  double e2 = (integrate_el(*torus, s, 2.0, 0.01).states.back().q - ref).norm();
  double rk_order = std::log2(e1 / e2);
  o.require(rk_order >= 3.8, "RK4 order " + num(rk_order));
  if (o.passed) {
    o.detail = "gradient " + num(worst_grad) + ", Fenchel " + num(worst_fenchel) + ", bound violations 0, " +
               "quadrature order " + num(quad_order) + ", RK4 order " + num(rk_order);
  }
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "torus fixture values", 1.0, torus_fixtures},
      {2, "critical-value brackets", 120.0, critical_brackets},
      {3, "obstruction and chain of critical values", 30.0, obstruction_and_chain},
      {4, "conservation oracle", 60.0, conservation},
      {5, "no-connection certificate", 1.0, no_connection},
      {6, "supercritical minimizers", 60.0, supercritical},
      {7, "flat geodesic check", 60.0, flat_geodesics},
      {8, "mountain pass and minimax monotonicity", 300.0, mountain_pass_check},
      {9, "k_N bracket", 120.0, kn_bracket},
      {10, "hyperbolic fixtures", 60.0, hyperbolic},
      {11, "property suites", 120.0, property_suites},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) o.require(false, "runtime " + num(secs) + " s over budget");
    failures += o.passed ? 0 : 1;
    std::printf("criterion %2d: %s  %-42s %7.2fs  %s\n", c.id, o.passed ? "PASS" : "FAIL", c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
