#include "conorbit/runner.hpp"
#include "conorbit/solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace conorbit;

namespace {

void check_bound(const SolveReport& r) { CHECK(r.bound_violations == 0); }

void check_bound(const MultistartResult& r) {
  for (const auto& run : r.runs) check_bound(run);
}

}  // namespace

TEST_CASE("flat torus minimizers have action d sqrt(2k) for 20 random point pairs") {
  ModelPtr m = make_model("torus_magnetic", {{"theta_scale", 0.0}});
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double k = 0.5;
  MinimizeConfig cfg;
  cfg.multistart = 2;
  for (int trial = 0; trial < 20; ++trial) {
    Vec2 a(u(rng), u(rng)), b(u(rng), u(rng));
    PathSpace space = PathSpace::open(BoundarySpec::point(a), BoundarySpec::point(b));
    auto inits = random_chords(*m, space, k, Vec2::Zero(), 2, 32, trial);
    // bend the seeds so the solver has work to do
    for (auto& p : inits) {
      for (int i = 1; i < p.segments(); ++i) p.nodes[i].y() += 0.05 * std::sin(3.0 * i);
    }
    MultistartResult r = multistart_minimize(*m, space, k, inits, cfg);
    CAPTURE(trial);
    CHECK(r.best.status == SolveStatus::converged);
    CHECK(std::abs(r.best.action.A - (b - a).norm() * std::sqrt(2.0 * k)) <= 1e-4);
    check_bound(r);
  }
}

TEST_CASE("supercritical minimizers exist in three components with small residuals") {
  auto sols = supercritical_components(0.75, 256, {0, -1, 1}, ReproContext{});
  std::vector<IVec2> labels;
  for (const auto& s : sols) {
    CAPTURE(to_string(s.label));
    CHECK(s.report.status == SolveStatus::converged);
    CHECK(s.report.residuals.conormal_0 <= 1e-5);
    CHECK(s.report.residuals.conormal_1 <= 1e-5);
    CHECK(std::abs(s.report.action.energy_mean - 0.75) <= 1e-5);
    CHECK(s.report.residuals.shooting_gap <= 1e-3);
    CHECK(s.report.path.segments() == 256);
    check_bound(s.report);
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) labels.push_back(s.label);
  }
  CHECK(labels.size() == 3);
}

TEST_CASE("below max V a loop parked at the potential top is unbounded in T") {
  ModelPtr m = make_model("torus_mechanical");
  PathSpace space = PathSpace::loop({0.0, 0.0});
  MinimizeConfig cfg;
  cfg.T_max = 1e3;
  DiscretePath p;
  for (int i = 0; i <= 16; ++i) {
    double a = 2.0 * std::numbers::pi * i / 16;
    p.nodes.push_back(Vec2(0.5, 0.5) + 0.01 * Vec2(std::cos(a), std::sin(a)));
  }
  p.T = 1.0;
  SolveReport r = minimize_action(*m, space, 0.3, p, cfg);
  CHECK(r.status == SolveStatus::unbounded);
  CHECK(r.action.A < 0.0);
  check_bound(r);
}

TEST_CASE("a loop class below c has a bounded minimizer") {
  // horizontal loops travelling in -x at y = 1/2 have minimum sqrt(2k) - 1
  ModelPtr m = make_model("torus_magnetic");
  PathSpace space = PathSpace::loop({-1.0, 0.0});
  MinimizeConfig cfg;
  DiscretePath p;
  for (int i = 0; i <= 32; ++i) p.nodes.push_back({0.8 - double(i) / 32, 0.48});
  p.T = 1.0;
  SolveReport r = minimize_action(*m, space, 0.3, p, cfg);
  CHECK(r.status == SolveStatus::converged);
  CHECK(r.action.A == doctest::Approx(std::sqrt(0.6) - 1.0).epsilon(1e-3));
  check_bound(r);
}

TEST_CASE("stop_below ends a run once a negative action is certified") {
  ModelPtr m = make_model("torus_magnetic");
  PathSpace space = PathSpace::loop({-1.0, 0.0});
  MinimizeConfig cfg;
  cfg.stop_below = -1e-10;
  DiscretePath p;
  for (int i = 0; i <= 16; ++i) p.nodes.push_back({1.0 - double(i) / 16, 0.45});
  p.T = 1.0;
  SolveReport r = minimize_action(*m, space, 0.45, p, cfg);
  CHECK(r.status == SolveStatus::below_threshold);
  CHECK(r.action.A < -1e-10);
  check_bound(r);
}

TEST_CASE("a constant path collapses when k is above the zero-section energy") {
  ModelPtr m = make_model("torus_magnetic");
  BoundarySpec c0 = BoundarySpec::circle({0.35, 0.5}, 0.25), c1 = BoundarySpec::circle({0.65, 0.5}, 0.25);
  PathSpace space = PathSpace::open(c0, c1);
  DiscretePath p = constant_path_at(*m, space, {0.5, 0.3}, 16, 0.05);
  CHECK(discrete_action(*m, p, 0.25).A == doctest::Approx(0.05 * 0.25));
  MinimizeConfig cfg;
  SolveReport r = minimize_action(*m, space, 0.25, p, cfg);
  CHECK(r.status == SolveStatus::collapsed_to_constant);
  check_bound(r);
  CHECK_THROWS_AS(constant_path_at(*m, space, {0.1, 0.1}, 16, 0.05), std::invalid_argument);
}

TEST_CASE("multistart results do not depend on the thread count") {
  ModelPtr m = make_model("torus_magnetic");
  PathSpace space = PathSpace::open(BoundarySpec::point({0.5, 0.0}), BoundarySpec::horizontal_line(0.5));
  MinimizeConfig cfg;
  cfg.multistart = 4;
  auto inits = random_chords(*m, space, 0.75, Vec2(0.0, 1.0), 4, 48, 5);
  cfg.threads = 1;
  MultistartResult a = multistart_minimize(*m, space, 0.75, inits, cfg);
  cfg.threads = 3;
  MultistartResult b = multistart_minimize(*m, space, 0.75, inits, cfg);
  std::ostringstream sa, sb;
  write_path_csv(sa, a.best.path);
  write_path_csv(sb, b.best.path);
  CHECK(sa.str() == sb.str());
  check_bound(a);
}

TEST_CASE("invalid solver settings are rejected") {
  MinimizeConfig cfg;
  cfg.N = 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MinimizeConfig{};
  cfg.armijo = 0.7;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = MinimizeConfig{};
  cfg.T_min = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("figure-4 mountain pass clears the lower bound at k = 1/4") {
  const Scenario& sc = builtin_scenario("figure4");
  ModelPtr m = sc.model();
  StringConfig cfg;
  cfg.epsilon = sc.epsilon;
  MountainPassReport r = mountain_pass(*m, sc.space(), *sc.anchor, 0.25, cfg);
  CHECK(r.status == SolveStatus::converged);
  CHECK(r.alpha == doctest::Approx(2.0 * 0.1 * std::sqrt(0.5 * 0.25)));
  CHECK(r.minimax >= r.alpha);
  CHECK(r.residual <= 1e-4);
  CHECK(r.class_invariant);
  CHECK(r.tail_action <= r.alpha / 4.0 + 1e-12);
  CHECK(r.head_action < 0.0);
  CHECK(r.minimax > std::max(r.tail_action, r.head_action));
}

TEST_CASE("minimax values are monotone in k and flag nothing on the figure-4 grid") {
  const Scenario& sc = builtin_scenario("figure4");
  ModelPtr m = sc.model();
  StringConfig cfg;
  cfg.epsilon = sc.epsilon;
  MinimaxCurve curve = struwe_scan(*m, sc.space(), *sc.anchor, sc.k_grid, cfg);
  REQUIRE(curve.rows.size() == 7);
  CHECK(curve.worst_decrease <= 1e-6);
  for (std::size_t i = 1; i < curve.rows.size(); ++i) {
    const auto& lo = curve.rows[i - 1];
    const auto& hi = curve.rows[i];
    if (!lo.converged || !hi.converged) continue;
    // the derivative of the minimax value is the saddle's period
    double quotient = (hi.c_omega - lo.c_omega) / (hi.k - lo.k);
    CHECK(quotient >= hi.T_star - 0.05);
    CHECK(quotient <= lo.T_star + 0.05);
  }
}

TEST_CASE("mountain pass is not applicable at or below e0") {
  ModelPtr m = make_model("torus_mechanical");
  PathSpace space = PathSpace::open(BoundarySpec::circle({0.5, 0.5}, 0.2), BoundarySpec::circle({0.7, 0.5}, 0.2));
  Vec2 anchor(0.6, 0.5 + std::sqrt(0.04 - 0.01));
  MountainPassReport r = mountain_pass(*m, space, anchor, 0.5, StringConfig{});
  CHECK(r.status == SolveStatus::not_applicable);
}
