#include "conorbit/fixtures.hpp"
#include "conorbit/pathspace.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace conorbit;

namespace {

struct Case {
  ModelPtr model;
  PathSpace space;
  Vec2 offset1 = Vec2::Zero();
};

std::vector<Case> gradient_cases() {
  std::vector<Case> c;
  ModelPtr torus = make_model("torus_magnetic");
  c.push_back({torus, PathSpace::open(BoundarySpec::point({0.5, 0.0}),
                                      BoundarySpec::horizontal_line(0.5))});
  c.push_back({torus, PathSpace::open(BoundarySpec::circle({0.35, 0.5}, 0.25),
                                      BoundarySpec::circle({0.65, 0.5}, 0.25))});
  c.push_back({torus, PathSpace::open(BoundarySpec::vertical_line(0.1),
                                      BoundarySpec::horizontal_line(0.3)),
               Vec2(0.0, 1.0)});
  c.push_back({torus, PathSpace::loop({1.0, 0.0})});
  c.push_back({make_model("torus_mechanical"),
               PathSpace::open(BoundarySpec::point({0.25, 0.25}), BoundarySpec::point({0.75, 0.75}))});
  c.push_back({make_model("half_plane_horocycle"),
               PathSpace::open(BoundarySpec::point({0.0, 1.0}), BoundarySpec::point({1.0, 2.0}))});
  c.push_back({make_model("plane_patch_custom", {{"quartic", 0.3}, {"omega", 0.4}}),
               PathSpace::open(BoundarySpec::point({-0.5, 0.0}),
                               BoundarySpec::circle({0.3, 0.2}, 0.3))});
  return c;
}

DiscretePath random_path(const Case& c, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> seg(6, 24);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.03);
  const int n = seg(rng);
  DiscretePath p;
  if (c.space.is_loop()) {
    Vec2 base(u(rng), 0.2 + 0.6 * u(rng));
    for (int i = 0; i <= n; ++i) p.nodes.push_back(base + c.space.winding() * double(i) / n);
    for (int i = 0; i < n; ++i) p.nodes[i] += Vec2(noise(rng), noise(rng));
    p.nodes[n] = p.nodes[0] + c.space.winding();
  } else {
    p = c.space.straight(u(rng), u(rng), c.offset1, n, 1.0);
    for (int i = 1; i < n; ++i) p.nodes[i] += Vec2(noise(rng), noise(rng));
  }
  p.T = 0.3 + 1.7 * u(rng);
  return p;
}

double action_at(const Case& c, DiscretePath p, const Eigen::VectorXd& z, double k) {
  c.space.unpack(z, p);
  return discrete_action(*c.model, p, k).A;
}

}  // namespace

TEST_CASE("action gradient matches central differences on 100 random paths") {
  auto cases = gradient_cases();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> kdist(0.05, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Case& c = cases[trial % cases.size()];
    DiscretePath p = random_path(c, rng);
    const double k = kdist(rng);
    Eigen::VectorXd g = action_gradient(*c.model, c.space, p, k);
    Eigen::VectorXd z = c.space.pack(p);
    REQUIRE(g.size() == z.size());
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp[i] += h;
      zm[i] -= h;
      double fd = (action_at(c, p, zp, k) - action_at(c, p, zm, k)) / (2.0 * h);
      worst = std::max(worst, std::abs(fd - g[i]) / (1.0 + std::abs(g[i])));
    }
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("midpoint action converges at second order on a smooth path") {
  ModelPtr m = make_model("torus_magnetic");
  const double k = 0.3, T = 1.3;
  auto x = [](double s) { return Vec2(0.2 + 0.6 * s, 0.5 + 0.15 * std::sin(std::numbers::pi * s)); };
  auto dx = [](double s) {
    return Vec2(0.6, 0.15 * std::numbers::pi * std::cos(std::numbers::pi * s));
  };
  auto integrand = [&](double s) { return T * (m->lagrangian(x(s), dx(s) / T) + k); };
  double exact = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 15, 1e-14);
  std::vector<double> errors;
  for (int n : {16, 32, 64, 128, 256}) {
    DiscretePath p;
    for (int i = 0; i <= n; ++i) p.nodes.push_back(x(double(i) / n));
    p.T = T;
    errors.push_back(std::abs(discrete_action(*m, p, k).A - exact));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) {
    double order = std::log2(errors[i - 1] / errors[i]);
    CAPTURE(order);
    CHECK(order >= 1.8);
  }
}

TEST_CASE("torus horizontal loop has action k - 1/2 exactly") {
  ModelPtr m = make_model("torus_magnetic");
  for (double k : {0.0, 0.1, 0.25, 0.45, 0.75}) {
    for (int n : {1, 3, 16, 100}) {
      CHECK(std::abs(discrete_action(*m, torus_backward_loop(n), k).A - (k - 0.5)) <= 1e-12);
    }
  }
}

TEST_CASE("ladder loops match n (2 sqrt(2k) - 1) + sqrt(2k)") {
  ModelPtr m = make_model("torus_magnetic");
  for (double k : {0.045, 0.08, 0.125}) {
    for (int n = 1; n <= 10; ++n) {
      CHECK(std::abs(ladder_action(*m, n, k) - ladder_action_formula(n, k)) <= 1e-10);
    }
  }
}

TEST_CASE("time split reproduces the action and its optimal time") {
  ModelPtr m = make_model("torus_mechanical");
  PathSpace space =
      PathSpace::open(BoundarySpec::point({0.1, 0.2}), BoundarySpec::point({0.7, 0.4}));
  DiscretePath p = space.straight(0.0, 0.0, Vec2::Zero(), 20, 1.0);
  const double k = 0.9;
  TimeSplit s = time_split(*m, p, k);
  for (double T : {0.2, 0.7, 2.5}) {
    p.T = T;
    CHECK(discrete_action(*m, p, k).A == doctest::Approx(s.K / T + s.Theta + s.W * T).epsilon(1e-12));
  }
  auto T = optimal_time(*m, p, k);
  REQUIRE(T);
  p.T = *T;
  CHECK(std::abs(discrete_action(*m, p, k).dA_dT) <= 1e-12);
  CHECK_FALSE(optimal_time(*m, p, -1.0).has_value());
}

TEST_CASE("action never falls below the coercivity bound on random paths") {
  auto cases = gradient_cases();
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const Case& c = cases[trial % cases.size()];
    DiscretePath p = random_path(c, rng);
    QuadraticBounds b = c.model->coercivity();
    for (double k : {0.0, 0.2, 1.0}) {
      ActionValue v = discrete_action(*c.model, p, k);
      CHECK(v.A >= lower_bound_estimate(v, b.a, b.b, k) - 1e-12);
    }
  }
}

TEST_CASE("path CSV round trip is exact") {
  PathSpace space = PathSpace::open(BoundarySpec::point({0.5, 0.0}), BoundarySpec::horizontal_line(0.5));
  DiscretePath p = space.straight(0.0, 0.123456789, Vec2(0.0, 1.0), 7, 0.3141592653589793);
  p.nodes[3] += Vec2(1e-17, 3.3e-9);
  std::stringstream ss;
  write_path_csv(ss, p);
  DiscretePath q = read_path_csv(ss);
  REQUIRE(q.segments() == p.segments());
  CHECK(q.T == p.T);
  CHECK(q.s0 == p.s0);
  CHECK(q.s1 == p.s1);
  for (int i = 0; i <= p.segments(); ++i) CHECK(q.nodes[i] == p.nodes[i]);
}

TEST_CASE("component labels separate lifts modulo the boundary lattice") {
  ModelPtr m = make_model("torus_magnetic");
  BoundarySpec q0 = BoundarySpec::point({0.5, 0.0}), q1 = BoundarySpec::horizontal_line(0.5);
  PathSpace space = PathSpace::open(q0, q1);
  auto label = [&](Vec2 shift) {
    return classify_component(m->chart(), space.straight(0.5, 0.5, shift, 8, 1.0), q0, q1);
  };
  // labels are relative to a reference chord, so only differences are meaningful
  CHECK(label({0, 1}) != label({0, 0}));
  CHECK(label({0, -1}) != label({0, 1}));
  // the line's own generator does not change the component
  CHECK(label({1, 0}) == label({0, 0}));
  CHECK(label({3, 1}) == label({0, 1}));
}

TEST_CASE("lattice classes reduce to canonical coset representatives") {
  LatticeClass trivial;
  CHECK(trivial.rank() == 0);
  CHECK(trivial.reduce({3, -2}) == IVec2{3, -2});
  LatticeClass line({{1, 0}});
  CHECK(line.rank() == 1);
  CHECK(line.same_coset({5, 2}, {-1, 2}));
  CHECK_FALSE(line.same_coset({0, 1}, {0, 2}));
  LatticeClass full = LatticeClass::join(line, LatticeClass({{0, 1}}));
  CHECK(full.rank() == 2);
  CHECK(full.contains({7, -4}));
  LatticeClass skew({{2, 0}, {1, 3}});
  CHECK(skew.contains({3, 3}));
  CHECK_FALSE(skew.contains({1, 0}));
}

TEST_CASE("intersections of the figure-4 circles") {
  ModelPtr m = make_model("torus_magnetic");
  auto pts = intersect(m->chart(), BoundarySpec::circle({0.35, 0.5}, 0.25),
                       BoundarySpec::circle({0.65, 0.5}, 0.25));
  REQUIRE(pts.size() == 2);
  for (const auto& p : pts) {
    CHECK(p.x() == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(p.y() - 0.5) == doctest::Approx(0.2).epsilon(1e-9));
  }
  CHECK(intersect(m->chart(), BoundarySpec::vertical_line(0.1), BoundarySpec::vertical_line(0.4)).empty());
}

TEST_CASE("flat endpoint momenta equal the chord velocity") {
  ModelPtr m = make_model("torus_magnetic", {{"theta_scale", 0.0}});
  PathSpace space = PathSpace::open(BoundarySpec::point({0.0, 0.0}), BoundarySpec::point({0.3, 0.4}));
  DiscretePath p = space.straight(0.0, 0.0, Vec2::Zero(), 10, 2.0);
  auto [p0, p1] = endpoint_momenta(*m, p);
  CHECK((p0 - Vec2(0.15, 0.2)).norm() <= 1e-14);
  CHECK((p1 - Vec2(0.15, 0.2)).norm() <= 1e-14);
}
