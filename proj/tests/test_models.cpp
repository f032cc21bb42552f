#include "conorbit/models.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace conorbit;

namespace {

const std::vector<ModelParams>& custom_variants() {
  static const std::vector<ModelParams> v = {
      {{"field", 1.0}},
      {{"field", 0.7}, {"omega", 0.5}},
      {{"field", 1.0}, {"quartic", 0.3}},
  };
  return v;
}

std::vector<ModelPtr> all_models() {
  std::vector<ModelPtr> out;
  for (const auto& e : model_catalog()) out.push_back(make_model(e.id));
  for (const auto& p : custom_variants()) out.push_back(make_model("plane_patch_custom", p));
  return out;
}

Vec2 random_velocity(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

}  // namespace

TEST_CASE("catalog models build and pass their derivative checks") {
  for (const auto& m : all_models()) {
    CAPTURE(m->id());
    DerivativeCheck c = check_derivatives(*m, 200, 5);
    CHECK(c.passed);
    CHECK(c.max_rel_error_v < 1e-6);
    CHECK(c.max_rel_error_q < 1e-6);
  }
}

TEST_CASE("unknown model ids and parameters are rejected") {
  CHECK_THROWS_AS(make_model("no_such_model"), std::invalid_argument);
  CHECK_THROWS_AS(make_model("torus_magnetic", {{"colour", 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(make_model("torus_magnetic", {{"psi_lo", 0.8}}), std::invalid_argument);
  CHECK_THROWS_AS(make_model("plane_patch_custom", {{"xmin", 2.0}}), std::invalid_argument);
}

TEST_CASE("Fenchel identities hold on 10^4 samples per model") {
  std::mt19937_64 rng(17);
  for (const auto& m : all_models()) {
    CAPTURE(m->id());
    double worst_value = 0.0, worst_inverse = 0.0, worst_energy = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Vec2 q = m->random_point(rng);
      Vec2 v = random_velocity(rng, 1.0);
      Vec2 p = m->dL_dv(q, v);
      double L = m->lagrangian(q, v);
      double H = m->hamiltonian(q, p);
      double scale = 1.0 + std::abs(L) + std::abs(p.dot(v));
      worst_value = std::max(worst_value, std::abs(H + L - p.dot(v)) / scale);
      worst_inverse = std::max(worst_inverse, (m->hamiltonian_dp(q, p) - v).norm() / (1.0 + v.norm()));
      worst_energy = std::max(worst_energy, std::abs(H - m->energy(q, v)) / scale);
    }
    CHECK(worst_value <= 1e-9);
    CHECK(worst_inverse <= 1e-9);
    CHECK(worst_energy <= 1e-9);
  }
}

TEST_CASE("Legendre Newton path agrees with the closed form on structured models") {
  std::mt19937_64 rng(4);
  for (const auto& e : model_catalog()) {
    ModelPtr m = make_model(e.id);
    if (!m->is_structured()) continue;
    CAPTURE(e.id);
    for (int i = 0; i < 500; ++i) {
      Vec2 q = m->random_point(rng);
      Vec2 p = random_velocity(rng, 2.0);
      HamiltonianSolve s = m->hamiltonian_newton(q, p);
      CHECK(std::abs(s.value - m->hamiltonian(q, p)) <= 1e-9 * (1.0 + std::abs(s.value)));
    }
  }
}

TEST_CASE("Hamiltonian is the supremum over sampled velocities") {
  std::mt19937_64 rng(8);
  for (const auto& m : all_models()) {
    CAPTURE(m->id());
    for (int i = 0; i < 200; ++i) {
      Vec2 q = m->random_point(rng);
      Vec2 p = random_velocity(rng, 1.0);
      double H = m->hamiltonian(q, p);
      for (int j = 0; j < 20; ++j) {
        Vec2 v = random_velocity(rng, 2.0);
        CHECK(p.dot(v) - m->lagrangian(q, v) <= H + 1e-12);
      }
    }
  }
}

TEST_CASE("quadratic lower bound holds on the working region") {
  for (const auto& m : all_models()) {
    CAPTURE(m->id());
    CHECK(certify_quadratic_bounds(*m, m->coercivity(), 20.0, 20000, 3) >= -1e-12);
  }
}

TEST_CASE("torus magnetic model matches its closed form") {
  ModelPtr m = make_model("torus_magnetic");
  const auto& psi = *m->psi();
  CHECK(psi(0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(psi(0.25) == 0.0);
  CHECK(psi(0.1) == 0.0);
  CHECK(psi(0.9) == 0.0);
  Vec2 q(0.3, 0.5), v(0.2, -0.7);
  CHECK(m->lagrangian(q, v) == doctest::Approx(0.5 * v.squaredNorm() + v.x()).epsilon(1e-14));
  CHECK(m->theta_sup() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m->zero_section_max() == 0.0);
  CHECK(torus_conserved_quantity(*m, q, v) == doctest::Approx(1.2));
}

TEST_CASE("half-plane model: hyperbolic norm and theta = dx / y") {
  ModelPtr m = make_model("half_plane_horocycle");
  Vec2 q(0.3, 2.0), v(1.0, 0.5);
  CHECK(m->norm(q, v) == doctest::Approx(v.norm() / 2.0));
  CHECK(m->theta(q).x() == doctest::Approx(0.5));
  CHECK(m->theta(q).y() == doctest::Approx(0.0));
  CHECK(m->dual_norm(q, m->theta(q)) == doctest::Approx(1.0));
  CHECK_THROWS(eval_lagrangian(*m, Vec2(0.0, -1.0), v));
}

TEST_CASE("psi profile derivative matches central differences") {
  PsiProfile psi(0.25, 0.75, 0.4);
  for (double y = 0.26; y < 0.75; y += 0.013) {
    double h = 1e-6;
    double fd = (psi(y + h) - psi(y - h)) / (2.0 * h);
    CHECK(psi.derivative(y) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}
