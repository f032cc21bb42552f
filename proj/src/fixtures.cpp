#include "conorbit/fixtures.hpp"

#include "conorbit/critical.hpp"

#include <boost/math/tools/minima.hpp>

#include <cmath>
#include <numbers>

namespace conorbit {

DiscretePath torus_backward_loop(int segments) {
  DiscretePath p;
  p.nodes.resize(segments + 1);
  for (int i = 0; i <= segments; ++i) p.nodes[i] = Vec2(1.0 - double(i) / segments, 0.5);
  p.T = 1.0;
  return p;
}

double ladder_action(const SurfaceModel& model, int n, double k) {
  DiscretePath p = ladder_loop(model, 0.5, 0.0, n, false, 8, k);
  return discrete_action(model, p, k).A;
}

double ladder_action_formula(int n, double k) {
  double s = std::sqrt(2.0 * k);
  return n * (2.0 * s - 1.0) + s;
}

CircleQuadrature hyperbolic_circle(const SurfaceModel& model, double r, double k, int nodes) {
  if (!(r > 0.0)) throw std::invalid_argument("circle radius must be positive");
  const double sr = std::sinh(r), cr = std::cosh(r);
  const double h = 2.0 * std::numbers::pi / nodes;
  CircleQuadrature out;
  double flux = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double phi = i * h;
    Vec2 q(sr * std::cos(phi), cr + sr * std::sin(phi));
    Vec2 dq(-sr * std::sin(phi), sr * std::cos(phi));
    out.length += model.norm(q, dq) * h;
    flux += model.theta(q).dot(dq) * h;
  }
  // counter-clockwise flux of theta = dx/y is the enclosed hyperbolic area
  out.area = flux;
  out.action_clockwise = (k + 0.5) * out.length - flux;
  return out;
}

double hyperbolic_length_formula(double r) { return 2.0 * std::numbers::pi * std::sinh(r); }

double hyperbolic_area_formula(double r) { return 2.0 * std::numbers::pi * (std::cosh(r) - 1.0); }

double hyperbolic_action_formula(double r, double k) {
  return (k + 0.5) * hyperbolic_length_formula(r) - hyperbolic_area_formula(r);
}

OrbitClosure orbit_closure(const SurfaceModel& model, const Vec2& start, double k, double step,
                           double horizon) {
  Vec2 dir(1.0, 0.0);
  Vec2 v = dir * (std::sqrt(2.0 * k) / model.norm(start, dir));
  FlowState s0{start, v, 0.0};
  Trajectory traj = integrate_el(model, s0, horizon, step);
  double far = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 1; i + 1 < traj.states.size(); ++i) {
    double d = (traj.states[i].q - start).norm();
    far = std::max(far, d);
    if (far <= 0.0 || d > 0.25 * far) continue;
    double prev = (traj.states[i - 1].q - start).norm();
    double next = (traj.states[i + 1].q - start).norm();
    if (d <= prev && d <= next) {
      best = i;
      break;
    }
  }
  if (best == 0) throw std::runtime_error("orbit did not return within the horizon");
  auto gap = [&](double t) {
    long n = std::max(1L, static_cast<long>(std::ceil(t / step)));
    Trajectory tr = integrate_el(model, s0, t, t / n);
    return (tr.states.back().q - start).norm();
  };
  double t0 = traj.states[best - 1].t, t1 = traj.states[best + 1].t;
  auto r = boost::math::tools::brent_find_minima(gap, t0, t1, 40);
  return {r.first, r.second};
}

}  // namespace conorbit
