#pragma once

#include "conorbit/flow.hpp"
#include "conorbit/pathspace.hpp"

namespace conorbit {

/// The unit-speed horizontal loop x(t) = (1 - t, 1/2), t in [0, 1], on the torus.
DiscretePath torus_backward_loop(int segments);

/// Action of the n-rung ladder between y = 1/2 and y = 0 at its optimal T.
double ladder_action(const SurfaceModel& model, int n, double k);
/// n (2 sqrt(2k) - 1) + sqrt(2k).
double ladder_action_formula(int n, double k);

struct CircleQuadrature {
  double length = 0.0;
  double area = 0.0;
  /// Unit-speed clockwise traversal: (k + 1/2) length + integral of theta.
  double action_clockwise = 0.0;
};

/// Trapezoid quadrature on the half-plane circle of hyperbolic radius r about (0, 1),
/// parametrized as (sinh r cos phi, cosh r + sinh r sin phi).
CircleQuadrature hyperbolic_circle(const SurfaceModel& model, double r, double k, int nodes = 4096);

double hyperbolic_length_formula(double r);
double hyperbolic_area_formula(double r);
double hyperbolic_action_formula(double r, double k);

struct OrbitClosure {
  double period = 0.0;
  double gap = 0.0;
};

/// Integrate from `start` with speed sqrt(2k) along +x and find the first return.
OrbitClosure orbit_closure(const SurfaceModel& model, const Vec2& start, double k, double step,
                           double horizon);

}  // namespace conorbit
