#include "conorbit/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace conorbit {

Vec2 el_acceleration(const SurfaceModel& model, const Vec2& q, const Vec2& v) {
  Vec2 rhs = model.dL_dq(q, v) - model.d2L_dvdq(q, v) * v;
  return model.d2L_dv2(q, v).ldlt().solve(rhs);
}

Trajectory integrate_el(const SurfaceModel& model, const FlowState& start, double duration,
                        double step) {
  if (!(step > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  const Chart& chart = model.chart();
  chart.require(start.q);
  Trajectory traj;
  traj.states.push_back(start);
  const long steps = std::max(1L, static_cast<long>(std::ceil(duration / step - 1e-9)));
  Vec2 q = start.q, v = start.v;
  double t = start.t;
  for (long n = 0; n < steps; ++n) {
    double dt = std::min(step, start.t + duration - t);
    if (dt <= 0.0) break;
    Vec2 q2, q3, q4;
    Vec2 k1q = v, k1v = el_acceleration(model, q, v);
    q2 = q + 0.5 * dt * k1q;
    if (!chart.contains(q2)) {
      traj.exited = true;
      break;
    }
    Vec2 k2q = v + 0.5 * dt * k1v, k2v = el_acceleration(model, q2, k2q);
    q3 = q + 0.5 * dt * k2q;
    if (!chart.contains(q3)) {
      traj.exited = true;
      break;
    }
    Vec2 k3q = v + 0.5 * dt * k2v, k3v = el_acceleration(model, q3, k3q);
    q4 = q + dt * k3q;
    if (!chart.contains(q4)) {
      traj.exited = true;
      break;
    }
    Vec2 k4q = v + dt * k3v, k4v = el_acceleration(model, q4, k4q);
    Vec2 qn = q + dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    Vec2 vn = v + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    if (!chart.contains(qn)) {
      traj.exited = true;
      break;
    }
    q = qn;
    v = vn;
    t = (n + 1 == steps) ? start.t + duration : t + dt;
    traj.states.push_back({q, v, t});
  }
  return traj;
}

ResidualReport verify_solution(const SurfaceModel& model, const PathSpace& space,
                               const DiscretePath& path, double k) {
  ResidualReport r;
  const int n = path.segments();
  const double tau = path.T / n;
  NodeGradient g = node_gradient(model, path, k);
  for (int i = 1; i < n; ++i) r.el_residual = std::max(r.el_residual, g.nodes[i].norm() / tau);
  if (space.is_loop()) {
    r.el_residual = std::max(r.el_residual, (g.nodes[0] + g.nodes[n]).norm() / tau);
  }

  auto segs = segment_samples(model, path);
  for (const auto& s : segs) r.energy_spread = std::max(r.energy_spread, std::abs(s.lagrangian.E - k));

  Vec2 p0 = -g.nodes[0], p1 = g.nodes[n];
  if (!space.is_loop()) {
    auto conormal = [&](const BoundarySpec& q, double s, const Vec2& at, const Vec2& p) {
      if (q.is_point()) return 0.0;
      Vec2 t = q.tangent(s);
      return std::abs(p.dot(t)) / model.norm(at, t);
    };
    r.conormal_0 = conormal(space.q0(), path.s0, path.nodes[0], p0);
    r.conormal_1 = conormal(space.q1(), path.s1, path.nodes[n], p1);
  }

  FlowState start{path.nodes[0], model.hamiltonian_dp(path.nodes[0], p0), 0.0};
  const int substeps = std::max(2000, 8 * n);
  Trajectory traj = integrate_el(model, start, path.T, path.T / substeps);
  r.exited = traj.exited;
  double e0 = model.energy(start.q, start.v);
  r.energy_mismatch = std::abs(e0 - k);
  for (const auto& s : traj.states) {
    r.energy_drift = std::max(r.energy_drift, std::abs(model.energy(s.q, s.v) - e0));
  }
  r.shooting_gap = (traj.states.back().q - path.nodes[n]).norm();
  if (traj.exited) r.shooting_gap = std::numeric_limits<double>::infinity();
  return r;
}

std::string to_string(ConnectionVerdict verdict) {
  return verdict == ConnectionVerdict::disjoint ? "DISJOINT" : "OVERLAP";
}

ConnectionCertificate no_connection_certificate(const SurfaceModel& model, const Vec2& q0,
                                                const Vec2& q1, double k) {
  if (model.id() != "torus_magnetic") {
    throw UnsupportedError("no-connection certificate needs the torus_magnetic model");
  }
  if (!(k >= 0.0)) throw std::invalid_argument("energy must be non-negative");
  const double speed = std::sqrt(2.0 * k);
  auto range = [&](const Vec2& q) {
    double centre = torus_conserved_quantity(model, q, Vec2::Zero());
    return std::array<double, 2>{centre - speed, centre + speed};
  };
  ConnectionCertificate c;
  c.range0 = range(q0);
  c.range1 = range(q1);
  constexpr double kTouch = 1e-12;
  double gap = std::max(c.range1[0] - c.range0[1], c.range0[0] - c.range1[1]);
  if (gap > kTouch) {
    c.verdict = ConnectionVerdict::disjoint;
  } else {
    c.verdict = ConnectionVerdict::overlap;
    c.contact = std::abs(gap) <= kTouch;
  }
  return c;
}

void write_trajectory_csv(std::ostream& out, const SurfaceModel& model, const Trajectory& traj) {
  out << "t,x,y,vx,vy,E\n";
  char buf[256];
  for (const auto& s : traj.states) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.q.x(),
                  s.q.y(), s.v.x(), s.v.y(), model.energy(s.q, s.v));
    out << buf;
  }
}

void write_trajectory_csv(const std::string& file, const SurfaceModel& model,
                          const Trajectory& traj) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  write_trajectory_csv(out, model, traj);
}

}  // namespace conorbit
