#pragma once

#include "conorbit/pathspace.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace conorbit {

struct FlowState {
  Vec2 q = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  double t = 0.0;
};

struct Trajectory {
  std::vector<FlowState> states;
  /// Integration stopped early because a stage left the chart.
  bool exited = false;
};

/// dv/dt from the Euler-Lagrange equation: L_vv dv/dt = L_q - L_vq v.
Vec2 el_acceleration(const SurfaceModel& model, const Vec2& q, const Vec2& v);

/// Classical RK4 on (q, v); the last step is shortened to land on `duration`.
Trajectory integrate_el(const SurfaceModel& model, const FlowState& start, double duration,
                        double step);

struct ResidualReport {
  /// max over interior nodes of |dA/dx_i| / tau, a discrete |d/dt L_v - L_q|.
  double el_residual = 0.0;
  /// max |E(t) - E(0)| along the re-integrated orbit.
  double energy_drift = 0.0;
  double conormal_0 = 0.0;
  double conormal_1 = 0.0;
  /// Chart distance between the path end and the re-integrated end.
  double shooting_gap = 0.0;
  /// |E(0) - k| of the re-integrated orbit.
  double energy_mismatch = 0.0;
  /// max over segments |E_i - k| of the discrete path.
  double energy_spread = 0.0;
  bool exited = false;
};

/// Re-integrate the path from its start with the velocity whose momentum is the
/// discrete endpoint momentum, and measure how well it solves the boundary problem.
ResidualReport verify_solution(const SurfaceModel& model, const PathSpace& space,
                               const DiscretePath& path, double k);

enum class ConnectionVerdict { disjoint, overlap };

struct ConnectionCertificate {
  ConnectionVerdict verdict = ConnectionVerdict::overlap;
  /// Ranges of I = v_x + scale*psi(y) over |v| = sqrt(2k) at each point.
  std::array<double, 2> range0{};
  std::array<double, 2> range1{};
  /// The ranges share only an endpoint.
  bool contact = false;
};

std::string to_string(ConnectionVerdict verdict);

/// Interval test with the conserved quantity of torus_magnetic.
ConnectionCertificate no_connection_certificate(const SurfaceModel& model, const Vec2& q0,
                                                const Vec2& q1, double k);

void write_trajectory_csv(std::ostream& out, const SurfaceModel& model, const Trajectory& traj);
void write_trajectory_csv(const std::string& file, const SurfaceModel& model,
                          const Trajectory& traj);

}  // namespace conorbit
