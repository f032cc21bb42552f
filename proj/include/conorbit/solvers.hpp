#pragma once

#include "conorbit/flow.hpp"
#include "conorbit/optimize.hpp"
#include "conorbit/pathspace.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conorbit {

enum class SolveStatus {
  converged,
  max_iters,
  collapsed_to_constant,
  unbounded,
  below_threshold,
  stalled,
  not_applicable,
};

std::string to_string(SolveStatus status);

struct MinimizeConfig {
  int N = 64;
  int max_iters = 50000;
  /// Non-positive selects the default 1e-7 * sqrt(N).
  double grad_tol = 0.0;
  double T_min = 1e-4;
  /// T beyond this, or action below action_floor, is reported as unbounded.
  double T_max = 1e4;
  double action_floor = -1e6;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int memory = 12;
  int multistart = 8;
  std::uint64_t seed = 1;
  int threads = 1;
  /// Stop as soon as the action drops below this value.
  std::optional<double> stop_below;
  /// Speed that flags an iterate as leaving the trust region; non-positive disables.
  double v_max = 0.0;
  bool verify = true;

  double tolerance() const;
  void validate() const;
};

struct SolveReport {
  SolveStatus status = SolveStatus::max_iters;
  DiscretePath path;
  ActionValue action;
  ResidualReport residuals;
  double k = 0.0;
  int iterations = 0;
  /// Gradient norm over (s0, nodes, s1, T) at the returned path.
  double grad_norm = 0.0;
  std::vector<double> trace;
  /// Iterates whose action fell below the coercivity lower bound.
  int bound_violations = 0;
  /// Largest accepted action increase (rounding noise in the line search).
  double worst_increase = 0.0;
  bool trust_region_hit = false;
  std::string message;
};

/// Minimize the discrete free-time action over the free variables of `space`
/// starting from `init` (whose segment count is kept).
SolveReport minimize_action(const SurfaceModel& model, const PathSpace& space, double k,
                            const DiscretePath& init, const MinimizeConfig& cfg);

/// Lowest action first; ties within 1e-8 go to the smaller T.
bool better_solution(const SolveReport& a, const SolveReport& b);

struct MultistartResult {
  SolveReport best;
  std::vector<SolveReport> runs;
};

MultistartResult multistart_minimize(const SurfaceModel& model, const PathSpace& space, double k,
                                     const std::vector<DiscretePath>& inits,
                                     const MinimizeConfig& cfg);

/// Seeds for an open path space: straight chords with random endpoint
/// parameters and T at the optimal value for the chord, all in the lift given by offset1.
std::vector<DiscretePath> random_chords(const SurfaceModel& model, const PathSpace& space,
                                        double k, Vec2 offset1, int count, int segments,
                                        std::uint64_t seed);

/// Parameter of the point of a closed curve nearest to q (0 for a point).
double nearest_parameter(const Chart& chart, const BoundarySpec& q, const Vec2& target);

/// Constant path at a point of Q0 and Q1 with the lift data placing it on both curves.
DiscretePath constant_path_at(const SurfaceModel& model, const PathSpace& space,
                              const Vec2& anchor, int segments, double T);

/// Straight chord Q0(s0) -> Q1(s1) lifted into the component of `reference`
/// (on the torus the end lift is shifted until the windings agree).
DiscretePath chord_in_component(const SurfaceModel& model, const PathSpace& space,
                                const DiscretePath& reference, double s0, double s1,
                                int segments);

struct ChordSearch {
  DiscretePath path;
  /// Action at the optimal T; +inf when no chord has a bounded optimum.
  double action = 0.0;
};

/// Most negative chord over a grid of endpoint parameters, each at its optimal T.
ChordSearch best_chord(const SurfaceModel& model, const PathSpace& space,
                       const DiscretePath& reference, double k, int grid, int segments);

// ---- mountain pass ----------------------------------------------------------------

struct StringConfig {
  int beads = 16;
  int N = 48;
  int max_iters = 4000;
  /// Step of the preconditioned string update.
  double step = 0.25;
  /// Required gradient norm at the saddle.
  double tol = 1e-4;
  /// Radius of the neighbourhood of the anchor used in the lower bound.
  double epsilon = 0.1;
  /// Grid used to seed the negative-action head.
  int head_grid = 64;
  int polish_iters = 4000;
  MinimizeConfig head;
};

struct StringState {
  std::vector<DiscretePath> beads;
};

struct MountainPassReport {
  SolveStatus status = SolveStatus::not_applicable;
  /// Minimax value over the string (the saddle action when the saddle converged).
  double minimax = 0.0;
  /// 2 eps sqrt(a (k - e0)).
  double alpha = 0.0;
  /// (2 sqrt(a (k - c_E)) - c_theta) eps with local constants near the anchor.
  double alpha_local = 0.0;
  double T0 = 0.0;
  double head_action = 0.0;
  double tail_action = 0.0;
  SolveReport saddle;
  std::vector<double> bead_actions;
  StringState string;
  int iterations = 0;
  /// Gradient norm at the saddle candidate.
  double residual = 0.0;
  /// Tail kept action <= alpha/4 and head kept action < 0 throughout.
  bool class_invariant = true;
  std::string message;
};

/// String method between the constant path at `anchor` and a negative-action head.
/// The last bead of `warm` seeds the head when its action is still negative.
MountainPassReport mountain_pass(const SurfaceModel& model, const PathSpace& space,
                                 const Vec2& anchor, double k, const StringConfig& cfg,
                                 const StringState* warm = nullptr);

struct MinimaxRow {
  double k = 0.0;
  double c_omega = 0.0;
  bool converged = false;
  double T_star = 0.0;
  double residual = 0.0;
  SolveStatus status = SolveStatus::not_applicable;
};

struct MinimaxCurve {
  std::vector<MinimaxRow> rows;
  /// Largest decrease between consecutive rows (0 when nondecreasing).
  double worst_decrease = 0.0;
  /// Grid points where T* exceeded the difference quotient bound.
  std::vector<double> suspect_k;
};

MinimaxCurve struwe_scan(const SurfaceModel& model, const PathSpace& space, const Vec2& anchor,
                         const std::vector<double>& k_grid, const StringConfig& cfg);

void write_minimax_csv(std::ostream& out, const MinimaxCurve& curve);
void write_solve_summary_csv(std::ostream& out, const std::vector<std::string>& labels,
                             const std::vector<SolveReport>& reports);

}  // namespace conorbit
