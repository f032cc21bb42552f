#pragma once

#include "conorbit/solvers.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conorbit {

/// Periodic grid function plus a linear part: u(q) = lin . q + U(q).
struct GridFunction {
  int n = 0;
  std::vector<double> values;  // row-major, values[i * n + j] at (i/n, j/n)
  Vec2 linear = Vec2::Zero();

  double at(int i, int j) const;
  /// Central-difference differential at grid node (i, j).
  Vec2 grid_gradient(int i, int j) const;
  /// Differential of the Catmull-Rom interpolant at an arbitrary point.
  Vec2 smooth_gradient(const Vec2& q) const;
};

/// Enclosure of a critical energy value.
struct CriticalBracket {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  std::string method;
  /// Path or loop with negative action at lower_k; its space is lower_space.
  std::optional<DiscretePath> lower_witness;
  std::optional<PathSpace> lower_space;
  double lower_k = 0.0;
  std::optional<GridFunction> upper_witness;
  /// Upper bound is only the absence of a negative path within the search budget.
  bool soft_upper = false;
  std::string note;

  double width() const { return upper - lower; }
};

// ---- obstruction and zero-section values ---------------------------------------

/// min over Q of the lowest Hamiltonian value on the conormal fibre.
double conormal_min(const SurfaceModel& model, const BoundarySpec& q, double* argmin = nullptr);

/// max over i of min over Q_i of H on the conormal bundle of Q_i.
double k_obstruction(const SurfaceModel& model, const BoundarySpec& q0, const BoundarySpec& q1);

struct ZeroSectionMax {
  double value = 0.0;
  Vec2 point = Vec2::Zero();
};

/// Max of E(q, 0) over the working region: 512^2 grid plus local refinement.
ZeroSectionMax e0(const SurfaceModel& model);

// ---- loop probes ------------------------------------------------------------------

struct ProbeConfig {
  int N = 64;
  /// Minimization runs started from the best seeds when no seed is negative.
  int multistart = 4;
  int max_iters = 3000;
  /// Ladder loops use up to this many horizontal traversals.
  int max_rungs = 8;
  int threads = 1;
  std::uint64_t seed = 7;
};

struct LoopProbeResult {
  IVec2 winding{0, 0};
  double best_action = 0.0;
  DiscretePath witness;
  /// Best seed already had negative action (no minimization needed).
  bool from_seed = false;
  SolveStatus status = SolveStatus::converged;
};

/// Closed loop x(t) = base + t w, straight at unit-time-optimal T.
DiscretePath straight_loop(const SurfaceModel& model, const Vec2& base, const IVec2& winding,
                           int segments, double k);

/// Contractible ladder loop: n traversals of the line y = y_hi in -x, a vertical
/// drop to y_lo, n traversals in +x, and the climb back (transposed when `vertical`).
DiscretePath ladder_loop(const SurfaceModel& model, double level_hi, double level_lo, int n,
                         bool vertical, int segments_per_unit, double k);

/// Lowest loop action found in a winding class at energy k.
LoopProbeResult loop_probe(const SurfaceModel& model, const IVec2& winding, double k,
                           const ProbeConfig& cfg);

/// Loop classes sampled from a sublattice of Z^2 (contractible first).
std::vector<IVec2> probe_classes(const LatticeClass& lattice);

// ---- Hamiltonian upper bound ------------------------------------------------------

struct HamiltonianBoundConfig {
  int grid = 64;
  double beta_start = 8.0;
  double beta_end = 1024.0;
  int iters_per_stage = 400;
};

struct HamiltonianBound {
  double value = 0.0;  // hard max of H(q, du) on the grid
  double fine_value = 0.0;  // re-evaluated on a 4x finer grid through the interpolant
  bool fine_ok = false;  // fine_value <= 1.05 value
  bool stalled = false;
  GridFunction u;
};

/// Upper bound for inf_u sup_q H(q, du) where u is periodic up to a linear part
/// vanishing on `lattice` (empty lattice: abelian cover; full lattice: torus itself).
HamiltonianBound hamiltonian_sup_upper(const SurfaceModel& model, const LatticeClass& lattice,
                                       const HamiltonianBoundConfig& cfg);

// ---- brackets ---------------------------------------------------------------------

enum class CriticalKind { c, cu_c0, c_pair };

struct BracketConfig {
  double tol = 0.02;
  int max_bisections = 14;
  ProbeConfig probe;
  HamiltonianBoundConfig hamiltonian;
};

/// Bisection between loop-probe witnesses (below) and the grid Hamiltonian bound (above)
/// over the loops whose classes lie in `lattice`.
CriticalBracket bracket_loops(const SurfaceModel& model, const LatticeClass& lattice,
                              const std::string& name, const BracketConfig& cfg);

CriticalBracket bracket_critical(const SurfaceModel& model, CriticalKind kind,
                                 const BracketConfig& cfg, const BoundarySpec* q0 = nullptr,
                                 const BoundarySpec* q1 = nullptr);

/// Sublattice generated by the boundary generators of both curves.
LatticeClass pair_lattice(const BoundarySpec& q0, const BoundarySpec& q1);

struct KnConfig {
  double lo = 0.0;
  double hi = 1.0;
  double tol = 0.02;
  int N = 32;
  int head_grid = 64;
  int multistart = 4;
  int max_iters = 2000;
  std::uint64_t seed = 11;
  int threads = 1;
};

/// Bracket of the least k making A_k nonnegative on the component of constant paths at anchor.
CriticalBracket k_N_estimate(const SurfaceModel& model, const PathSpace& space, const Vec2& anchor,
                             const KnConfig& cfg);

/// Candidate threshold of one isolating family: max over the family of E(q,0) + |theta_q|^2/(4a).
double k_family(const SurfaceModel& model, const std::vector<Vec2>& family);

/// min(c-pair upper bound, min over families of k_family). With no families the whole
/// intersection is one family. Throws when the curves do not intersect.
double k_omega(const SurfaceModel& model, const BoundarySpec& q0, const BoundarySpec& q1,
               const std::vector<std::vector<Vec2>>& families, double c_pair_upper);

// ---- chain audit ------------------------------------------------------------------

struct ChainLink {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
};

struct ChainReport {
  std::vector<ChainLink> links;  // e0, c_u, c_pair, c, k0, e0 + |theta|^2/(4a)
  double obstruction = 0.0;
  bool obstruction_ok = true;
  bool passed = true;
  std::string failure;
};

/// Checks lower(link i) <= upper(link i+1) + 1e-6 along the chain and k_obstruction <= c_pair.
ChainReport audit_chain(std::vector<ChainLink> links, double obstruction);

struct ChainBrackets {
  ZeroSectionMax e0;
  CriticalBracket cu, c_pair, c;
  ChainReport report;
};

ChainBrackets chain_audit(const SurfaceModel& model, const BoundarySpec& q0,
                          const BoundarySpec& q1, const BracketConfig& cfg);

void write_bracket_csv_header(std::ostream& out);
void write_bracket_csv_row(std::ostream& out, const CriticalBracket& b,
                           const std::string& lower_file, const std::string& upper_file);
void write_grid_function_csv(std::ostream& out, const GridFunction& u);

}  // namespace conorbit
