#pragma once

#include "conorbit/boundary.hpp"
#include "conorbit/models.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace conorbit {

/// Polygon x_0..x_N in lifted chart coordinates with total time T.
///
/// For open paths x_0 = Q0(s0) + offset0 and x_N = Q1(s1) + offset1, the offsets
/// being lattice vectors that select the lift (zero off the torus).
struct DiscretePath {
  std::vector<Vec2> nodes;
  double s0 = 0.0;
  double s1 = 0.0;
  double T = 1.0;
  Vec2 offset0 = Vec2::Zero();
  Vec2 offset1 = Vec2::Zero();

  int segments() const { return static_cast<int>(nodes.size()) - 1; }
};

struct ActionValue {
  double A = 0.0;
  double dA_dT = 0.0;
  double length = 0.0;   // Riemannian length of the polygon
  double kinetic = 0.0;  // integral of |x'(s)|^2 over s in [0, 1]
  double T = 0.0;
  double energy_mean = 0.0;  // time average of E over segments
  double energy_min = 0.0;
  double energy_max = 0.0;
  double max_speed = 0.0;
};

/// Per-segment quantities at the midpoint with velocity chord / tau.
struct SegmentSample {
  Vec2 midpoint;
  Vec2 velocity;
  LagrangianSample lagrangian;
};

/// Exact gradient of the discrete action with respect to every node and T.
struct NodeGradient {
  std::vector<Vec2> nodes;
  double dT = 0.0;
};

/// Midpoint-rule free-time action; fills the node gradient in the same pass when asked.
ActionValue discrete_action(const SurfaceModel& model, const DiscretePath& path, double k,
                            NodeGradient* gradient = nullptr);

NodeGradient node_gradient(const SurfaceModel& model, const DiscretePath& path, double k);

std::vector<SegmentSample> segment_samples(const SurfaceModel& model, const DiscretePath& path);

/// Discrete endpoint momenta: minus the node gradient at x_0 and the node gradient at x_N.
std::pair<Vec2, Vec2> endpoint_momenta(const SurfaceModel& model, const DiscretePath& path);

/// (a/T) length^2 + T (k - b).
double lower_bound_estimate(const ActionValue& value, double a, double b, double k);

/// Decomposition A(T) = K/T + Theta + W T, valid for structured (quadratic in v) models.
struct TimeSplit {
  double K = 0.0;
  double Theta = 0.0;
  double W = 0.0;
};

TimeSplit time_split(const SurfaceModel& model, const DiscretePath& path, double k);

/// Minimizer of the action over T with the polygon fixed; nullopt when the
/// action is unbounded below in T.
std::optional<double> optimal_time(const SurfaceModel& model, const DiscretePath& path, double k);

/// Free variables of a path problem.
///
/// Open mode: (s0 if Q0 is a curve, x_1..x_{N-1}, s1 if Q1 is a curve, T).
/// Loop mode: (x_0..x_{N-1}, T) with x_N = x_0 + winding.
class PathSpace {
 public:
  static PathSpace open(BoundarySpec q0, BoundarySpec q1);
  static PathSpace loop(Vec2 winding);

  bool is_loop() const { return loop_; }
  const BoundarySpec& q0() const { return q0_; }
  const BoundarySpec& q1() const { return q1_; }
  Vec2 winding() const { return winding_; }

  Eigen::Index dimension(int segments) const;
  Eigen::Index time_index(int segments) const { return dimension(segments) - 1; }
  Eigen::VectorXd pack(const DiscretePath& path) const;
  /// Overwrite the free variables of `path` and re-derive the constrained endpoints.
  void unpack(const Eigen::VectorXd& z, DiscretePath& path) const;
  /// Recompute x_0 and x_N from (s0, offset0), (s1, offset1) or the loop closure.
  void sync(DiscretePath& path) const;
  /// Set offset0/offset1 from the stored endpoints (for paths read from disk).
  void infer_offsets(DiscretePath& path) const;
  /// Chain rule from the node gradient to the free variables.
  Eigen::VectorXd reduce_gradient(const DiscretePath& path, const NodeGradient& g) const;

  /// Straight polygon from Q0(s0) + offset0 to Q1(s1) + offset1.
  DiscretePath straight(double s0, double s1, Vec2 offset1, int segments, double T,
                        Vec2 offset0 = Vec2::Zero()) const;
  /// Polygon through the given vertices (the first and last must lie on Q0/Q1 lifts).
  DiscretePath polyline(const std::vector<Vec2>& vertices, double s0, double s1, int segments,
                        double T) const;

 private:
  bool loop_ = false;
  BoundarySpec q0_, q1_;
  Vec2 winding_ = Vec2::Zero();
};

/// Gradient over (s0, x_1..x_{N-1}, s1, T) for open paths (loop layout for loops).
Eigen::VectorXd action_gradient(const SurfaceModel& model, const PathSpace& space,
                                const DiscretePath& path, double k);

/// Resample vertices into a polygon with `segments` pieces, keeping every vertex
/// as a node; segments are allotted to edges in proportion to their length.
std::vector<Vec2> resample_polyline(const std::vector<Vec2>& vertices, int segments);

/// Integer winding of the loop (Q0 arc) # path # (Q1 arc back) # reference, where the
/// reference joins Q1(0) to Q0(0) by the minimal-image chord.
IVec2 path_winding(const Chart& chart, const DiscretePath& path, const BoundarySpec& q0,
                   const BoundarySpec& q1);

/// Coset of path_winding modulo the lattice generated by the boundary generators.
IVec2 classify_component(const Chart& chart, const DiscretePath& path, const BoundarySpec& q0,
                         const BoundarySpec& q1);

// ---- serialization --------------------------------------------------------------

void write_path_csv(std::ostream& out, const DiscretePath& path);
void write_path_csv(const std::string& file, const DiscretePath& path);
DiscretePath read_path_csv(std::istream& in);
DiscretePath read_path_csv(const std::string& file);

}  // namespace conorbit
