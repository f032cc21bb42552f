#pragma once

#include "conorbit/geometry.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace conorbit {

using IVec2 = std::array<long long, 2>;

/// Endpoint submanifold: a single point or a closed parametrized curve.
///
/// Curves are stored as lifts to the chart plane: at(s + 1) = at(s) + period_shift().
/// For a contractible curve the shift is zero; a horizontal torus line has shift (1, 0).
class BoundarySpec {
 public:
  enum class Kind { point, closed_curve };

  using CurveFn = std::function<Vec2(double)>;
  /// Signed function vanishing on the curve, evaluated with the chart's identification.
  using LevelFn = std::function<double(const Chart&, const Vec2&)>;

  static BoundarySpec point(Vec2 q);
  /// Euclidean circle in chart coordinates, counter-clockwise from angle 0.
  static BoundarySpec circle(Vec2 center, double radius);
  /// Torus line {y = c}, traversed in +x.
  static BoundarySpec horizontal_line(double y);
  /// Torus line {x = c}, traversed in +y.
  static BoundarySpec vertical_line(double x);
  static BoundarySpec curve(CurveFn q, CurveFn dq, Vec2 period_shift, LevelFn level,
                            std::string description);

  Kind kind() const { return kind_; }
  bool is_point() const { return kind_ == Kind::point; }

  Vec2 at(double s) const;
  Vec2 tangent(double s) const;
  Vec2 period_shift() const { return shift_; }
  /// Integer winding generators of the curve's fundamental group image (empty if contractible).
  std::vector<IVec2> generators() const;
  double level(const Chart& chart, const Vec2& q) const;
  const std::string& description() const { return description_; }

 private:
  Kind kind_ = Kind::point;
  Vec2 point_ = Vec2::Zero();
  CurveFn q_, dq_;
  Vec2 shift_ = Vec2::Zero();
  LevelFn level_;
  std::string description_;
};

/// Points of Q0 ∩ Q1, deduplicated, found by sign changes of Q1's level function
/// along 2048 samples of Q0 followed by bisection.
std::vector<Vec2> intersect(const Chart& chart, const BoundarySpec& q0, const BoundarySpec& q1);

/// Sublattice of Z^2 in row Hermite normal form with canonical coset representatives.
class LatticeClass {
 public:
  explicit LatticeClass(const std::vector<IVec2>& generators = {});

  int rank() const;
  const std::vector<IVec2>& basis() const { return basis_; }
  IVec2 reduce(IVec2 w) const;
  bool same_coset(IVec2 a, IVec2 b) const { return reduce(a) == reduce(b); }
  bool contains(IVec2 w) const { return reduce(w) == IVec2{0, 0}; }

  /// Sublattice generated by both.
  static LatticeClass join(const LatticeClass& a, const LatticeClass& b);

 private:
  std::vector<IVec2> basis_;
};

std::string to_string(const IVec2& w);

}  // namespace conorbit
