#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace conorbit {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

enum class ChartKind { flat_torus, half_plane, plane_patch };

std::string to_string(ChartKind kind);

/// Raised when a point leaves the coordinate chart of a model.
class DomainError : public std::runtime_error {
 public:
  DomainError(const std::string& what, Vec2 where, int index = -1)
      : std::runtime_error(what), where_(where), index_(index) {}

  Vec2 where() const { return where_; }
  /// Node index when the offending point belongs to a path, -1 otherwise.
  int index() const { return index_; }

 private:
  Vec2 where_;
  int index_;
};

/// Requested operation does not apply to the given model or chart.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wrap a scalar into [0, 1).
inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// Coordinate chart: domain membership plus the torus identification.
struct Chart {
  ChartKind kind = ChartKind::plane_patch;
  // plane_patch bounds; ignored for the other kinds.
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
  // half_plane points with x2 at or below this are outside the chart.
  double half_plane_floor = 1e-6;

  bool periodic() const { return kind == ChartKind::flat_torus; }

  bool contains(const Vec2& q) const {
    switch (kind) {
      case ChartKind::flat_torus:
        return std::isfinite(q.x()) && std::isfinite(q.y());
      case ChartKind::half_plane:
        return std::isfinite(q.x()) && q.y() > half_plane_floor;
      case ChartKind::plane_patch:
        return q.x() >= xmin && q.x() <= xmax && q.y() >= ymin && q.y() <= ymax;
    }
    return false;
  }

  /// Representative of q in the fundamental domain (identity off the torus).
  Vec2 canonical(const Vec2& q) const {
    if (!periodic()) return q;
    return {wrap_unit(q.x()), wrap_unit(q.y())};
  }

  /// Minimal-image displacement from a to b.
  Vec2 displacement(const Vec2& a, const Vec2& b) const {
    Vec2 d = b - a;
    if (periodic()) {
      d.x() -= std::round(d.x());
      d.y() -= std::round(d.y());
    }
    return d;
  }

  void require(const Vec2& q, int index = -1) const {
    if (!contains(q)) {
      std::string msg = "point (" + std::to_string(q.x()) + ", " + std::to_string(q.y()) +
                        ") outside " + to_string(kind) + " chart";
      if (index >= 0) msg += " at node " + std::to_string(index);
      throw DomainError(msg, q, index);
    }
  }
};

}  // namespace conorbit
