#include "conorbit/boundary.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace conorbit {

BoundarySpec BoundarySpec::point(Vec2 q) {
  BoundarySpec b;
  b.kind_ = Kind::point;
  b.point_ = q;
  b.description_ = "point(" + std::to_string(q.x()) + ", " + std::to_string(q.y()) + ")";
  return b;
}

BoundarySpec BoundarySpec::curve(CurveFn q, CurveFn dq, Vec2 period_shift, LevelFn level,
                                 std::string description) {
  BoundarySpec b;
  b.kind_ = Kind::closed_curve;
  b.q_ = std::move(q);
  b.dq_ = std::move(dq);
  b.shift_ = period_shift;
  b.level_ = std::move(level);
  b.description_ = std::move(description);
  return b;
}

BoundarySpec BoundarySpec::circle(Vec2 center, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("circle radius must be positive");
  constexpr double tau = 2.0 * std::numbers::pi;
  auto q = [center, radius](double s) {
    return Vec2(center.x() + radius * std::cos(tau * s), center.y() + radius * std::sin(tau * s));
  };
  auto dq = [radius](double s) {
    return Vec2(-tau * radius * std::sin(tau * s), tau * radius * std::cos(tau * s));
  };
  auto level = [center, radius](const Chart& chart, const Vec2& p) {
    return chart.displacement(center, p).squaredNorm() - radius * radius;
  };
  return curve(q, dq, Vec2::Zero(), level,
               "circle(" + std::to_string(center.x()) + ", " + std::to_string(center.y()) + "; " +
                   std::to_string(radius) + ")");
}

BoundarySpec BoundarySpec::horizontal_line(double y) {
  auto q = [y](double s) { return Vec2(s, y); };
  auto dq = [](double) { return Vec2(1.0, 0.0); };
  auto level = [y](const Chart& chart, const Vec2& p) {
    return chart.displacement(Vec2(p.x(), y), p).y();
  };
  return curve(q, dq, Vec2(1.0, 0.0), level, "line(y=" + std::to_string(y) + ")");
}

BoundarySpec BoundarySpec::vertical_line(double x) {
  auto q = [x](double s) { return Vec2(x, s); };
  auto dq = [](double) { return Vec2(0.0, 1.0); };
  auto level = [x](const Chart& chart, const Vec2& p) {
    return chart.displacement(Vec2(x, p.y()), p).x();
  };
  return curve(q, dq, Vec2(0.0, 1.0), level, "line(x=" + std::to_string(x) + ")");
}

Vec2 BoundarySpec::at(double s) const { return is_point() ? point_ : q_(s); }

Vec2 BoundarySpec::tangent(double s) const { return is_point() ? Vec2::Zero() : dq_(s); }

std::vector<IVec2> BoundarySpec::generators() const {
  if (is_point() || shift_.isZero()) return {};
  return {IVec2{std::llround(shift_.x()), std::llround(shift_.y())}};
}

double BoundarySpec::level(const Chart& chart, const Vec2& q) const {
  if (is_point()) return chart.displacement(point_, q).norm();
  return level_(chart, q);
}

std::vector<Vec2> intersect(const Chart& chart, const BoundarySpec& q0, const BoundarySpec& q1) {
  std::vector<Vec2> found;
  auto add = [&](const Vec2& p) {
    for (const Vec2& f : found) {
      if (chart.displacement(f, p).norm() < 1e-6) return;
    }
    found.push_back(chart.canonical(p));
  };
  constexpr double kOnCurve = 1e-8;
  if (q0.is_point() && q1.is_point()) {
    if (chart.displacement(q0.at(0), q1.at(0)).norm() < kOnCurve) add(q0.at(0));
    return found;
  }
  if (q0.is_point() || q1.is_point()) {
    const BoundarySpec& pt = q0.is_point() ? q0 : q1;
    const BoundarySpec& cv = q0.is_point() ? q1 : q0;
    if (std::abs(cv.level(chart, pt.at(0))) < kOnCurve) add(pt.at(0));
    return found;
  }
  constexpr int kSamples = 2048;
  auto f = [&](double s) { return q1.level(chart, q0.at(s)); };
  double prev = f(0.0);
  for (int i = 1; i <= kSamples; ++i) {
    double s_lo = double(i - 1) / kSamples, s_hi = double(i) / kSamples;
    double cur = f(s_hi);
    if (prev == 0.0) add(q0.at(s_lo));
    if (prev * cur < 0.0) {
      double a = s_lo, b = s_hi, fa = prev;
      for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double m = 0.5 * (a + b);
        double fm = f(m);
        if (fa * fm <= 0.0) {
          b = m;
        } else {
          a = m;
          fa = fm;
        }
      }
      double s = 0.5 * (a + b);
      // jumps of a wrapped level function also change sign; keep genuine roots only
      if (std::abs(f(s)) < kOnCurve) add(q0.at(s));
    }
    prev = cur;
  }
  return found;
}

// ---- lattice ------------------------------------------------------------------

namespace {

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

long long ext_gcd(long long a, long long b, long long& x, long long& y) {
  if (b == 0) {
    x = a >= 0 ? 1 : -1;
    y = 0;
    return std::abs(a);
  }
  long long x1, y1;
  long long g = ext_gcd(b, a % b, x1, y1);
  x = y1;
  y = x1 - (a / b) * y1;
  return g;
}

}  // namespace

LatticeClass::LatticeClass(const std::vector<IVec2>& generators) {
  IVec2 lead{0, 0};
  long long tail = 0;  // gcd of second coordinates once the first is eliminated
  for (const IVec2& r : generators) {
    if (r[0] == 0 && r[1] == 0) continue;
    if (lead[0] == 0 && r[0] == 0) {
      tail = std::gcd(tail, r[1]);
      continue;
    }
    long long x, y;
    long long g = ext_gcd(lead[0], r[0], x, y);
    IVec2 combined{x * lead[0] + y * r[0], x * lead[1] + y * r[1]};
    long long rest = (r[0] / g) * lead[1] - (lead[0] / g) * r[1];
    lead = combined;
    tail = std::gcd(tail, rest);
  }
  if (lead[0] < 0) lead = {-lead[0], -lead[1]};
  if (lead[0] != 0) {
    if (tail != 0) lead[1] -= floor_div(lead[1], tail) * tail;
    basis_.push_back(lead);
  }
  if (tail != 0) basis_.push_back({0, std::abs(tail)});
}

int LatticeClass::rank() const { return static_cast<int>(basis_.size()); }

IVec2 LatticeClass::reduce(IVec2 w) const {
  for (const IVec2& b : basis_) {
    if (b[0] != 0) {
      long long t = floor_div(w[0], b[0]);
      w[0] -= t * b[0];
      w[1] -= t * b[1];
    } else {
      w[1] -= floor_div(w[1], b[1]) * b[1];
    }
  }
  return w;
}

LatticeClass LatticeClass::join(const LatticeClass& a, const LatticeClass& b) {
  std::vector<IVec2> gens = a.basis_;
  gens.insert(gens.end(), b.basis_.begin(), b.basis_.end());
  return LatticeClass(gens);
}

std::string to_string(const IVec2& w) {
  return "(" + std::to_string(w[0]) + "," + std::to_string(w[1]) + ")";
}

}  // namespace conorbit
