#include "conorbit/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace conorbit {

std::string to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::flat_torus:
      return "flat_torus";
    case ChartKind::half_plane:
      return "half_plane";
    case ChartKind::plane_patch:
      return "plane_patch";
  }
  return "unknown";
}

// ---- PsiProfile -------------------------------------------------------------

PsiProfile::PsiProfile(double lo, double hi) : PsiProfile(lo, hi, 0.5 * (lo + hi)) {}

PsiProfile::PsiProfile(double lo, double hi, double peak) : lo_(lo), hi_(hi), peak_(peak) {
  if (!(0.0 < lo && lo < peak && peak < hi && hi < 1.0)) {
    throw std::invalid_argument("psi profile needs 0 < lo < peak < hi < 1");
  }
}

double PsiProfile::rescale(double y, double* dtau_dy) const {
  if (y < peak_) {
    *dtau_dy = 1.0 / (peak_ - lo_);
    return (y - peak_) / (peak_ - lo_);
  }
  *dtau_dy = 1.0 / (hi_ - peak_);
  return (y - peak_) / (hi_ - peak_);
}

double PsiProfile::operator()(double y) const {
  if (y <= lo_ || y >= hi_) return 0.0;
  double scale;
  double tau = rescale(y, &scale);
  double s = 1.0 - tau * tau;
  if (s <= 0.0) return 0.0;
  return std::exp(1.0 - 1.0 / s);
}

double PsiProfile::derivative(double y) const {
  if (y <= lo_ || y >= hi_) return 0.0;
  double dtau_dy;
  double tau = rescale(y, &dtau_dy);
  double s = 1.0 - tau * tau;
  if (s <= 0.0) return 0.0;
  double psi = std::exp(1.0 - 1.0 / s);
  return psi * (-2.0 * tau / (s * s)) * dtau_dy;
}

// ---- SurfaceModel -------------------------------------------------------------

SurfaceModel SurfaceModel::structured(std::string id, Chart chart, TermsFn terms, bool magnetic) {
  SurfaceModel m;
  m.id_ = std::move(id);
  m.chart_ = chart;
  m.terms_ = std::move(terms);
  m.magnetic_ = magnetic;
  return m;
}

SurfaceModel SurfaceModel::custom(std::string id, Chart chart, ScalarLagrangian lagrangian,
                                  MetricFn metric) {
  SurfaceModel m;
  m.id_ = std::move(id);
  m.chart_ = chart;
  m.scalar_ = std::move(lagrangian);
  m.metric_ = std::move(metric);
  return m;
}

void SurfaceModel::set_working_region(double xmin, double xmax, double ymin, double ymax) {
  region_ = {xmin, xmax, ymin, ymax};
}

Vec2 SurfaceModel::random_point(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> ux(region_[0], region_[1]);
  std::uniform_real_distribution<double> uy(region_[2], region_[3]);
  double x = ux(rng);
  double y = uy(rng);
  return {x, y};
}

FieldTerms SurfaceModel::terms(const Vec2& q) const {
  if (!terms_) throw UnsupportedError("model '" + id_ + "' has no structured field terms");
  return terms_(q);
}

Mat2 SurfaceModel::metric(const Vec2& q) const {
  if (terms_) return terms_(q).g;
  return metric_(q);
}

double SurfaceModel::norm(const Vec2& q, const Vec2& v) const {
  return std::sqrt(v.dot(metric(q) * v));
}

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kFdStep2 = 1e-4;

Vec2 fd_gradient(const std::function<double(const Vec2&)>& f, const Vec2& x, double h) {
  Vec2 g;
  for (int i = 0; i < 2; ++i) {
    Vec2 xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace

double SurfaceModel::lagrangian(const Vec2& q, const Vec2& v) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    return 0.5 * v.dot(t.g * v) + t.theta.dot(v) - t.V;
  }
  return scalar_(q, v);
}

Vec2 SurfaceModel::dL_dv(const Vec2& q, const Vec2& v) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    return t.g * v + t.theta;
  }
  return fd_gradient([&](const Vec2& w) { return scalar_(q, w); }, v, kFdStep);
}

Vec2 SurfaceModel::dL_dq(const Vec2& q, const Vec2& v) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    Vec2 out;
    for (int k = 0; k < 2; ++k) {
      out[k] = 0.5 * v.dot(t.dg[k] * v) + t.dtheta.col(k).dot(v) - t.dV[k];
    }
    return out;
  }
  return fd_gradient([&](const Vec2& x) { return scalar_(x, v); }, q, kFdStep);
}

LagrangianSample SurfaceModel::sample(const Vec2& q, const Vec2& v) const {
  LagrangianSample s;
  s.q = q;
  s.v = v;
  if (terms_) {
    FieldTerms t = terms_(q);
    Vec2 gv = t.g * v;
    double kinetic = 0.5 * v.dot(gv);
    s.L = kinetic + t.theta.dot(v) - t.V;
    s.dL_dv = gv + t.theta;
    for (int k = 0; k < 2; ++k) {
      s.dL_dq[k] = 0.5 * v.dot(t.dg[k] * v) + t.dtheta.col(k).dot(v) - t.dV[k];
    }
    s.E = kinetic + t.V;
    return s;
  }
  s.L = scalar_(q, v);
  s.dL_dv = dL_dv(q, v);
  s.dL_dq = dL_dq(q, v);
  s.E = s.dL_dv.dot(v) - s.L;
  return s;
}

Mat2 SurfaceModel::d2L_dv2(const Vec2& q, const Vec2& v) const {
  if (terms_) return terms_(q).g;
  Mat2 h;
  const double e = kFdStep2;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      Vec2 di = Vec2::Unit(i) * e, dj = Vec2::Unit(j) * e;
      h(i, j) = (scalar_(q, v + di + dj) - scalar_(q, v + di - dj) - scalar_(q, v - di + dj) +
                 scalar_(q, v - di - dj)) /
                (4.0 * e * e);
    }
  }
  return 0.5 * (h + h.transpose());
}

Mat2 SurfaceModel::d2L_dvdq(const Vec2& q, const Vec2& v) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    Mat2 m;
    for (int k = 0; k < 2; ++k) m.col(k) = t.dg[k] * v + t.dtheta.col(k);
    return m;
  }
  Mat2 m;
  const double e = kFdStep2;
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) {
      Vec2 dv = Vec2::Unit(i) * e, dq = Vec2::Unit(k) * e;
      m(i, k) = (scalar_(q + dq, v + dv) - scalar_(q - dq, v + dv) - scalar_(q + dq, v - dv) +
                 scalar_(q - dq, v - dv)) /
                (4.0 * e * e);
    }
  }
  return m;
}

double SurfaceModel::energy(const Vec2& q, const Vec2& v) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    return 0.5 * v.dot(t.g * v) + t.V;
  }
  return dL_dv(q, v).dot(v) - scalar_(q, v);
}

Vec2 SurfaceModel::theta(const Vec2& q) const {
  if (terms_) return terms_(q).theta;
  return dL_dv(q, Vec2::Zero());
}

double SurfaceModel::dual_norm(const Vec2& q, const Vec2& p) const {
  Mat2 g = metric(q);
  return std::sqrt(std::max(0.0, p.dot(g.ldlt().solve(p))));
}

double SurfaceModel::hamiltonian(const Vec2& q, const Vec2& p) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    Vec2 d = p - t.theta;
    return 0.5 * d.dot(t.g.ldlt().solve(d)) + t.V;
  }
  return hamiltonian_newton(q, p).value;
}

Vec2 SurfaceModel::hamiltonian_dp(const Vec2& q, const Vec2& p) const {
  if (terms_) {
    FieldTerms t = terms_(q);
    return t.g.ldlt().solve(p - t.theta);
  }
  return hamiltonian_newton(q, p).velocity;
}

HamiltonianSolve SurfaceModel::hamiltonian_newton(const Vec2& q, const Vec2& p) const {
  // maximize phi(v) = <p, v> - L(q, v); phi is strictly concave.
  auto phi = [&](const Vec2& v) { return p.dot(v) - lagrangian(q, v); };
  Vec2 v = metric(q).ldlt().solve(p - theta(q));
  HamiltonianSolve out;
  constexpr int kMaxIter = 100;
  // the attainable residual scales with the size of the momentum
  const double kTol = 1e-10 * (1.0 + p.norm());
  for (int it = 0; it < kMaxIter; ++it) {
    Vec2 residual = p - dL_dv(q, v);
    out.residual = residual.norm();
    out.iterations = it;
    if (out.residual <= kTol) {
      out.velocity = v;
      out.value = phi(v);
      return out;
    }
    Vec2 step = d2L_dv2(q, v).ldlt().solve(residual);
    double f0 = phi(v);
    double t = 1.0;
    Vec2 trial = v + step;
    while (phi(trial) < f0 - 1e-15 * std::max(1.0, std::abs(f0)) && t > 1e-8) {
      t *= 0.5;
      trial = v + t * step;
    }
    v = trial;
  }
  Vec2 residual = p - dL_dv(q, v);
  out.residual = residual.norm();
  out.iterations = kMaxIter;
  if (out.residual <= kTol) {
    out.velocity = v;
    out.value = phi(v);
    return out;
  }
  std::ostringstream msg;
  msg << "Legendre inner solve did not converge at q=(" << q.x() << ", " << q.y()
      << "), residual " << out.residual;
  throw NumericalError(msg.str());
}

void SurfaceModel::survey(std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double tsup = 0.0;
  double emax = -std::numeric_limits<double>::infinity();
  auto visit = [&](const Vec2& q) {
    if (!chart_.contains(q)) return;
    tsup = std::max(tsup, dual_norm(q, theta(q)));
    emax = std::max(emax, zero_section_energy(q));
  };
  const int grid = 128;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      visit({region_[0] + (region_[1] - region_[0]) * i / grid,
             region_[2] + (region_[3] - region_[2]) * j / grid});
    }
  }
  for (std::size_t s = 0; s < samples; ++s) visit(random_point(rng));
  theta_sup_ = tsup;
  zero_section_max_ = emax;
}

// ---- checks -----------------------------------------------------------------

DerivativeCheck check_derivatives(const SurfaceModel& model, std::size_t samples,
                                  std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uv(-2.0, 2.0);
  DerivativeCheck out;
  for (std::size_t s = 0; s < samples; ++s) {
    Vec2 q = model.random_point(rng);
    Vec2 v{uv(rng), uv(rng)};
    LagrangianSample ls = model.sample(q, v);
    Vec2 fv = fd_gradient([&](const Vec2& w) { return model.lagrangian(q, w); }, v, kFdStep);
    Vec2 fq = fd_gradient([&](const Vec2& x) { return model.lagrangian(x, v); }, q, kFdStep);
    auto rel = [](const Vec2& a, const Vec2& b) {
      return (a - b).norm() / std::max(1.0, b.norm());
    };
    out.max_rel_error_v = std::max(out.max_rel_error_v, rel(ls.dL_dv, fv));
    out.max_rel_error_q = std::max(out.max_rel_error_q, rel(ls.dL_dq, fq));
  }
  out.passed = out.max_rel_error_v <= 1e-6 && out.max_rel_error_q <= 1e-6;
  return out;
}

double certify_quadratic_bounds(const SurfaceModel& model, QuadraticBounds bounds, double vmax,
                                std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ur(0.0, 1.0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < samples; ++s) {
    Vec2 q = model.random_point(rng);
    if (!model.chart().contains(q)) continue;
    double angle = 2.0 * std::numbers::pi * ur(rng);
    double speed = vmax * ur(rng);
    Vec2 dir{std::cos(angle), std::sin(angle)};
    Vec2 v = dir * (speed / model.norm(q, dir));
    double vv = model.norm(q, v);
    double slack = model.lagrangian(q, v) - (bounds.a * vv * vv - bounds.b);
    worst = std::min(worst, slack);
  }
  return worst;
}

LagrangianSample eval_lagrangian(const SurfaceModel& model, const Vec2& q, const Vec2& v) {
  model.chart().require(q);
  return model.sample(q, v);
}

ThetaValue theta_at(const SurfaceModel& model, const Vec2& q) {
  model.chart().require(q);
  ThetaValue out;
  out.covector = model.theta(q);
  out.norm = model.dual_norm(q, out.covector);
  return out;
}

double fenchel_hamiltonian(const SurfaceModel& model, const Vec2& q, const Vec2& p) {
  model.chart().require(q);
  return model.hamiltonian(q, p);
}

double torus_conserved_quantity(const SurfaceModel& model, const Vec2& q, const Vec2& v) {
  if (model.id() != "torus_magnetic" || !model.psi()) {
    throw UnsupportedError("conserved quantity I is defined for torus_magnetic only");
  }
  double scale = model.params().at("theta_scale");
  return v.x() + scale * (*model.psi())(wrap_unit(q.y()));
}

// ---- catalog ------------------------------------------------------------------

const std::vector<CatalogEntry>& model_catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"torus_magnetic",
       "flat torus, L = 1/2|v|^2 + scale*psi(y) v_x with a bump psi supported in [psi_lo, psi_hi]",
       {{"psi_lo", 0.25}, {"psi_hi", 0.75}, {"psi_peak", 0.5}, {"theta_scale", 1.0}}},
      {"torus_mechanical", "flat torus, L = 1/2|v|^2 - amplitude*sin^2(pi x) sin^2(pi y)",
       {{"amplitude", 0.7}}},
      {"half_plane_horocycle",
       "upper half-plane with hyperbolic metric, L = 1/2|v|^2 + scale*dx/y",
       {{"theta_scale", 1.0}}},
      {"plane_patch_custom",
       "flat rectangle, uniform field B, harmonic potential omega, optional quartic term "
       "(quartic > 0 switches to the scalar-Lagrangian path)",
       {{"field", 1.0},
        {"omega", 0.0},
        {"quartic", 0.0},
        {"xmin", -1.0},
        {"xmax", 1.0},
        {"ymin", -1.0},
        {"ymax", 1.0}}},
  };
  return entries;
}

namespace {

ModelParams merge_params(const CatalogEntry& entry, const ModelParams& overrides) {
  ModelParams merged = entry.defaults;
  for (const auto& [key, value] : overrides) {
    if (!merged.contains(key)) {
      throw std::invalid_argument("model '" + entry.id + "' has no parameter '" + key + "'");
    }
    merged[key] = value;
  }
  return merged;
}

SurfaceModel build_torus_magnetic(const ModelParams& p) {
  PsiProfile psi(p.at("psi_lo"), p.at("psi_hi"), p.at("psi_peak"));
  double scale = p.at("theta_scale");
  Chart chart{ChartKind::flat_torus};
  auto terms = [psi, scale](const Vec2& q) {
    FieldTerms t;
    double y = wrap_unit(q.y());
    t.theta = {scale * psi(y), 0.0};
    t.dtheta(0, 1) = scale * psi.derivative(y);
    return t;
  };
  SurfaceModel m = SurfaceModel::structured("torus_magnetic", chart, terms, true);
  m.set_psi(psi);
  m.set_working_region(0.0, 1.0, 0.0, 1.0);
  // 1/2|v|^2 - s|v| >= 1/4|v|^2 - s^2
  m.set_coercivity({0.25, scale * scale});
  return m;
}

SurfaceModel build_torus_mechanical(const ModelParams& p) {
  double amp = p.at("amplitude");
  Chart chart{ChartKind::flat_torus};
  auto terms = [amp](const Vec2& q) {
    using std::numbers::pi;
    FieldTerms t;
    double sx = std::sin(pi * q.x()), cx = std::cos(pi * q.x());
    double sy = std::sin(pi * q.y()), cy = std::cos(pi * q.y());
    t.V = amp * sx * sx * sy * sy;
    t.dV = {amp * 2.0 * pi * sx * cx * sy * sy, amp * 2.0 * pi * sy * cy * sx * sx};
    return t;
  };
  SurfaceModel m = SurfaceModel::structured("torus_mechanical", chart, terms, amp == 0.0);
  m.set_working_region(0.0, 1.0, 0.0, 1.0);
  m.set_coercivity({0.5, std::max(amp, 0.0)});
  return m;
}

SurfaceModel build_half_plane(const ModelParams& p) {
  double scale = p.at("theta_scale");
  Chart chart{ChartKind::half_plane};
  auto terms = [scale](const Vec2& q) {
    FieldTerms t;
    double y = q.y();
    double iy2 = 1.0 / (y * y);
    t.g = Mat2::Identity() * iy2;
    t.dg[1] = Mat2::Identity() * (-2.0 * iy2 / y);
    t.theta = {scale / y, 0.0};
    t.dtheta(0, 1) = -scale * iy2;
    return t;
  };
  SurfaceModel m = SurfaceModel::structured("half_plane_horocycle", chart, terms, true);
  m.set_working_region(-2.0, 2.0, 0.25, 4.0);
  m.set_coercivity({0.25, scale * scale});
  return m;
}

SurfaceModel build_plane_patch(const ModelParams& p) {
  double field = p.at("field"), omega = p.at("omega"), quartic = p.at("quartic");
  Chart chart{ChartKind::plane_patch};
  chart.xmin = p.at("xmin");
  chart.xmax = p.at("xmax");
  chart.ymin = p.at("ymin");
  chart.ymax = p.at("ymax");
  if (!(chart.xmin < chart.xmax && chart.ymin < chart.ymax)) {
    throw std::invalid_argument("plane_patch_custom needs xmin < xmax and ymin < ymax");
  }
  if (quartic < 0.0) throw std::invalid_argument("plane_patch_custom needs quartic >= 0");
  double rmax2 = std::max(chart.xmin * chart.xmin, chart.xmax * chart.xmax) +
                 std::max(chart.ymin * chart.ymin, chart.ymax * chart.ymax);
  double theta_max = 0.5 * std::abs(field) * std::sqrt(rmax2);
  double vmax = 0.5 * omega * omega * rmax2;
  SurfaceModel m = [&] {
    if (quartic == 0.0) {
      auto terms = [field, omega](const Vec2& q) {
        FieldTerms t;
        t.theta = {-0.5 * field * q.y(), 0.5 * field * q.x()};
        t.dtheta(0, 1) = -0.5 * field;
        t.dtheta(1, 0) = 0.5 * field;
        t.V = 0.5 * omega * omega * q.squaredNorm();
        t.dV = omega * omega * q;
        return t;
      };
      return SurfaceModel::structured("plane_patch_custom", chart, terms, omega == 0.0);
    }
    auto lag = [field, omega, quartic](const Vec2& q, const Vec2& v) {
      double vv = v.squaredNorm();
      return 0.5 * vv + 0.5 * field * (q.x() * v.y() - q.y() * v.x()) -
             0.5 * omega * omega * q.squaredNorm() + quartic * vv * vv;
    };
    return SurfaceModel::custom("plane_patch_custom", chart, lag,
                                [](const Vec2&) { return Mat2::Identity(); });
  }();
  m.set_working_region(chart.xmin, chart.xmax, chart.ymin, chart.ymax);
  m.set_coercivity({0.25, theta_max * theta_max + vmax});
  return m;
}

}  // namespace

ModelPtr make_model(const std::string& id, const ModelParams& overrides) {
  const auto& catalog = model_catalog();
  auto it = std::find_if(catalog.begin(), catalog.end(),
                         [&](const CatalogEntry& e) { return e.id == id; });
  if (it == catalog.end()) throw std::invalid_argument("unknown model id '" + id + "'");
  ModelParams params = merge_params(*it, overrides);

  SurfaceModel model = [&] {
    if (id == "torus_magnetic") return build_torus_magnetic(params);
    if (id == "torus_mechanical") return build_torus_mechanical(params);
    if (id == "half_plane_horocycle") return build_half_plane(params);
    return build_plane_patch(params);
  }();
  model.set_params(params);
  model.set_convexity(0.5);
  model.survey(4096, 0x5eed);

  if (model.is_structured()) {
    DerivativeCheck check = check_derivatives(model, 64, 0xd1ff);
    if (!check.passed) {
      std::ostringstream msg;
      msg << "model '" << id << "' failed derivative check (v: " << check.max_rel_error_v
          << ", q: " << check.max_rel_error_q << ")";
      throw NumericalError(msg.str());
    }
  }
  double vmax = 10.0;
  double slack = certify_quadratic_bounds(model, model.coercivity(), vmax, 2048, 0xb0b);
  if (slack < -1e-9) {
    std::ostringstream msg;
    msg << "model '" << id << "' violates its quadratic bound (slack " << slack << ")";
    throw NumericalError(msg.str());
  }
  return std::make_shared<const SurfaceModel>(std::move(model));
}

}  // namespace conorbit
