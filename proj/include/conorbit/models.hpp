#pragma once

#include "conorbit/geometry.hpp"

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace conorbit {

/// Local data of a Lagrangian of the form L = 1/2 v^T g v + theta(v) - V.
struct FieldTerms {
  Mat2 g = Mat2::Identity();
  std::array<Mat2, 2> dg{Mat2::Zero(), Mat2::Zero()};  // dg[k] = d g / d q_k
  Vec2 theta = Vec2::Zero();
  Mat2 dtheta = Mat2::Zero();  // dtheta(i, k) = d theta_i / d q_k
  double V = 0.0;
  Vec2 dV = Vec2::Zero();
};

struct LagrangianSample {
  Vec2 q = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  double L = 0.0;
  Vec2 dL_dv = Vec2::Zero();
  Vec2 dL_dq = Vec2::Zero();
  double E = 0.0;
};

/// L(q, v) >= a |v|^2 - b on the working region.
struct QuadraticBounds {
  double a = 0.5;
  double b = 0.0;
};

/// Smooth bump profile psi: [0, 1] -> [0, 1] supported in [lo, hi] with psi(peak) = 1.
///
/// psi(y) = exp(1 - 1 / (1 - tau^2)) where tau maps [lo, peak] and [peak, hi]
/// affinely onto [-1, 0] and [0, 1].
class PsiProfile {
 public:
  PsiProfile(double lo, double hi);
  PsiProfile(double lo, double hi, double peak);

  double operator()(double y) const;
  double derivative(double y) const;

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double peak() const { return peak_; }

 private:
  double rescale(double y, double* dtau_dy) const;

  double lo_, hi_, peak_;
};

struct HamiltonianSolve {
  double value = 0.0;
  Vec2 velocity = Vec2::Zero();  // maximizer of <p, v> - L(q, v)
  int iterations = 0;
  double residual = 0.0;
};

/// Inner Legendre solve failed to converge.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ModelParams = std::map<std::string, double>;

/// Tonelli Lagrangian on a 2-D chart.
///
/// Two representations share one interface: a structured model supplies
/// metric, one-form, potential and their first derivatives analytically; a
/// custom model supplies only the scalar L(q, v) (plus the metric used for
/// norms), and every derivative is taken by central differences.
/// Instances are immutable once built and safe to share between threads.
class SurfaceModel {
 public:
  using TermsFn = std::function<FieldTerms(const Vec2&)>;
  using ScalarLagrangian = std::function<double(const Vec2&, const Vec2&)>;
  using MetricFn = std::function<Mat2(const Vec2&)>;

  static SurfaceModel structured(std::string id, Chart chart, TermsFn terms, bool magnetic);
  static SurfaceModel custom(std::string id, Chart chart, ScalarLagrangian lagrangian,
                             MetricFn metric);

  const std::string& id() const { return id_; }
  const Chart& chart() const { return chart_; }
  const ModelParams& params() const { return params_; }
  /// Quadratic in v with analytic field terms.
  bool is_structured() const { return static_cast<bool>(terms_); }
  /// Structured and potential-free: L = 1/2 |v|^2 + theta(v).
  bool is_magnetic() const { return magnetic_; }
  const std::optional<PsiProfile>& psi() const { return psi_; }

  FieldTerms terms(const Vec2& q) const;
  Mat2 metric(const Vec2& q) const;
  double norm(const Vec2& q, const Vec2& v) const;

  double lagrangian(const Vec2& q, const Vec2& v) const;
  LagrangianSample sample(const Vec2& q, const Vec2& v) const;
  Vec2 dL_dv(const Vec2& q, const Vec2& v) const;
  Vec2 dL_dq(const Vec2& q, const Vec2& v) const;
  Mat2 d2L_dv2(const Vec2& q, const Vec2& v) const;
  /// (i, k) entry is d^2 L / dv_i dq_k.
  Mat2 d2L_dvdq(const Vec2& q, const Vec2& v) const;
  double energy(const Vec2& q, const Vec2& v) const;

  /// theta_q = d_v L(q, 0).
  Vec2 theta(const Vec2& q) const;
  /// Dual norm of a covector with respect to the metric.
  double dual_norm(const Vec2& q, const Vec2& p) const;
  double zero_section_energy(const Vec2& q) const { return energy(q, Vec2::Zero()); }

  /// Fenchel dual; closed form for structured models, Newton otherwise.
  double hamiltonian(const Vec2& q, const Vec2& p) const;
  /// dH/dp at (q, p), the velocity whose momentum is p.
  Vec2 hamiltonian_dp(const Vec2& q, const Vec2& p) const;
  /// Generic path: damped Newton on the concave inner problem.
  HamiltonianSolve hamiltonian_newton(const Vec2& q, const Vec2& p) const;

  /// Coercivity pair used by the action lower bound.
  QuadraticBounds coercivity() const { return coercivity_; }
  /// Largest a with d_vv L >= 2a |.|^2 (1/2 for the structured family).
  double convexity() const { return convexity_; }
  /// Sampled sup of |theta_q| over the working region.
  double theta_sup() const { return theta_sup_; }
  /// Sampled max of E(q, 0) over the working region.
  double zero_section_max() const { return zero_section_max_; }

  /// (xmin, xmax, ymin, ymax) of the working region.
  const std::array<double, 4>& working_region() const { return region_; }
  /// Uniform random point of the working region.
  Vec2 random_point(std::mt19937_64& rng) const;

  // Builder-side setters; models are not modified after the catalog returns them.
  void set_params(ModelParams params) { params_ = std::move(params); }
  void set_psi(PsiProfile psi) { psi_ = psi; }
  void set_working_region(double xmin, double xmax, double ymin, double ymax);
  void set_coercivity(QuadraticBounds bounds) { coercivity_ = bounds; }
  void set_convexity(double a) { convexity_ = a; }
  /// Estimate theta_sup and zero_section_max from a sample of the working region.
  void survey(std::size_t samples, std::uint64_t seed);

 private:
  SurfaceModel() = default;

  std::string id_;
  Chart chart_;
  TermsFn terms_;
  ScalarLagrangian scalar_;
  MetricFn metric_;
  bool magnetic_ = false;
  ModelParams params_;
  std::optional<PsiProfile> psi_;
  std::array<double, 4> region_{0.0, 1.0, 0.0, 1.0};
  QuadraticBounds coercivity_;
  double convexity_ = 0.5;
  double theta_sup_ = 0.0;
  double zero_section_max_ = 0.0;
};

using ModelPtr = std::shared_ptr<const SurfaceModel>;

/// Result of comparing analytic derivatives with central differences.
struct DerivativeCheck {
  double max_rel_error_v = 0.0;
  double max_rel_error_q = 0.0;
  bool passed = false;
};

/// Central-difference check of dL/dv and dL/dq (step 1e-5, tolerance 1e-6).
DerivativeCheck check_derivatives(const SurfaceModel& model, std::size_t samples,
                                  std::uint64_t seed);

/// Sampled certificate that L >= a|v|^2 - b with |v| up to vmax.
/// Returns the worst slack (negative means violated).
double certify_quadratic_bounds(const SurfaceModel& model, QuadraticBounds bounds, double vmax,
                                std::size_t samples, std::uint64_t seed);

// ---- catalog ---------------------------------------------------------------

struct CatalogEntry {
  std::string id;
  std::string description;
  ModelParams defaults;
};

const std::vector<CatalogEntry>& model_catalog();

/// Build a catalog model; unknown ids or parameters throw std::invalid_argument.
ModelPtr make_model(const std::string& id, const ModelParams& overrides = {});

/// L, first derivatives and energy at (q, v); rejects points outside the chart.
LagrangianSample eval_lagrangian(const SurfaceModel& model, const Vec2& q, const Vec2& v);

struct ThetaValue {
  Vec2 covector = Vec2::Zero();
  double norm = 0.0;  // metric-dual norm
};

ThetaValue theta_at(const SurfaceModel& model, const Vec2& q);

double fenchel_hamiltonian(const SurfaceModel& model, const Vec2& q, const Vec2& p);

/// Conserved momentum I = v_x + scale * psi(y) of the torus_magnetic model.
double torus_conserved_quantity(const SurfaceModel& model, const Vec2& q, const Vec2& v);

}  // namespace conorbit
