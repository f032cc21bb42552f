#include "conorbit/solvers.hpp"

#include "conorbit/parallel.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

namespace conorbit {

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "CONVERGED";
    case SolveStatus::max_iters:
      return "MAX_ITERS";
    case SolveStatus::collapsed_to_constant:
      return "COLLAPSED_TO_CONSTANT";
    case SolveStatus::unbounded:
      return "UNBOUNDED";
    case SolveStatus::below_threshold:
      return "BELOW_THRESHOLD";
    case SolveStatus::stalled:
      return "STALLED";
    case SolveStatus::not_applicable:
      return "NOT_APPLICABLE";
  }
  return "UNKNOWN";
}

double MinimizeConfig::tolerance() const {
  return grad_tol > 0.0 ? grad_tol : 1e-7 * std::sqrt(static_cast<double>(N));
}

void MinimizeConfig::validate() const {
  if (N < 16) throw std::invalid_argument("solver.N must be at least 16");
  if (max_iters < 1) throw std::invalid_argument("solver.max_iters must be positive");
  if (grad_tol < 0.0) throw std::invalid_argument("solver.grad_tol must be positive");
  if (!(T_min > 0.0)) throw std::invalid_argument("solver.T_min must be positive");
  if (!(armijo > 0.0 && armijo < 0.5)) throw std::invalid_argument("solver.armijo in (0, 0.5)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw std::invalid_argument("solver.backtrack in (0, 1)");
  if (multistart < 1) throw std::invalid_argument("solver.multistart must be positive");
  if (threads < 1) throw std::invalid_argument("threads must be positive");
}

namespace {

/// Free variables with log T in the last slot.
class PathObjective {
 public:
  PathObjective(const SurfaceModel& model, const PathSpace& space, double k,
                const DiscretePath& like)
      : model_(model), space_(space), k_(k), work_(like) {}

  Eigen::VectorXd to_z(const DiscretePath& path) const {
    Eigen::VectorXd z = space_.pack(path);
    z[z.size() - 1] = std::log(path.T);
    return z;
  }

  DiscretePath to_path(const Eigen::VectorXd& z) const {
    DiscretePath p = work_;
    Eigen::VectorXd w = z;
    w[w.size() - 1] = std::exp(z[z.size() - 1]);
    space_.unpack(w, p);
    return p;
  }

  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad, ActionValue* value = nullptr) {
    Eigen::VectorXd w = z;
    const double T = std::exp(z[z.size() - 1]);
    w[w.size() - 1] = T;
    space_.unpack(w, work_);
    NodeGradient ng;
    ActionValue av = discrete_action(model_, work_, k_, grad ? &ng : nullptr);
    if (grad) {
      *grad = space_.reduce_gradient(work_, ng);
      (*grad)[grad->size() - 1] *= T;
    }
    if (value) *value = av;
    return av.A;
  }

  /// Gradient norm over (s0, nodes, s1, T).
  static double stationarity(const Eigen::VectorXd& z, const Eigen::VectorXd& g) {
    const Eigen::Index last = z.size() - 1;
    double gT = g[last] / std::exp(z[last]);
    return std::sqrt(g.head(last).squaredNorm() + gT * gT);
  }

  /// Kinetic Hessian in the free variables with a scalar log-T block.
  void build_preconditioner(const Eigen::VectorXd& z) {
    DiscretePath p = to_path(z);
    const int n = p.segments();
    const double tau = p.T / n;
    const Eigen::Index dim = z.size();
    struct Entry {
      Eigen::Index var;
      Vec2 col;
    };
    std::vector<std::vector<Entry>> map(n + 1);
    if (space_.is_loop()) {
      for (int i = 0; i < n; ++i) {
        map[i] = {{2 * i, Vec2(1, 0)}, {2 * i + 1, Vec2(0, 1)}};
      }
      map[n] = map[0];
    } else {
      Eigen::Index base = space_.q0().is_point() ? 0 : 1;
      if (!space_.q0().is_point()) map[0] = {{0, space_.q0().tangent(p.s0)}};
      for (int i = 1; i < n; ++i) {
        Eigen::Index j = base + 2 * (i - 1);
        map[i] = {{j, Vec2(1, 0)}, {j + 1, Vec2(0, 1)}};
      }
      if (!space_.q1().is_point()) map[n] = {{base + 2 * (n - 1), space_.q1().tangent(p.s1)}};
    }
    std::vector<Eigen::Triplet<double>> trip;
    double kinetic = 0.0, slack = 0.0;
    for (int i = 0; i < n; ++i) {
      Vec2 m = 0.5 * (p.nodes[i] + p.nodes[i + 1]);
      Vec2 chord = p.nodes[i + 1] - p.nodes[i];
      Mat2 G = model_.d2L_dv2(m, chord / tau);
      kinetic += 0.5 * chord.dot(G * chord);
      slack += k_ - model_.zero_section_energy(m);
      Mat2 B = G / tau;
      const int ends[2] = {i, i + 1};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          double sign = (a == b) ? 1.0 : -1.0;
          for (const Entry& ea : map[ends[a]]) {
            for (const Entry& eb : map[ends[b]]) {
              trip.emplace_back(ea.var, eb.var, sign * ea.col.dot(B * eb.col));
            }
          }
        }
      }
    }
    kinetic *= n;
    slack /= n;
    double time_block = kinetic / p.T + std::max(slack, 0.0) * p.T + 1e-10;
    trip.emplace_back(dim - 1, dim - 1, time_block);
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());
    double mean_diag = H.diagonal().sum() / static_cast<double>(dim);
    for (Eigen::Index j = 0; j < dim - 1; ++j) H.coeffRef(j, j) += 1e-6 * mean_diag;
    H_ = H;
    ldlt_.compute(H_);
    ready_ = ldlt_.info() == Eigen::Success;
  }

  void precondition(Eigen::VectorXd& r) const {
    if (ready_) r = ldlt_.solve(r);
  }

  double metric(const Eigen::VectorXd& t) const { return t.dot(H_ * t); }

  const SurfaceModel& model() const { return model_; }
  double k() const { return k_; }

 private:
  const SurfaceModel& model_;
  const PathSpace& space_;
  double k_;
  DiscretePath work_;
  Eigen::SparseMatrix<double> H_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool ready_ = false;
};

}  // namespace

SolveReport minimize_action(const SurfaceModel& model, const PathSpace& space, double k,
                            const DiscretePath& init, const MinimizeConfig& cfg) {
  cfg.validate();
  if (init.segments() < 2) throw std::invalid_argument("initial path needs N >= 2");
  DiscretePath start = init;
  space.sync(start);
  start.T = std::max(start.T, cfg.T_min);

  PathObjective obj(model, space, k, start);
  const QuadraticBounds bounds = model.coercivity();
  const double log_tmin = std::log(cfg.T_min);
  SolveReport rep;
  rep.k = k;

  ActionValue last;
  enum class Reason { none, below, unbounded, collapsed } reason = Reason::none;

  LbfgsProblem prob;
  prob.evaluate = [&](const Eigen::VectorXd& z, Eigen::VectorXd* g) {
    return obj.evaluate(z, g, &last);
  };
  prob.refresh = [&](const Eigen::VectorXd& z) { obj.build_preconditioner(z); };
  prob.precondition = [&](Eigen::VectorXd& r) { obj.precondition(r); };
  prob.project = [&](Eigen::VectorXd& z) {
    z[z.size() - 1] = std::max(z[z.size() - 1], log_tmin);
  };
  prob.stationarity = &PathObjective::stationarity;
  prob.monitor = [&](const Eigen::VectorXd& z, double f, const Eigen::VectorXd& g, int) {
    double T = std::exp(z[z.size() - 1]);
    double bound = lower_bound_estimate(last, bounds.a, bounds.b, k);
    if (f < bound - 1e-9 * (1.0 + std::abs(f))) ++rep.bound_violations;
    if (cfg.v_max > 0.0 && last.max_speed > cfg.v_max) rep.trust_region_hit = true;
    if (cfg.stop_below && f < *cfg.stop_below) {
      reason = Reason::below;
      return true;
    }
    if (T >= cfg.T_max || f <= cfg.action_floor) {
      reason = Reason::unbounded;
      return true;
    }
    if (z[z.size() - 1] <= log_tmin + 1e-9 && g[g.size() - 1] > 0.0) {
      reason = Reason::collapsed;
      return true;
    }
    return false;
  };

  LbfgsOptions opt;
  opt.max_iters = cfg.max_iters;
  opt.grad_tol = cfg.tolerance();
  opt.armijo = cfg.armijo;
  opt.backtrack = cfg.backtrack;
  opt.memory = cfg.memory;

  LbfgsResult res = lbfgs_minimize(prob, obj.to_z(start), opt);
  rep.path = obj.to_path(res.x);
  rep.action = discrete_action(model, rep.path, k);
  rep.iterations = res.iterations;
  rep.grad_norm = res.stationarity;
  rep.trace = std::move(res.trace);
  rep.worst_increase = res.worst_increase;
  switch (res.stop) {
    case LbfgsStop::converged:
      rep.status = SolveStatus::converged;
      break;
    case LbfgsStop::max_iters:
      rep.status = SolveStatus::max_iters;
      break;
    case LbfgsStop::line_search:
      rep.status = SolveStatus::stalled;
      rep.message = "line search failed";
      break;
    case LbfgsStop::monitor:
      rep.status = reason == Reason::below       ? SolveStatus::below_threshold
                   : reason == Reason::unbounded ? SolveStatus::unbounded
                                                 : SolveStatus::collapsed_to_constant;
      break;
  }
  if (cfg.verify) rep.residuals = verify_solution(model, space, rep.path, k);
  return rep;
}

bool better_solution(const SolveReport& a, const SolveReport& b) {
  double da = a.action.A, db = b.action.A;
  if (std::abs(da - db) <= 1e-8) return a.path.T < b.path.T;
  return da < db;
}

MultistartResult multistart_minimize(const SurfaceModel& model, const PathSpace& space, double k,
                                     const std::vector<DiscretePath>& inits,
                                     const MinimizeConfig& cfg) {
  if (inits.empty()) throw std::invalid_argument("multistart needs at least one seed");
  MultistartResult out;
  out.runs.resize(inits.size());
  parallel_for(static_cast<int>(inits.size()), cfg.threads, [&](int i) {
    out.runs[i] = minimize_action(model, space, k, inits[i], cfg);
  });
  // converged runs take precedence; the reduction is independent of run order
  auto rank = [](const SolveReport& r) { return r.status == SolveStatus::converged ? 0 : 1; };
  out.best = out.runs.front();
  for (const auto& r : out.runs) {
    if (rank(r) < rank(out.best) || (rank(r) == rank(out.best) && better_solution(r, out.best))) {
      out.best = r;
    }
  }
  return out;
}

std::vector<DiscretePath> random_chords(const SurfaceModel& model, const PathSpace& space,
                                        double k, Vec2 offset1, int count, int segments,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<DiscretePath> out;
  for (int i = 0; i < count; ++i) {
    double s0 = space.q0().is_point() ? 0.0 : u(rng);
    double s1 = space.q1().is_point() ? 0.0 : u(rng);
    DiscretePath p = space.straight(s0, s1, offset1, segments, 1.0);
    auto T = optimal_time(model, p, k);
    p.T = std::clamp(T.value_or(1.0), 1e-3, 10.0);
    out.push_back(std::move(p));
  }
  return out;
}

double nearest_parameter(const Chart& chart, const BoundarySpec& q, const Vec2& target) {
  if (q.is_point()) return 0.0;
  auto dist = [&](double s) { return chart.displacement(q.at(s), target).norm(); };
  constexpr int kSamples = 2048;
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSamples; ++i) {
    double d = dist(double(i) / kSamples);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  double a = double(best - 1) / kSamples, b = double(best + 1) / kSamples;
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    double c = b - r * (b - a), d = a + r * (b - a);
    if (dist(c) < dist(d)) {
      b = d;
    } else {
      a = c;
    }
  }
  double s = 0.5 * (a + b);
  return s - std::floor(s);
}

DiscretePath constant_path_at(const SurfaceModel& model, const PathSpace& space,
                              const Vec2& anchor, int segments, double T) {
  if (space.is_loop()) throw std::invalid_argument("constant_path_at needs an open path space");
  const Chart& chart = model.chart();
  DiscretePath p;
  p.s0 = nearest_parameter(chart, space.q0(), anchor);
  p.s1 = nearest_parameter(chart, space.q1(), anchor);
  Vec2 base = chart.canonical(anchor);
  Vec2 d0 = base - space.q0().at(p.s0), d1 = base - space.q1().at(p.s1);
  p.offset0 = {std::round(d0.x()), std::round(d0.y())};
  p.offset1 = {std::round(d1.x()), std::round(d1.y())};
  if ((space.q0().at(p.s0) + p.offset0 - base).norm() > 1e-6 ||
      (space.q1().at(p.s1) + p.offset1 - base).norm() > 1e-6) {
    throw std::invalid_argument("anchor must lie on both boundaries");
  }
  p.nodes.assign(segments + 1, base);
  p.T = T;
  space.sync(p);
  return p;
}

DiscretePath chord_in_component(const SurfaceModel& model, const PathSpace& space,
                                const DiscretePath& reference, double s0, double s1,
                                int segments) {
  const Chart& chart = model.chart();
  DiscretePath p = space.straight(s0, s1, reference.offset1, segments, 1.0, reference.offset0);
  if (chart.periodic()) {
    IVec2 home = path_winding(chart, reference, space.q0(), space.q1());
    IVec2 w = path_winding(chart, p, space.q0(), space.q1());
    Vec2 shift(double(home[0] - w[0]), double(home[1] - w[1]));
    if (!shift.isZero()) {
      p = space.straight(s0, s1, reference.offset1 + shift, segments, 1.0, reference.offset0);
    }
  }
  return p;
}

ChordSearch best_chord(const SurfaceModel& model, const PathSpace& space,
                       const DiscretePath& reference, double k, int grid, int segments) {
  ChordSearch best;
  best.action = std::numeric_limits<double>::infinity();
  const int g0 = space.q0().is_point() ? 1 : grid, g1 = space.q1().is_point() ? 1 : grid;
  for (int i = 0; i < g0; ++i) {
    for (int j = 0; j < g1; ++j) {
      DiscretePath p = chord_in_component(model, space, reference, double(i) / grid,
                                          double(j) / grid, segments);
      auto T = optimal_time(model, p, k);
      if (!T || *T <= 0.0) continue;
      p.T = *T;
      double A = discrete_action(model, p, k).A;
      if (A < best.action) {
        best.action = A;
        best.path = std::move(p);
      }
    }
  }
  return best;
}

// ---- mountain pass ----------------------------------------------------------------

namespace {

struct Bead {
  Eigen::VectorXd z;
  double A = 0.0;
  Eigen::VectorXd g;
  double length = 0.0;
  std::unique_ptr<PathObjective> obj;
};

std::vector<double> arclength_weights(const PathSpace& space, const DiscretePath& like,
                                      Eigen::Index dim) {
  const int n = like.segments();
  std::vector<double> w(dim, 1.0 / n);
  Eigen::Index j = 0;
  if (!space.q0().is_point()) w[j++] = space.q0().tangent(like.s0).squaredNorm() / n;
  j += 2 * (n - 1);
  if (!space.q1().is_point()) w[j++] = space.q1().tangent(like.s1).squaredNorm() / n;
  w[dim - 1] = 0.01;
  return w;
}

double weighted_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         const std::vector<double>& w) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += w[i] * (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

/// Redistribute beads lo..hi (inclusive ends fixed) at equal weighted arclength.
void reparametrize(std::vector<Bead>& beads, int lo, int hi, const std::vector<double>& w) {
  if (hi - lo < 2) return;
  std::vector<Eigen::VectorXd> old;
  std::vector<double> cum{0.0};
  for (int j = lo; j <= hi; ++j) old.push_back(beads[j].z);
  for (std::size_t j = 1; j < old.size(); ++j) {
    cum.push_back(cum.back() + weighted_distance(old[j - 1], old[j], w));
  }
  double total = cum.back();
  if (!(total > 0.0)) return;
  std::size_t seg = 1;
  for (int j = lo + 1; j < hi; ++j) {
    double target = total * double(j - lo) / double(hi - lo);
    while (seg + 1 < cum.size() && cum[seg] < target) ++seg;
    double span = cum[seg] - cum[seg - 1];
    double t = span > 0.0 ? (target - cum[seg - 1]) / span : 0.0;
    beads[j].z = (1.0 - t) * old[seg - 1] + t * old[seg];
  }
}

/// Minimize 1/2 g^T M^{-1} g near z to land on a critical point of any index.
LbfgsResult polish_critical_point(PathObjective& obj, const Eigen::VectorXd& z0, double tol,
                                  int max_iters) {
  obj.build_preconditioner(z0);
  LbfgsProblem prob;
  prob.evaluate = [&](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    Eigen::VectorXd g;
    obj.evaluate(z, &g);
    Eigen::VectorXd mg = g;
    obj.precondition(mg);
    double f = 0.5 * g.dot(mg);
    if (grad) {
      double scale = mg.lpNorm<Eigen::Infinity>();
      double eps = 1e-6 / std::max(scale, 1e-12);
      Eigen::VectorXd gp, gm;
      obj.evaluate(z + eps * mg, &gp);
      obj.evaluate(z - eps * mg, &gm);
      *grad = (gp - gm) / (2.0 * eps);
    }
    return f;
  };
  prob.precondition = [&](Eigen::VectorXd& r) { obj.precondition(r); };
  prob.stationarity = [&](const Eigen::VectorXd& z, const Eigen::VectorXd&) {
    Eigen::VectorXd g;
    obj.evaluate(z, &g);
    return PathObjective::stationarity(z, g);
  };
  LbfgsOptions opt;
  opt.max_iters = max_iters;
  opt.grad_tol = tol;
  opt.noise_floor = 1e-10;
  return lbfgs_minimize(prob, z0, opt);
}

}  // namespace

MountainPassReport mountain_pass(const SurfaceModel& model, const PathSpace& space,
                                 const Vec2& anchor, double k, const StringConfig& cfg,
                                 const StringState* warm) {
  if (space.is_loop()) throw std::invalid_argument("mountain pass needs an open path space");
  if (cfg.beads < 3) throw std::invalid_argument("string needs at least 3 beads");
  MountainPassReport rep;
  const Chart& chart = model.chart();
  const double a = model.convexity();
  const double e0 = model.zero_section_max();
  if (!(k > e0)) {
    rep.message = "energy at or below e0";
    return rep;
  }
  rep.alpha = 2.0 * cfg.epsilon * std::sqrt(a * (k - e0));
  {
    double cE = -std::numeric_limits<double>::infinity(), cT = 0.0;
    for (int i = 0; i <= 64; ++i) {
      for (int j = 0; j < 64; ++j) {
        double r = cfg.epsilon * i / 64.0, ang = 2.0 * std::numbers::pi * j / 64.0;
        Vec2 q = anchor + r * Vec2(std::cos(ang), std::sin(ang));
        if (!chart.contains(q)) continue;
        cE = std::max(cE, model.zero_section_energy(q));
        cT = std::max(cT, model.dual_norm(q, model.theta(q)));
      }
    }
    rep.alpha_local = k > cE ? (2.0 * std::sqrt(a * (k - cE)) - cT) * cfg.epsilon : 0.0;
  }
  const double e_anchor = model.zero_section_energy(anchor);
  rep.T0 = std::clamp(rep.alpha / (4.0 * (k - e_anchor)), 1e-4, 1.0);

  const int n = cfg.N;
  DiscretePath tail = constant_path_at(model, space, anchor, n, rep.T0);
  rep.tail_action = discrete_action(model, tail, k).A;
  std::optional<IVec2> home;
  if (chart.periodic()) home = path_winding(chart, tail, space.q0(), space.q1());

  // head: most negative chord in the component of the anchor, then relaxed
  DiscretePath head;
  double head_A = std::numeric_limits<double>::infinity();
  if (warm && warm->beads.size() >= 2) {
    head = warm->beads.back();
    auto T = optimal_time(model, head, k);
    if (T && *T > 0.0) {
      head.T = *T;
      head_A = discrete_action(model, head, k).A;
    }
  }
  if (!(head_A < 0.0)) {
    ChordSearch chord = best_chord(model, space, tail, k, cfg.head_grid, n);
    head = std::move(chord.path);
    head_A = chord.action;
  }
  if (!(head_A < -1e-12)) {
    rep.message = "no negative-action path found in the anchor's component";
    return rep;
  }
  {
    MinimizeConfig hc = cfg.head;
    hc.N = n;
    hc.verify = false;
    SolveReport relaxed = minimize_action(model, space, k, head, hc);
    bool same = !home || path_winding(chart, relaxed.path, space.q0(), space.q1()) == *home;
    if (same && relaxed.action.A < head_A && relaxed.status != SolveStatus::unbounded) {
      head = relaxed.path;
      head_A = relaxed.action.A;
    }
  }
  // keep endpoint parameters close to the tail's so the interpolation is short
  if (space.q0().period_shift().isZero()) head.s0 -= std::round(head.s0 - tail.s0);
  if (space.q1().period_shift().isZero()) head.s1 -= std::round(head.s1 - tail.s1);
  rep.head_action = head_A;

  // string
  const int M = cfg.beads;
  std::vector<Bead> beads(M);
  PathObjective tail_obj(model, space, k, tail);
  Eigen::VectorXd z_tail = tail_obj.to_z(tail), z_head = tail_obj.to_z(head);
  // interior beads from another energy level sit off this level's valley, so only the
  // head is carried over
  for (int j = 0; j < M; ++j) {
    beads[j].obj = std::make_unique<PathObjective>(model, space, k, tail);
    if (j == 0) {
      beads[j].z = z_tail;
    } else if (j == M - 1) {
      beads[j].z = z_head;
    } else {
      double t = double(j) / (M - 1);
      beads[j].z = (1.0 - t) * z_tail + t * z_head;
    }
  }
  const std::vector<double> w = arclength_weights(space, tail, z_tail.size());

  auto evaluate_bead = [&](Bead& b) {
    ActionValue av;
    b.A = b.obj->evaluate(b.z, &b.g, &av);
    b.length = av.length;
  };
  for (auto& b : beads) evaluate_bead(b);

  int climb = -1;
  double residual = std::numeric_limits<double>::infinity();
  const double polish_from = std::max(100.0 * cfg.tol, 1e-2);
  PathObjective saddle_obj(model, space, k, tail);
  // lowest-residual climbing state seen so far
  Eigen::VectorXd best_z;
  double best_res = std::numeric_limits<double>::infinity(), best_span = 0.0;
  std::optional<LbfgsResult> early;
  auto try_polish = [&](const Eigen::VectorXd& z0, double span, int iters) -> std::optional<LbfgsResult> {
    LbfgsResult pol = polish_critical_point(saddle_obj, z0, cfg.tol, iters);
    Eigen::VectorXd g;
    double A = saddle_obj.evaluate(pol.x, &g);
    if (PathObjective::stationarity(pol.x, g) > cfg.tol) return std::nullopt;
    if (weighted_distance(pol.x, z0, w) > 2.0 * span + 1e-3) return std::nullopt;
    // a mountain-pass point lies strictly above both ends of the string
    if (!(A > std::max(beads.front().A, beads.back().A))) return std::nullopt;
    return pol;
  };
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (it % 10 == 0) {
      for (int j = 1; j < M - 1; ++j) beads[j].obj->build_preconditioner(beads[j].z);
    }
    climb = 1;
    for (int j = 2; j < M - 1; ++j) {
      if (beads[j].A > beads[climb].A) climb = j;
    }
    bool climbing = it >= 20;
    for (int j = 1; j < M - 1; ++j) {
      Bead& b = beads[j];
      bool is_climb = climbing && j == climb;
      if (!is_climb && b.A < rep.alpha / 2.0 && b.length < cfg.epsilon && j < climb) continue;
      Eigen::VectorXd d = b.g;
      b.obj->precondition(d);
      d = -d;
      if (is_climb) {
        Eigen::VectorXd t = beads[j + 1].z - beads[j - 1].z;
        double tt = b.obj->metric(t);
        if (tt > 0.0) {
          t /= std::sqrt(tt);
          d += 2.0 * t.dot(b.g) * t;
        }
      }
      double scale = cfg.step;
      double biggest = d.head(d.size() - 1).lpNorm<Eigen::Infinity>();
      if (biggest * scale > 0.05) scale = 0.05 / biggest;
      if (std::abs(d[d.size() - 1]) * scale > 0.5) scale = 0.5 / std::abs(d[d.size() - 1]);
      Eigen::VectorXd old = b.z;
      for (int tries = 0; tries < 30; ++tries) {
        b.z = old + scale * d;
        try {
          evaluate_bead(b);
          break;
        } catch (const std::exception&) {
          scale *= 0.5;
          b.z = old;
        }
      }
    }
    if (climbing) {
      reparametrize(beads, 0, climb, w);
      reparametrize(beads, climb, M - 1, w);
    } else {
      reparametrize(beads, 0, M - 1, w);
    }
    for (int j = 1; j < M - 1; ++j) evaluate_bead(beads[j]);
    if (climbing) {
      residual = PathObjective::stationarity(beads[climb].z, beads[climb].g);
      double span = weighted_distance(beads[climb - 1].z, beads[climb + 1].z, w);
      if (residual < best_res) {
        best_res = residual;
        best_z = beads[climb].z;
        best_span = span;
      }
      if (residual <= polish_from) break;
      // the climbing image is noisy; short polishes catch a nearby saddle early
      if ((it - 20) % 20 == 0) {
        early = try_polish(beads[climb].z, span, std::min(cfg.polish_iters, 400));
        if (early) break;
      }
    }
  }
  rep.iterations = it;

  if (climb < 0) climb = 1;
  Eigen::VectorXd z_saddle = best_z.size() ? best_z : beads[climb].z;
  double span = best_z.size() ? best_span
                              : weighted_distance(beads[climb - 1].z, beads[climb + 1].z, w);
  std::optional<LbfgsResult> pol = early ? early : try_polish(z_saddle, span, cfg.polish_iters);
  if (pol) {
    Eigen::VectorXd g;
    double A_pol = saddle_obj.evaluate(pol->x, &g);
    rep.status = SolveStatus::converged;
    z_saddle = pol->x;
    rep.residual = PathObjective::stationarity(pol->x, g);
    rep.minimax = A_pol;
    rep.iterations += pol->iterations;
  } else {
    rep.status = SolveStatus::stalled;
    rep.residual = best_res;
    rep.minimax = beads[climb].A;
    rep.message = "saddle did not converge (best string residual " + std::to_string(best_res) + ")";
  }
  rep.saddle.k = k;
  rep.saddle.status = rep.status;
  rep.saddle.path = saddle_obj.to_path(z_saddle);
  rep.saddle.action = discrete_action(model, rep.saddle.path, k);
  rep.saddle.grad_norm = rep.residual;
  rep.saddle.iterations = rep.iterations;
  rep.saddle.residuals = verify_solution(model, space, rep.saddle.path, k);

  for (auto& b : beads) {
    rep.bead_actions.push_back(b.A);
    rep.string.beads.push_back(b.obj->to_path(b.z));
  }
  rep.class_invariant = beads.front().A <= rep.alpha / 4.0 + 1e-12 && beads.back().A < 0.0;
  return rep;
}

MinimaxCurve struwe_scan(const SurfaceModel& model, const PathSpace& space, const Vec2& anchor,
                         const std::vector<double>& k_grid, const StringConfig& cfg) {
  if (!std::is_sorted(k_grid.begin(), k_grid.end())) {
    throw std::invalid_argument("k grid must be ascending");
  }
  MinimaxCurve curve;
  std::optional<StringState> warm;
  std::vector<double> T_star;
  for (double k : k_grid) {
    MountainPassReport rep = mountain_pass(model, space, anchor, k, cfg, warm ? &*warm : nullptr);
    MinimaxRow row;
    row.k = k;
    row.status = rep.status;
    row.c_omega = rep.minimax;
    row.converged = rep.status == SolveStatus::converged;
    row.T_star = rep.saddle.path.nodes.empty() ? 0.0 : rep.saddle.path.T;
    row.residual = rep.residual;
    curve.rows.push_back(row);
    if (rep.status != SolveStatus::not_applicable) warm = rep.string;
  }
  for (std::size_t i = 1; i < curve.rows.size(); ++i) {
    const auto& lo = curve.rows[i - 1];
    const auto& hi = curve.rows[i];
    if (lo.status == SolveStatus::not_applicable || hi.status == SolveStatus::not_applicable) {
      continue;
    }
    curve.worst_decrease = std::max(curve.worst_decrease, lo.c_omega - hi.c_omega);
    if (lo.converged && hi.converged) {
      double quotient = (hi.c_omega - lo.c_omega) / (hi.k - lo.k);
      if (hi.T_star > quotient + 2.0) curve.suspect_k.push_back(hi.k);
    }
  }
  return curve;
}

void write_minimax_csv(std::ostream& out, const MinimaxCurve& curve) {
  out << "k,c_omega,converged,T_star,residual\n";
  char buf[200];
  for (const auto& r : curve.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g\n", r.k, r.c_omega,
                  r.converged ? 1 : 0, r.T_star, r.residual);
    out << buf;
  }
}

void write_solve_summary_csv(std::ostream& out, const std::vector<std::string>& labels,
                             const std::vector<SolveReport>& reports) {
  out << "label,status,k,action,T,N,iterations,grad_norm,el_residual,energy_mismatch,"
         "conormal_0,conormal_1,shooting_gap,energy_drift,bound_violations\n";
  char buf[512];
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const SolveReport& r = reports[i];
    std::snprintf(buf, sizeof buf,
                  "%s,%s,%.17g,%.17g,%.17g,%d,%d,%.6e,%.6e,%.6e,%.6e,%.6e,%.6e,%.6e,%d\n",
                  labels[i].c_str(), to_string(r.status).c_str(), r.k, r.action.A, r.path.T,
                  r.path.segments(), r.iterations, r.grad_norm, r.residuals.el_residual,
                  std::abs(r.action.energy_mean - r.k), r.residuals.conormal_0,
                  r.residuals.conormal_1, r.residuals.shooting_gap, r.residuals.energy_drift,
                  r.bound_violations);
    out << buf;
  }
}

}  // namespace conorbit
