#include "conorbit/critical.hpp"

#include "conorbit/parallel.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

namespace conorbit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

Vec2 to_vec(const IVec2& w) { return {static_cast<double>(w[0]), static_cast<double>(w[1])}; }

void require_torus(const SurfaceModel& model, const char* what) {
  if (!model.chart().periodic()) {
    throw UnsupportedError(std::string(what) + " needs a flat_torus model");
  }
}

}  // namespace

// ---- grid function ----------------------------------------------------------------

double GridFunction::at(int i, int j) const {
  return values[static_cast<std::size_t>(wrap_index(i, n)) * n + wrap_index(j, n)];
}

Vec2 GridFunction::grid_gradient(int i, int j) const {
  const double inv2h = n / 2.0;
  return linear + Vec2((at(i + 1, j) - at(i - 1, j)) * inv2h, (at(i, j + 1) - at(i, j - 1)) * inv2h);
}

Vec2 GridFunction::smooth_gradient(const Vec2& q) const {
  double gx = q.x() * n, gy = q.y() * n;
  int i = static_cast<int>(std::floor(gx)), j = static_cast<int>(std::floor(gy));
  double tx = gx - i, ty = gy - j;
  auto basis = [](double t, double* c, double* d) {
    c[0] = 0.5 * (-t + 2 * t * t - t * t * t);
    c[1] = 0.5 * (2 - 5 * t * t + 3 * t * t * t);
    c[2] = 0.5 * (t + 4 * t * t - 3 * t * t * t);
    c[3] = 0.5 * (-t * t + t * t * t);
    d[0] = 0.5 * (-1 + 4 * t - 3 * t * t);
    d[1] = 0.5 * (-10 * t + 9 * t * t);
    d[2] = 0.5 * (1 + 8 * t - 9 * t * t);
    d[3] = 0.5 * (-2 * t + 3 * t * t);
  };
  double cx[4], dx[4], cy[4], dy[4];
  basis(tx, cx, dx);
  basis(ty, cy, dy);
  Vec2 g = Vec2::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      double u = at(i + a - 1, j + b - 1);
      g.x() += dx[a] * cy[b] * u;
      g.y() += cx[a] * dy[b] * u;
    }
  }
  return linear + g * n;
}

// ---- obstruction and zero section ---------------------------------------------------

namespace {

/// Lowest H on the conormal fibre of the curve at parameter s.
double conormal_value(const SurfaceModel& model, const BoundarySpec& q, double s) {
  Vec2 x = q.at(s), t = q.tangent(s);
  if (model.is_structured()) {
    FieldTerms f = model.terms(x);
    double along = f.theta.dot(t);
    return 0.5 * along * along / t.dot(f.g * t) + f.V;
  }
  Vec2 normal(-t.y(), t.x());
  double R = 10.0 * (model.dual_norm(x, model.theta(x)) + 1.0) / normal.norm();
  auto h = [&](double lambda) { return model.hamiltonian(x, lambda * normal); };
  return boost::math::tools::brent_find_minima(h, -R, R, 40).second;
}

}  // namespace

double conormal_min(const SurfaceModel& model, const BoundarySpec& q, double* argmin) {
  if (q.is_point()) {
    if (argmin) *argmin = 0.0;
    return model.zero_section_energy(q.at(0.0));
  }
  constexpr int kSamples = 2048;
  int best = 0;
  double best_v = kInf;
  for (int i = 0; i < kSamples; ++i) {
    double v = conormal_value(model, q, double(i) / kSamples);
    if (v < best_v) {
      best_v = v;
      best = i;
    }
  }
  auto f = [&](double s) { return conormal_value(model, q, s); };
  auto r = boost::math::tools::brent_find_minima(f, double(best - 1) / kSamples,
                                                  double(best + 1) / kSamples, 50);
  double s = best_v <= r.second ? double(best) / kSamples : r.first;
  if (argmin) *argmin = s - std::floor(s);
  return std::min(best_v, r.second);
}

double k_obstruction(const SurfaceModel& model, const BoundarySpec& q0, const BoundarySpec& q1) {
  return std::max(conormal_min(model, q0), conormal_min(model, q1));
}

ZeroSectionMax e0(const SurfaceModel& model) {
  const auto& r = model.working_region();
  const Chart& chart = model.chart();
  constexpr int kGrid = 512;
  ZeroSectionMax out;
  out.value = -kInf;
  const bool torus = chart.periodic();
  const double wx = r[1] - r[0], wy = r[3] - r[2];
  for (int i = 0; i <= kGrid; ++i) {
    for (int j = 0; j <= kGrid; ++j) {
      if (torus && (i == kGrid || j == kGrid)) continue;
      Vec2 q(r[0] + wx * i / kGrid, r[2] + wy * j / kGrid);
      if (!chart.contains(q)) continue;
      double e = model.zero_section_energy(q);
      if (e > out.value) {
        out.value = e;
        out.point = q;
      }
    }
  }
  // shrinking local grids around the best node
  double hx = wx / kGrid, hy = wy / kGrid;
  for (int round = 0; round < 40; ++round) {
    Vec2 centre = out.point;
    for (int a = -2; a <= 2; ++a) {
      for (int b = -2; b <= 2; ++b) {
        Vec2 q = centre + Vec2(a * hx / 2, b * hy / 2);
        if (!torus && (q.x() < r[0] || q.x() > r[1] || q.y() < r[2] || q.y() > r[3])) continue;
        if (!chart.contains(q)) continue;
        double e = model.zero_section_energy(q);
        if (e > out.value) {
          out.value = e;
          out.point = q;
        }
      }
    }
    hx *= 0.5;
    hy *= 0.5;
  }
  out.point = chart.canonical(out.point);
  return out;
}

// ---- loop probes ----------------------------------------------------------------------

namespace {

void set_optimal_time(const SurfaceModel& model, DiscretePath& p, double k) {
  auto T = optimal_time(model, p, k);
  p.T = (T && *T > 0.0) ? *T : 1.0;
}

}  // namespace

DiscretePath straight_loop(const SurfaceModel& model, const Vec2& base, const IVec2& winding,
                           int segments, double k) {
  DiscretePath p;
  const Vec2 w = to_vec(winding);
  p.nodes.resize(segments + 1);
  for (int i = 0; i <= segments; ++i) p.nodes[i] = base + (double(i) / segments) * w;
  set_optimal_time(model, p, k);
  return p;
}

DiscretePath ladder_loop(const SurfaceModel& model, double level_hi, double level_lo, int n,
                         bool vertical, int segments_per_unit, double k) {
  auto pt = [&](double along, double level) {
    return vertical ? Vec2(level, along) : Vec2(along, level);
  };
  std::vector<Vec2> v = {pt(0.0, level_hi), pt(-double(n), level_hi), pt(-double(n), level_lo),
                         pt(0.0, level_lo), pt(0.0, level_hi)};
  double length = 2.0 * n + 2.0 * std::abs(level_hi - level_lo);
  int segments = std::max(8, static_cast<int>(std::lround(length * segments_per_unit)));
  DiscretePath p;
  p.nodes = resample_polyline(v, segments);
  set_optimal_time(model, p, k);
  return p;
}

std::vector<IVec2> probe_classes(const LatticeClass& lattice) {
  std::vector<IVec2> out{{0, 0}};
  const auto& b = lattice.basis();
  auto add = [&](IVec2 w) {
    if (w == IVec2{0, 0}) return;
    if (std::find(out.begin(), out.end(), w) == out.end()) out.push_back(w);
  };
  auto lin = [](IVec2 a, long long s, IVec2 c, long long t) {
    return IVec2{s * a[0] + t * c[0], s * a[1] + t * c[1]};
  };
  if (b.size() >= 1) {
    for (long long s : {1, -1, 2, -2}) add(lin(b[0], s, b[0], 0));
  }
  if (b.size() >= 2) {
    for (long long s : {1, -1, 2, -2}) add(lin(b[1], s, b[1], 0));
    for (long long s : {1, -1}) {
      for (long long t : {1, -1}) add(lin(b[0], s, b[1], t));
    }
  }
  return out;
}

LoopProbeResult loop_probe(const SurfaceModel& model, const IVec2& winding, double k,
                           const ProbeConfig& cfg) {
  LoopProbeResult out;
  out.winding = winding;
  std::vector<std::pair<double, DiscretePath>> seeds;
  auto consider = [&](DiscretePath p) {
    double A = discrete_action(model, p, k).A;
    seeds.emplace_back(A, std::move(p));
  };
  const bool contractible = winding == IVec2{0, 0};
  const auto& r = model.working_region();
  if (contractible) {
    // constant loop at the best zero-section point of a coarse grid
    Vec2 best = Vec2(r[0], r[2]);
    double e = -kInf;
    for (int i = 0; i < 64; ++i) {
      for (int j = 0; j < 64; ++j) {
        Vec2 q(r[0] + (r[1] - r[0]) * i / 64.0, r[2] + (r[3] - r[2]) * j / 64.0);
        if (!model.chart().contains(q)) continue;
        double v = model.zero_section_energy(q);
        if (v > e) {
          e = v;
          best = q;
        }
      }
    }
    DiscretePath c;
    c.nodes.assign(cfg.N + 1, best);
    c.T = 1.0;
    consider(c);
    if (model.chart().periodic()) {
      constexpr int kLevels = 16;
      for (int hi = 0; hi < kLevels; ++hi) {
        for (int lo = 0; lo < kLevels; ++lo) {
          if (hi == lo) continue;
          for (int n = 1; n <= cfg.max_rungs; n *= 2) {
            for (bool vertical : {false, true}) {
              consider(ladder_loop(model, double(hi) / kLevels, double(lo) / kLevels, n, vertical,
                                   8, k));
            }
          }
        }
      }
    }
  } else {
    require_torus(model, "non-contractible loop probes");
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        consider(straight_loop(model, Vec2(i / 8.0, j / 8.0), winding, cfg.N, k));
      }
    }
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  out.best_action = seeds.front().first;
  out.witness = seeds.front().second;
  if (out.best_action < -1e-10) {
    out.from_seed = true;
    return out;
  }
  const Vec2 w = to_vec(winding);
  PathSpace space = PathSpace::loop(w);
  MinimizeConfig mc;
  mc.N = std::max(16, cfg.N);
  mc.max_iters = cfg.max_iters;
  mc.stop_below = -1e-10;
  mc.verify = false;
  mc.threads = cfg.threads;
  std::vector<DiscretePath> inits;
  for (int i = 0; i < std::min<int>(cfg.multistart, static_cast<int>(seeds.size())); ++i) {
    inits.push_back(seeds[i].second);
  }
  // a few random perturbations of the best seed for diversity
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> jitter(0.0, 0.02);
  while (static_cast<int>(inits.size()) < cfg.multistart) {
    DiscretePath p = seeds.front().second;
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
      p.nodes[i] += Vec2(jitter(rng), jitter(rng));
    }
    space.sync(p);
    inits.push_back(std::move(p));
  }
  MultistartResult ms = multistart_minimize(model, space, k, inits, mc);
  for (const auto& run : ms.runs) {
    if (run.action.A < out.best_action) {
      out.best_action = run.action.A;
      out.witness = run.path;
      out.status = run.status;
    }
  }
  return out;
}

// ---- Hamiltonian upper bound ------------------------------------------------------------

namespace {

/// Linear directions vanishing on the lattice (basis of its annihilator in R^2).
std::vector<Vec2> annihilator(const LatticeClass& lattice) {
  if (lattice.rank() == 0) return {Vec2(1, 0), Vec2(0, 1)};
  if (lattice.rank() == 2) return {};
  const IVec2& b = lattice.basis().front();
  Vec2 d(-double(b[1]), double(b[0]));
  return {d / d.norm()};
}

struct NodeTerms {
  Vec2 q;
  Mat2 ginv;
  Vec2 theta;
  double V;
};

}  // namespace

HamiltonianBound hamiltonian_sup_upper(const SurfaceModel& model, const LatticeClass& lattice,
                                       const HamiltonianBoundConfig& cfg) {
  require_torus(model, "hamiltonian_sup_upper");
  if (cfg.grid < 8) throw std::invalid_argument("hamiltonian grid must be at least 8");
  const int n = cfg.grid;
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const std::vector<Vec2> dirs = annihilator(lattice);
  const Eigen::Index dim = static_cast<Eigen::Index>(cells + dirs.size());
  const bool structured = model.is_structured();

  std::vector<NodeTerms> node(cells);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      NodeTerms& t = node[static_cast<std::size_t>(i) * n + j];
      t.q = Vec2(double(i) / n, double(j) / n);
      if (structured) {
        FieldTerms f = model.terms(t.q);
        t.ginv = f.g.inverse();
        t.theta = f.theta;
        t.V = f.V;
      }
    }
  }
  auto ham = [&](std::size_t c, const Vec2& p, Vec2* dp) {
    const NodeTerms& t = node[c];
    if (!structured) {
      if (dp) *dp = model.hamiltonian_dp(t.q, p);
      return model.hamiltonian(t.q, p);
    }
    Vec2 w = t.ginv * (p - t.theta);
    if (dp) *dp = w;
    return 0.5 * (p - t.theta).dot(w) + t.V;
  };
  auto unpack = [&](const Eigen::VectorXd& z) {
    GridFunction u;
    u.n = n;
    u.values.assign(z.data(), z.data() + cells);
    for (std::size_t d = 0; d < dirs.size(); ++d) u.linear += z[cells + d] * dirs[d];
    return u;
  };
  auto hard_max = [&](const GridFunction& u) {
    double m = -kInf;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        m = std::max(m, ham(static_cast<std::size_t>(i) * n + j, u.grid_gradient(i, j), nullptr));
      }
    }
    return m;
  };

  Eigen::VectorXd z = Eigen::VectorXd::Zero(dim);
  HamiltonianBound out;
  out.u = unpack(z);
  out.value = hard_max(out.u);
  double beta = cfg.beta_start;
  std::vector<double> H(cells);
  std::vector<Vec2> dH(cells);
  while (beta <= cfg.beta_end * (1.0 + 1e-12)) {
    LbfgsProblem prob;
    prob.evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd* grad) {
      GridFunction u = unpack(x);
      double m = -kInf;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          std::size_t c = static_cast<std::size_t>(i) * n + j;
          H[c] = ham(c, u.grid_gradient(i, j), &dH[c]);
          m = std::max(m, H[c]);
        }
      }
      double sum = 0.0;
      for (std::size_t c = 0; c < cells; ++c) sum += std::exp(beta * (H[c] - m));
      double f = m + std::log(sum) / beta;
      if (grad) {
        grad->setZero(dim);
        const double inv2h = n / 2.0;
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            std::size_t c = static_cast<std::size_t>(i) * n + j;
            double w = std::exp(beta * (H[c] - m)) / sum;
            Vec2 v = w * dH[c];
            (*grad)[wrap_index(i + 1, n) * n + j] += v.x() * inv2h;
            (*grad)[wrap_index(i - 1, n) * n + j] -= v.x() * inv2h;
            (*grad)[i * n + wrap_index(j + 1, n)] += v.y() * inv2h;
            (*grad)[i * n + wrap_index(j - 1, n)] -= v.y() * inv2h;
            for (std::size_t d = 0; d < dirs.size(); ++d) (*grad)[cells + d] += v.dot(dirs[d]);
          }
        }
      }
      return f;
    };
    LbfgsOptions opt;
    opt.max_iters = cfg.iters_per_stage;
    opt.grad_tol = 1e-10;
    opt.memory = 8;
    LbfgsResult res = lbfgs_minimize(prob, z, opt);
    if (res.stop == LbfgsStop::line_search) out.stalled = true;
    z = res.x;
    GridFunction u = unpack(z);
    double m = hard_max(u);
    if (m < out.value) {
      out.value = m;
      out.u = u;
    }
    beta *= 2.0;
  }
  // independent re-evaluation through the smooth interpolant on a 4x finer grid
  const int fine = 4 * n;
  double fm = -kInf;
  for (int i = 0; i < fine; ++i) {
    for (int j = 0; j < fine; ++j) {
      Vec2 q(double(i) / fine, double(j) / fine);
      fm = std::max(fm, model.hamiltonian(q, out.u.smooth_gradient(q)));
    }
  }
  out.fine_value = fm;
  out.fine_ok = fm <= out.value + 0.05 * std::abs(out.value) + 1e-12;
  return out;
}

// ---- brackets ---------------------------------------------------------------------------

LatticeClass pair_lattice(const BoundarySpec& q0, const BoundarySpec& q1) {
  std::vector<IVec2> gens = q0.generators();
  for (const IVec2& g : q1.generators()) gens.push_back(g);
  return LatticeClass(gens);
}

CriticalBracket bracket_loops(const SurfaceModel& model, const LatticeClass& lattice,
                              const std::string& name, const BracketConfig& cfg) {
  require_torus(model, "loop brackets");
  CriticalBracket b;
  b.name = name;
  HamiltonianBound hb = hamiltonian_sup_upper(model, lattice, cfg.hamiltonian);
  b.upper = hb.value;
  b.upper_witness = hb.u;
  if (!hb.fine_ok) b.note = "fine-grid re-evaluation exceeded the 5% margin";
  if (hb.stalled) b.note += b.note.empty() ? "hamiltonian optimizer stalled" : "; optimizer stalled";

  ZeroSectionMax z = e0(model);
  const std::vector<IVec2> classes = probe_classes(lattice);
  // below e0 the constant loop at the zero-section maximum is already negative
  double lo = z.value - cfg.tol / 2.0;
  {
    DiscretePath c;
    c.nodes.assign(cfg.probe.N + 1, z.point);
    c.T = 1.0;
    b.lower_witness = c;
    b.lower_space = PathSpace::loop(Vec2::Zero());
    b.lower_k = lo;
  }
  double hi = b.upper;
  for (int it = 0; it < cfg.max_bisections && hi - lo > cfg.tol / 2.0; ++it) {
    double mid = 0.5 * (lo + hi);
    bool negative = false;
    for (const IVec2& w : classes) {
      LoopProbeResult r = loop_probe(model, w, mid, cfg.probe);
      if (r.best_action < -1e-10) {
        negative = true;
        b.lower_witness = r.witness;
        b.lower_space = PathSpace::loop(to_vec(w));
        b.lower_k = mid;
        break;
      }
    }
    if (negative) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  b.lower = b.lower_k - 1e-9;
  b.method = "loop_probe+hamiltonian_grid" + std::to_string(cfg.hamiltonian.grid);
  return b;
}

CriticalBracket bracket_critical(const SurfaceModel& model, CriticalKind kind,
                                 const BracketConfig& cfg, const BoundarySpec* q0,
                                 const BoundarySpec* q1) {
  switch (kind) {
    case CriticalKind::c:
      return bracket_loops(model, LatticeClass({{1, 0}, {0, 1}}), "c", cfg);
    case CriticalKind::cu_c0:
      return bracket_loops(model, LatticeClass(), "c_u", cfg);
    case CriticalKind::c_pair:
      if (!q0 || !q1) throw std::invalid_argument("c_pair needs both boundaries");
      return bracket_loops(model, pair_lattice(*q0, *q1), "c_pair", cfg);
  }
  throw std::invalid_argument("unknown critical value kind");
}

CriticalBracket k_N_estimate(const SurfaceModel& model, const PathSpace& space, const Vec2& anchor,
                             const KnConfig& cfg) {
  if (!(cfg.lo < cfg.hi)) throw std::invalid_argument("k_N search needs lo < hi");
  CriticalBracket b;
  b.name = "k_N";
  b.method = "chord_grid+multistart";
  b.soft_upper = true;
  DiscretePath constant = constant_path_at(model, space, anchor, cfg.N, 1.0);

  auto witness = [&](double k) -> std::optional<DiscretePath> {
    if (discrete_action(model, constant, k).A < -1e-10) return constant;
    ChordSearch chord = best_chord(model, space, constant, k, cfg.head_grid, cfg.N);
    if (chord.action < -1e-10) return chord.path;
    MinimizeConfig mc;
    mc.N = cfg.N;
    mc.max_iters = cfg.max_iters;
    mc.stop_below = -1e-10;
    mc.verify = false;
    mc.threads = cfg.threads;
    std::vector<DiscretePath> inits;
    if (std::isfinite(chord.action)) inits.push_back(chord.path);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    while (static_cast<int>(inits.size()) < cfg.multistart) {
      double s0 = space.q0().is_point() ? 0.0 : u(rng);
      double s1 = space.q1().is_point() ? 0.0 : u(rng);
      DiscretePath p = chord_in_component(model, space, constant, s0, s1, cfg.N);
      set_optimal_time(model, p, k);
      inits.push_back(std::move(p));
    }
    MultistartResult ms = multistart_minimize(model, space, k, inits, mc);
    std::optional<IVec2> home;
    if (model.chart().periodic()) {
      home = path_winding(model.chart(), constant, space.q0(), space.q1());
    }
    for (const auto& run : ms.runs) {
      if (!(run.action.A < -1e-10)) continue;
      if (home && path_winding(model.chart(), run.path, space.q0(), space.q1()) != *home) continue;
      return run.path;
    }
    return std::nullopt;
  };

  double lo = cfg.lo, hi = cfg.hi;
  if (auto w = witness(lo)) {
    b.lower_witness = *w;
    b.lower_space = space;
    b.lower_k = lo;
  } else {
    b.note = "no negative path at the bottom of the search interval";
    b.lower_k = lo + 1e-9;
  }
  while (hi - lo > cfg.tol / 2.0) {
    double mid = 0.5 * (lo + hi);
    if (auto w = witness(mid)) {
      lo = mid;
      b.lower_witness = *w;
      b.lower_space = space;
      b.lower_k = mid;
    } else {
      hi = mid;
    }
  }
  b.lower = b.lower_k - 1e-9;
  b.upper = hi;
  return b;
}

double k_family(const SurfaceModel& model, const std::vector<Vec2>& family) {
  if (family.empty()) throw std::invalid_argument("isolating family is empty");
  const double a = model.convexity();
  double out = -kInf;
  for (const Vec2& q : family) {
    double t = model.dual_norm(q, model.theta(q));
    out = std::max(out, model.zero_section_energy(q) + t * t / (4.0 * a));
  }
  return out;
}

double k_omega(const SurfaceModel& model, const BoundarySpec& q0, const BoundarySpec& q1,
               const std::vector<std::vector<Vec2>>& families, double c_pair_upper) {
  std::vector<Vec2> points = intersect(model.chart(), q0, q1);
  if (points.empty()) throw std::invalid_argument("Q0 and Q1 do not intersect; k_omega undefined");
  double best = kInf;
  if (families.empty()) {
    best = k_family(model, points);
  } else {
    for (const auto& f : families) best = std::min(best, k_family(model, f));
  }
  return std::min(c_pair_upper, best);
}

// ---- chain audit ------------------------------------------------------------------------

ChainReport audit_chain(std::vector<ChainLink> links, double obstruction) {
  ChainReport r;
  r.links = std::move(links);
  r.obstruction = obstruction;
  constexpr double kSlack = 1e-6;
  for (std::size_t i = 0; i + 1 < r.links.size(); ++i) {
    const auto& a = r.links[i];
    const auto& b = r.links[i + 1];
    if (a.lower > b.upper + kSlack) {
      r.passed = false;
      r.failure += a.name + " lower " + std::to_string(a.lower) + " exceeds " + b.name +
                   " upper " + std::to_string(b.upper) + "; ";
    }
  }
  for (const auto& l : r.links) {
    if (l.lower > l.upper + kSlack) {
      r.passed = false;
      r.failure += l.name + " bracket is inverted; ";
    }
  }
  if (r.links.size() > 2 && obstruction > r.links[2].upper + 1e-3) {
    r.obstruction_ok = false;
    r.passed = false;
    r.failure += "obstruction exceeds the pair value; ";
  }
  return r;
}

ChainBrackets chain_audit(const SurfaceModel& model, const BoundarySpec& q0,
                          const BoundarySpec& q1, const BracketConfig& cfg) {
  ChainBrackets out;
  out.e0 = e0(model);
  out.cu = bracket_critical(model, CriticalKind::cu_c0, cfg);
  LatticeClass pair = pair_lattice(q0, q1);
  if (pair.rank() == 0) {
    out.c_pair = out.cu;
  } else {
    out.c_pair = bracket_loops(model, pair, "c_pair", cfg);
  }
  out.c_pair.name = "c_pair";
  if (LatticeClass({{1, 0}, {0, 1}}).basis() == pair.basis()) {
    out.c = out.c_pair;
  } else {
    out.c = bracket_critical(model, CriticalKind::c, cfg);
  }
  out.c.name = "c";
  const double t = model.theta_sup();
  const double top = out.e0.value + t * t / (4.0 * model.convexity());
  std::vector<ChainLink> links = {
      {"e0", out.e0.value, out.e0.value},
      {"c_u", out.cu.lower, out.cu.upper},
      {"c_pair", out.c_pair.lower, out.c_pair.upper},
      {"c", out.c.lower, out.c.upper},
      {"k0", out.c.lower, top},
      {"e0+theta^2/4a", top, top},
  };
  out.report = audit_chain(std::move(links), k_obstruction(model, q0, q1));
  return out;
}

void write_bracket_csv_header(std::ostream& out) {
  out << "name,lower,upper,lower_witness_file,upper_witness_file,method\n";
}

void write_bracket_csv_row(std::ostream& out, const CriticalBracket& b,
                           const std::string& lower_file, const std::string& upper_file) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g", b.lower, b.upper);
  out << b.name << ',' << buf << ',' << lower_file << ',' << upper_file << ',' << b.method
      << (b.soft_upper ? "+soft_upper" : "") << '\n';
}

void write_grid_function_csv(std::ostream& out, const GridFunction& u) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "# n=%d\n# linear_x=%.17g\n# linear_y=%.17g\ni,j,u\n", u.n,
                u.linear.x(), u.linear.y());
  out << buf;
  for (int i = 0; i < u.n; ++i) {
    for (int j = 0; j < u.n; ++j) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g\n", i, j, u.at(i, j));
      out << buf;
    }
  }
}

}  // namespace conorbit
