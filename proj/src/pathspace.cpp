#include "conorbit/pathspace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace conorbit {

namespace {

void require_valid(const SurfaceModel& model, const DiscretePath& path) {
  if (path.segments() < 1) throw std::invalid_argument("path needs at least one segment");
  if (!(path.T > 0.0) || !std::isfinite(path.T)) {
    throw std::invalid_argument("path time must be positive and finite");
  }
  for (int i = 0; i <= path.segments(); ++i) model.chart().require(path.nodes[i], i);
}

}  // namespace

std::vector<SegmentSample> segment_samples(const SurfaceModel& model, const DiscretePath& path) {
  require_valid(model, path);
  const int n = path.segments();
  const double tau = path.T / n;
  std::vector<SegmentSample> out(n);
  for (int i = 0; i < n; ++i) {
    Vec2 chord = path.nodes[i + 1] - path.nodes[i];
    out[i].midpoint = 0.5 * (path.nodes[i] + path.nodes[i + 1]);
    out[i].velocity = chord / tau;
    out[i].lagrangian = model.sample(out[i].midpoint, out[i].velocity);
  }
  return out;
}

ActionValue discrete_action(const SurfaceModel& model, const DiscretePath& path, double k,
                            NodeGradient* gradient) {
  auto segs = segment_samples(model, path);
  const int n = path.segments();
  const double tau = path.T / n;
  const double h = 1.0 / n;
  long double sum_l = 0.0L, sum_e = 0.0L, len = 0.0L, kin = 0.0L;
  ActionValue out;
  out.T = path.T;
  out.energy_min = std::numeric_limits<double>::infinity();
  out.energy_max = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto& s = segs[i];
    double speed = model.norm(s.midpoint, s.velocity);
    sum_l += s.lagrangian.L + k;
    sum_e += k - s.lagrangian.E;
    len += speed * tau;
    kin += (speed * path.T) * (speed * path.T) * h;
    out.energy_min = std::min(out.energy_min, s.lagrangian.E);
    out.energy_max = std::max(out.energy_max, s.lagrangian.E);
    out.max_speed = std::max(out.max_speed, speed);
  }
  if (gradient) {
    gradient->nodes.assign(n + 1, Vec2::Zero());
    for (int i = 0; i < n; ++i) {
      const auto& ls = segs[i].lagrangian;
      Vec2 half_q = 0.5 * tau * ls.dL_dq;
      gradient->nodes[i] += half_q - ls.dL_dv;
      gradient->nodes[i + 1] += half_q + ls.dL_dv;
    }
    gradient->dT = static_cast<double>(h * sum_e);
  }
  out.A = static_cast<double>(tau * sum_l);
  out.dA_dT = static_cast<double>(h * sum_e);
  out.length = static_cast<double>(len);
  out.kinetic = static_cast<double>(kin);
  out.energy_mean = k - out.dA_dT;
  return out;
}

NodeGradient node_gradient(const SurfaceModel& model, const DiscretePath& path, double k) {
  auto segs = segment_samples(model, path);
  const int n = path.segments();
  const double tau = path.T / n;
  const double h = 1.0 / n;
  NodeGradient g;
  g.nodes.assign(n + 1, Vec2::Zero());
  long double dT = 0.0L;
  for (int i = 0; i < n; ++i) {
    const auto& ls = segs[i].lagrangian;
    Vec2 half_q = 0.5 * tau * ls.dL_dq;
    g.nodes[i] += half_q - ls.dL_dv;
    g.nodes[i + 1] += half_q + ls.dL_dv;
    dT += k - ls.E;
  }
  g.dT = static_cast<double>(h * dT);
  return g;
}

std::pair<Vec2, Vec2> endpoint_momenta(const SurfaceModel& model, const DiscretePath& path) {
  auto segs = segment_samples(model, path);
  const int n = path.segments();
  const double tau = path.T / n;
  const auto& first = segs.front().lagrangian;
  const auto& last = segs.back().lagrangian;
  return {first.dL_dv - 0.5 * tau * first.dL_dq, last.dL_dv + 0.5 * tau * last.dL_dq};
}

double lower_bound_estimate(const ActionValue& value, double a, double b, double k) {
  return a / value.T * value.length * value.length + value.T * (k - b);
}

TimeSplit time_split(const SurfaceModel& model, const DiscretePath& path, double k) {
  if (!model.is_structured()) throw UnsupportedError("time split needs a structured model");
  require_valid(model, path);
  const int n = path.segments();
  TimeSplit out;
  long double kin = 0.0L, mag = 0.0L, pot = 0.0L;
  for (int i = 0; i < n; ++i) {
    Vec2 chord = path.nodes[i + 1] - path.nodes[i];
    FieldTerms t = model.terms(0.5 * (path.nodes[i] + path.nodes[i + 1]));
    kin += 0.5 * chord.dot(t.g * chord);
    mag += t.theta.dot(chord);
    pot += k - t.V;
  }
  out.K = static_cast<double>(n * kin);
  out.Theta = static_cast<double>(mag);
  out.W = static_cast<double>(pot / n);
  return out;
}

std::optional<double> optimal_time(const SurfaceModel& model, const DiscretePath& path, double k) {
  if (model.is_structured()) {
    TimeSplit s = time_split(model, path, k);
    if (s.W <= 0.0) return std::nullopt;
    if (s.K <= 0.0) return 0.0;
    return std::sqrt(s.K / s.W);
  }
  DiscretePath trial = path;
  auto action_at = [&](double log_t) {
    trial.T = std::exp(log_t);
    return discrete_action(model, trial, k).A;
  };
  constexpr int kGrid = 121;
  const double lo = std::log(1e-6), hi = std::log(1e6);
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    double v = action_at(lo + (hi - lo) * i / (kGrid - 1));
    if (v < best_val) {
      best_val = v;
      best = i;
    }
  }
  if (best == kGrid - 1) return std::nullopt;
  if (best == 0) return 0.0;
  const double step = (hi - lo) / (kGrid - 1);
  double a = lo + (best - 1) * step, b = lo + (best + 1) * step;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc = action_at(c), fd = action_at(d);
  for (int it = 0; it < 100 && b - a > 1e-12; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - ratio * (b - a);
      fc = action_at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + ratio * (b - a);
      fd = action_at(d);
    }
  }
  return std::exp(0.5 * (a + b));
}

// ---- PathSpace -------------------------------------------------------------------

PathSpace PathSpace::open(BoundarySpec q0, BoundarySpec q1) {
  PathSpace s;
  s.q0_ = std::move(q0);
  s.q1_ = std::move(q1);
  return s;
}

PathSpace PathSpace::loop(Vec2 winding) {
  PathSpace s;
  s.loop_ = true;
  s.winding_ = winding;
  return s;
}

Eigen::Index PathSpace::dimension(int segments) const {
  if (loop_) return 2 * segments + 1;
  return 2 * (segments - 1) + (q0_.is_point() ? 0 : 1) + (q1_.is_point() ? 0 : 1) + 1;
}

Eigen::VectorXd PathSpace::pack(const DiscretePath& path) const {
  const int n = path.segments();
  Eigen::VectorXd z(dimension(n));
  Eigen::Index j = 0;
  if (loop_) {
    for (int i = 0; i < n; ++i) {
      z[j++] = path.nodes[i].x();
      z[j++] = path.nodes[i].y();
    }
  } else {
    if (!q0_.is_point()) z[j++] = path.s0;
    for (int i = 1; i < n; ++i) {
      z[j++] = path.nodes[i].x();
      z[j++] = path.nodes[i].y();
    }
    if (!q1_.is_point()) z[j++] = path.s1;
  }
  z[j] = path.T;
  return z;
}

void PathSpace::unpack(const Eigen::VectorXd& z, DiscretePath& path) const {
  const int n = path.segments();
  if (z.size() != dimension(n)) throw std::invalid_argument("variable vector has wrong size");
  Eigen::Index j = 0;
  if (loop_) {
    for (int i = 0; i < n; ++i, j += 2) path.nodes[i] = {z[j], z[j + 1]};
  } else {
    if (!q0_.is_point()) path.s0 = z[j++];
    for (int i = 1; i < n; ++i, j += 2) path.nodes[i] = {z[j], z[j + 1]};
    if (!q1_.is_point()) path.s1 = z[j++];
  }
  path.T = z[j];
  sync(path);
}

void PathSpace::sync(DiscretePath& path) const {
  const int n = path.segments();
  if (loop_) {
    path.nodes[n] = path.nodes[0] + winding_;
    return;
  }
  path.nodes[0] = q0_.at(path.s0) + path.offset0;
  path.nodes[n] = q1_.at(path.s1) + path.offset1;
}

void PathSpace::infer_offsets(DiscretePath& path) const {
  if (loop_) return;
  Vec2 d0 = path.nodes.front() - q0_.at(path.s0);
  Vec2 d1 = path.nodes.back() - q1_.at(path.s1);
  path.offset0 = {std::round(d0.x()), std::round(d0.y())};
  path.offset1 = {std::round(d1.x()), std::round(d1.y())};
}

Eigen::VectorXd PathSpace::reduce_gradient(const DiscretePath& path, const NodeGradient& g) const {
  const int n = path.segments();
  Eigen::VectorXd out(dimension(n));
  Eigen::Index j = 0;
  if (loop_) {
    for (int i = 0; i < n; ++i) {
      Vec2 gi = g.nodes[i];
      if (i == 0) gi += g.nodes[n];
      out[j++] = gi.x();
      out[j++] = gi.y();
    }
  } else {
    if (!q0_.is_point()) out[j++] = g.nodes[0].dot(q0_.tangent(path.s0));
    for (int i = 1; i < n; ++i) {
      out[j++] = g.nodes[i].x();
      out[j++] = g.nodes[i].y();
    }
    if (!q1_.is_point()) out[j++] = g.nodes[n].dot(q1_.tangent(path.s1));
  }
  out[j] = g.dT;
  return out;
}

std::vector<Vec2> resample_polyline(const std::vector<Vec2>& vertices, int segments) {
  const int edges = static_cast<int>(vertices.size()) - 1;
  if (edges < 1) throw std::invalid_argument("polyline needs at least two vertices");
  if (segments < edges) throw std::invalid_argument("fewer segments than polyline edges");
  std::vector<double> lengths(edges);
  double total = 0.0;
  for (int e = 0; e < edges; ++e) {
    lengths[e] = (vertices[e + 1] - vertices[e]).norm();
    total += lengths[e];
  }
  std::vector<int> counts(edges, 1);
  if (total > 0.0) {
    std::vector<double> remainders(edges);
    int used = 0;
    for (int e = 0; e < edges; ++e) {
      double exact = segments * lengths[e] / total;
      counts[e] = std::max(1, static_cast<int>(std::floor(exact)));
      remainders[e] = exact - std::floor(exact);
      used += counts[e];
    }
    while (used < segments) {
      int e = static_cast<int>(std::max_element(remainders.begin(), remainders.end()) -
                               remainders.begin());
      ++counts[e];
      remainders[e] -= 1.0;
      ++used;
    }
    while (used > segments) {
      int e = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[e];
      --used;
    }
  } else {
    counts.back() += segments - edges;
  }
  std::vector<Vec2> nodes;
  nodes.reserve(segments + 1);
  for (int e = 0; e < edges; ++e) {
    for (int i = 0; i < counts[e]; ++i) {
      double t = double(i) / counts[e];
      nodes.push_back((1.0 - t) * vertices[e] + t * vertices[e + 1]);
    }
  }
  nodes.push_back(vertices.back());
  return nodes;
}

DiscretePath PathSpace::straight(double s0, double s1, Vec2 offset1, int segments, double T,
                                 Vec2 offset0) const {
  if (loop_) throw std::invalid_argument("straight() is for open path spaces");
  DiscretePath p;
  p.s0 = s0;
  p.s1 = s1;
  p.T = T;
  p.offset0 = offset0;
  p.offset1 = offset1;
  Vec2 a = q0_.at(s0) + offset0, b = q1_.at(s1) + offset1;
  p.nodes.resize(segments + 1);
  for (int i = 0; i <= segments; ++i) {
    double t = double(i) / segments;
    p.nodes[i] = (1.0 - t) * a + t * b;
  }
  return p;
}

DiscretePath PathSpace::polyline(const std::vector<Vec2>& vertices, double s0, double s1,
                                 int segments, double T) const {
  DiscretePath p;
  p.nodes = resample_polyline(vertices, segments);
  p.s0 = s0;
  p.s1 = s1;
  p.T = T;
  infer_offsets(p);
  sync(p);
  return p;
}

Eigen::VectorXd action_gradient(const SurfaceModel& model, const PathSpace& space,
                                const DiscretePath& path, double k) {
  return space.reduce_gradient(path, node_gradient(model, path, k));
}

// ---- components ------------------------------------------------------------------

IVec2 path_winding(const Chart& chart, const DiscretePath& path, const BoundarySpec& q0,
                   const BoundarySpec& q1) {
  if (!chart.periodic()) throw UnsupportedError("component labels need a flat_torus chart");
  Vec2 travel = Vec2::Zero();
  for (int i = 0; i < path.segments(); ++i) {
    travel += chart.displacement(path.nodes[i], path.nodes[i + 1]);
  }
  Vec2 reference = chart.displacement(q0.at(0.0), q1.at(0.0));
  Vec2 w = (q0.at(path.s0) - q0.at(0.0)) + travel + (q1.at(0.0) - q1.at(path.s1)) - reference;
  return {std::llround(w.x()), std::llround(w.y())};
}

IVec2 classify_component(const Chart& chart, const DiscretePath& path, const BoundarySpec& q0,
                         const BoundarySpec& q1) {
  IVec2 w = path_winding(chart, path, q0, q1);
  std::vector<IVec2> gens = q0.generators();
  auto g1 = q1.generators();
  gens.insert(gens.end(), g1.begin(), g1.end());
  return LatticeClass(gens).reduce(w);
}

// ---- serialization --------------------------------------------------------------

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_path_csv(std::ostream& out, const DiscretePath& path) {
  out << "# s0=" << fmt17(path.s0) << "\n";
  out << "# s1=" << fmt17(path.s1) << "\n";
  out << "# T=" << fmt17(path.T) << "\n";
  out << "# N=" << path.segments() << "\n";
  out << "i,x,y\n";
  for (int i = 0; i <= path.segments(); ++i) {
    out << i << "," << fmt17(path.nodes[i].x()) << "," << fmt17(path.nodes[i].y()) << "\n";
  }
}

void write_path_csv(const std::string& file, const DiscretePath& path) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file);
  write_path_csv(out, path);
}

DiscretePath read_path_csv(std::istream& in) {
  DiscretePath p;
  std::string line;
  int declared = -1;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      std::string value = line.substr(eq + 1);
      if (key == "s0") p.s0 = std::stod(value);
      else if (key == "s1") p.s1 = std::stod(value);
      else if (key == "T") p.T = std::stod(value);
      else if (key == "N") declared = std::stoi(value);
      continue;
    }
    if (!header) {
      if (line != "i,x,y") throw std::runtime_error("path csv: expected header i,x,y");
      header = true;
      continue;
    }
    std::stringstream row(line);
    std::string a, b, c;
    std::getline(row, a, ',');
    std::getline(row, b, ',');
    std::getline(row, c, ',');
    if (std::stoi(a) != static_cast<int>(p.nodes.size())) {
      throw std::runtime_error("path csv: node indices out of order");
    }
    p.nodes.emplace_back(std::stod(b), std::stod(c));
  }
  if (declared >= 0 && declared != p.segments()) {
    throw std::runtime_error("path csv: N does not match the node count");
  }
  return p;
}

DiscretePath read_path_csv(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file);
  return read_path_csv(in);
}

}  // namespace conorbit
