#include "conorbit/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace conorbit {

BoundarySpec BoundaryText::build() const {
  if (kind == "point") return BoundarySpec::point({x, y});
  if (kind == "circle") return BoundarySpec::circle({x, y}, r);
  if (kind == "hline") return BoundarySpec::horizontal_line(y);
  if (kind == "vline") return BoundarySpec::vertical_line(x);
  throw ConfigError("", "unknown boundary kind '" + kind + "'");
}

std::string BoundaryText::describe() const { return build().description(); }

namespace {

BoundaryText point_at(double x, double y) { return {"point", x, y, 0.0}; }
BoundaryText circle_at(double x, double y, double r) { return {"circle", x, y, r}; }
BoundaryText hline(double y) { return {"hline", 0.0, y, 0.0}; }
BoundaryText vline(double x) { return {"vline", x, 0.0, 0.0}; }

std::vector<double> k_range(double lo, double hi, double step) {
  std::vector<double> out;
  for (int i = 0;; ++i) {
    double k = lo + i * step;
    if (k > hi + 1e-12) break;
    out.push_back(std::round(k * 1e12) / 1e12);
  }
  return out;
}

std::vector<Scenario> make_builtins() {
  std::vector<Scenario> out;
  {
    Scenario s;
    s.name = "torus_example";
    s.description = "magnetic torus, Q0 = point (1/2, 0), Q1 = line y = 1/2";
    s.q0 = point_at(0.5, 0.0);
    s.q1 = hline(0.5);
    s.k = 0.75;
    s.facts.values = {{"c", 0.5}, {"c_u", 0.125}, {"c_pair", 0.5}, {"k_obstruction", 0.5}};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "figure4";
    s.description = "two contractible circles meeting where theta vanishes; the segment of y = 1/2 "
                    "between them carries the full field";
    s.params = {{"psi_lo", 0.4}, {"psi_hi", 0.6}};
    s.q0 = circle_at(0.35, 0.5, 0.25);
    s.q1 = circle_at(0.65, 0.5, 0.25);
    s.anchor = Vec2(0.5, 0.3);
    s.epsilon = 0.1;
    s.k = 0.25;
    s.k_grid = k_range(0.15, 0.45, 0.05);
    s.facts.values = {{"c", 0.5}, {"c_u", 0.125}, {"c_pair", 0.125}, {"k_N", 0.5}};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "figure1";
    s.description = "flat torus, orthogonal closed geodesics y = 1/2 and x = 1/2";
    s.params = {{"theta_scale", 0.0}};
    s.q0 = hline(0.5);
    s.q1 = vline(0.5);
    s.anchor = Vec2(0.5, 0.5);
    s.k = 0.25;
    s.facts.values = {{"c", 0.0}, {"c_u", 0.0}, {"c_pair", 0.0}};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "figure2";
    s.description = "magnetic torus, circles of radius 0.3 about (1/2, 1/2) and (0, 1/2) "
                    "meeting in four points";
    s.q0 = circle_at(0.5, 0.5, 0.3);
    s.q1 = circle_at(0.0, 0.5, 0.3);
    s.k = 0.25;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "mechanical";
    s.description = "mechanical torus with V = 0.7 sin^2(pi x) sin^2(pi y)";
    s.model_id = "torus_mechanical";
    s.params = {{"amplitude", 0.7}};
    s.q0 = point_at(0.25, 0.25);
    s.q1 = point_at(0.75, 0.75);
    s.k = 1.0;
    s.facts.values = {{"e0", 0.7}, {"c", 0.7}, {"c_u", 0.7}, {"c_pair", 0.7}};
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "flat_points";
    s.description = "flat torus, point to point";
    s.params = {{"theta_scale", 0.0}};
    s.q0 = point_at(0.0, 0.0);
    s.q1 = point_at(0.3, 0.4);
    s.k = 0.5;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "flat_lines";
    s.description = "flat torus, parallel closed geodesics x = 0.1 and x = 0.4";
    s.params = {{"theta_scale", 0.0}};
    s.q0 = vline(0.1);
    s.q1 = vline(0.4);
    s.k = 0.5;
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "hyperbolic_circle";
    s.description = "hyperbolic half-plane with the horocycle one-form dx/y; circles of radius r "
                    "about (0, 1)";
    s.model_id = "half_plane_horocycle";
    s.q0 = point_at(0.0, 1.0);
    s.q1 = point_at(0.0, 1.0);
    s.k = 0.5;
    s.facts.values = {{"e0", 0.0}, {"c_u", 0.5}, {"c", 0.5}, {"c_pair", 0.5}};
    s.facts.note = "critical values of the horocycle model are known in closed form, not estimated";
    out.push_back(s);
  }
  {
    Scenario s;
    s.name = "hyperbolic_rectangle";
    s.description = "rounded hyperbolic rectangle with a stronger field away from the corners "
                    "(recorded targets only)";
    s.model_id = "half_plane_horocycle";
    s.params = {{"theta_scale", 2.0}};
    s.q0 = point_at(0.0, 1.0);
    s.q1 = point_at(0.0, 1.0);
    s.k = 0.5;
    s.facts.values = {{"c_u_low", 1.5}, {"c_u_high", 2.0}, {"k_intersection", 0.5}};
    s.facts.note = "qualitative construction; only the stated targets are recorded";
    out.push_back(s);
  }
  return out;
}

double to_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v)) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return v;
}

std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

const std::vector<Scenario>& builtin_scenarios() {
  static const std::vector<Scenario> all = make_builtins();
  return all;
}

const Scenario& builtin_scenario(const std::string& name) {
  for (const auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  throw ConfigError("scenario", "unknown built-in scenario '" + name + "'");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::minimize:
      return "minimize";
    case Task::mountain_pass:
      return "mountain_pass";
    case Task::struwe_scan:
      return "struwe_scan";
    case Task::brackets:
      return "brackets";
    case Task::chain_audit:
      return "chain_audit";
    case Task::no_connection:
      return "no_connection";
    case Task::reproduce:
      return "reproduce";
  }
  return "unknown";
}

Task parse_task(const std::string& text) {
  for (Task t : {Task::minimize, Task::mountain_pass, Task::struwe_scan, Task::brackets,
                 Task::chain_audit, Task::no_connection, Task::reproduce}) {
    if (to_string(t) == text) return t;
  }
  throw ConfigError("task", "unknown task '" + text + "'");
}

ConfigDoc ConfigDoc::parse(const std::string& text) {
  ConfigDoc doc;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("", "line " + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(number) + ": empty key");
    if (doc.values.count(key)) {
      throw ConfigError(key, "duplicate key (line " + std::to_string(number) + ")");
    }
    doc.values[key] = value;
    doc.lines[key] = number;
  }
  return doc;
}

ConfigDoc ConfigDoc::load(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("", "cannot read config file " + file);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"task", "enum", "all",
       "minimize | mountain_pass | struwe_scan | brackets | chain_audit | no_connection | reproduce"},
      {"scenario", "string", "all", "built-in scenario used as the base; other keys override it"},
      {"name", "string", "reproduce", "fixture name; empty runs the whole suite"},
      {"model.id", "string", "all", "catalog model id"},
      {"model.<param>", "number", "all", "catalog parameter of the model"},
      {"q0.kind", "enum", "all", "point | circle | hline | vline"},
      {"q0.x", "number", "all", "point x, circle centre x, or vline position"},
      {"q0.y", "number", "all", "point y, circle centre y, or hline position"},
      {"q0.r", "number", "all", "circle radius"},
      {"q1.kind", "enum", "all", "as q0.kind"},
      {"q1.x", "number", "all", "as q0.x"},
      {"q1.y", "number", "all", "as q0.y"},
      {"q1.r", "number", "all", "as q0.r"},
      {"k", "number", "minimize mountain_pass no_connection", "energy value"},
      {"k_grid", "grid", "struwe_scan", "a:b:step (inclusive) or comma list, ascending"},
      {"anchor.x", "number", "mountain_pass struwe_scan brackets", "point of Q0 and Q1"},
      {"anchor.y", "number", "mountain_pass struwe_scan brackets", "point of Q0 and Q1"},
      {"epsilon", "number", "mountain_pass struwe_scan", "radius of the anchor neighbourhood"},
      {"component.x", "integer", "minimize", "lattice shift of the Q1 end (torus lift)"},
      {"component.y", "integer", "minimize", "lattice shift of the Q1 end (torus lift)"},
      {"solver.N", "integer", "minimize", "segments (>= 16)"},
      {"solver.max_iters", "integer", "minimize", "iteration cap"},
      {"solver.grad_tol", "number", "minimize", "gradient tolerance; 0 selects 1e-7 sqrt(N)"},
      {"solver.T_min", "number", "minimize", "lower guard on T"},
      {"solver.T_max", "number", "minimize", "T beyond this is reported unbounded"},
      {"solver.armijo", "number", "minimize", "Armijo constant in (0, 0.5)"},
      {"solver.backtrack", "number", "minimize", "backtracking factor in (0, 1)"},
      {"solver.memory", "integer", "minimize", "L-BFGS memory"},
      {"solver.multistart", "integer", "minimize", "number of starts"},
      {"solver.v_max", "number", "minimize", "trust-region speed; 0 uses 10 sqrt(2k)"},
      {"string.beads", "integer", "mountain_pass struwe_scan", "beads including both ends"},
      {"string.N", "integer", "mountain_pass struwe_scan", "segments per bead"},
      {"string.max_iters", "integer", "mountain_pass struwe_scan", "string iterations"},
      {"string.step", "number", "mountain_pass struwe_scan", "string step size"},
      {"string.tol", "number", "mountain_pass struwe_scan", "saddle gradient tolerance"},
      {"string.head_grid", "integer", "mountain_pass struwe_scan", "endpoint grid for the head"},
      {"bracket.tol", "number", "brackets chain_audit", "bisection target width"},
      {"bracket.grid", "integer", "brackets chain_audit", "Hamiltonian grid size"},
      {"bracket.k_lo", "number", "brackets", "k_N search interval start"},
      {"bracket.k_hi", "number", "brackets", "k_N search interval end"},
      {"expect.action", "number", "minimize mountain_pass", "expected action"},
      {"expect.tol", "number", "minimize mountain_pass", "tolerance for expect.action"},
      {"expect.status", "string", "minimize mountain_pass", "expected solver status"},
      {"expect.verdict", "string", "no_connection", "DISJOINT | OVERLAP"},
      {"expect.contains.<bracket>", "number", "brackets", "value the named bracket must contain"},
      {"expect.max_width", "number", "brackets", "largest admissible bracket width"},
      {"seed", "integer", "all", "random seed"},
      {"threads", "integer", "all", "worker threads"},
      {"out_dir", "string", "all", "output directory"},
  };
  return schema;
}

std::vector<double> parse_grid(const std::string& key, const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(trim(item));
    if (parts.size() != 3) throw ConfigError(key, "expected a:b:step");
    double a = to_number(key, parts[0]), b = to_number(key, parts[1]),
           step = to_number(key, parts[2]);
    if (!(step > 0.0) || b < a) throw ConfigError(key, "grid needs step > 0 and a <= b");
    out = k_range(a, b, step);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
  }
  if (out.empty()) throw ConfigError(key, "empty grid");
  if (!std::is_sorted(out.begin(), out.end())) throw ConfigError(key, "grid must be ascending");
  return out;
}

RunConfig build_run_config(const ConfigDoc& doc) {
  RunConfig rc;
  const auto& v = doc.values;
  std::set<std::string> used;
  auto get = [&](const std::string& key) -> const std::string* {
    auto it = v.find(key);
    if (it == v.end()) return nullptr;
    used.insert(key);
    return &it->second;
  };
  auto number = [&](const std::string& key, double& target) {
    if (auto s = get(key)) target = to_number(key, *s);
  };
  auto integer = [&](const std::string& key, int& target) {
    if (auto s = get(key)) target = static_cast<int>(to_integer(key, *s));
  };

  const std::string* task = get("task");
  if (!task) throw ConfigError("task", "missing required key");
  rc.task = parse_task(*task);

  if (auto s = get("scenario")) {
    rc.scenario = builtin_scenario(*s);
  } else {
    rc.scenario.name = "custom";
  }
  Scenario& sc = rc.scenario;
  if (auto s = get("model.id")) {
    if (*s != sc.model_id) sc.params.clear();
    sc.model_id = *s;
  }
  const auto& catalog = model_catalog();
  auto entry = std::find_if(catalog.begin(), catalog.end(),
                            [&](const CatalogEntry& e) { return e.id == sc.model_id; });
  if (entry == catalog.end()) throw ConfigError("model.id", "unknown model '" + sc.model_id + "'");
  for (const auto& [key, value] : v) {
    if (key.rfind("model.", 0) != 0 || key == "model.id") continue;
    std::string param = key.substr(6);
    if (!entry->defaults.count(param)) {
      throw ConfigError(key, "model '" + sc.model_id + "' has no parameter '" + param + "'");
    }
    sc.params[param] = to_number(key, value);
    used.insert(key);
  }
  for (auto* b : {&sc.q0, &sc.q1}) {
    std::string prefix = b == &sc.q0 ? "q0." : "q1.";
    if (auto s = get(prefix + "kind")) {
      if (*s != "point" && *s != "circle" && *s != "hline" && *s != "vline") {
        throw ConfigError(prefix + "kind", "expected point | circle | hline | vline");
      }
      b->kind = *s;
    }
    number(prefix + "x", b->x);
    number(prefix + "y", b->y);
    number(prefix + "r", b->r);
    if (b->kind == "circle" && !(b->r > 0.0)) throw ConfigError(prefix + "r", "must be positive");
  }
  number("k", sc.k);
  if (auto s = get("k_grid")) sc.k_grid = parse_grid("k_grid", *s);
  if (get("anchor.x") || get("anchor.y")) {
    Vec2 a = sc.anchor.value_or(Vec2::Zero());
    number("anchor.x", a.x());
    number("anchor.y", a.y());
    sc.anchor = a;
  }
  number("epsilon", sc.epsilon);
  if (!(sc.epsilon > 0.0)) throw ConfigError("epsilon", "must be positive");
  if (auto s = get("name")) rc.reproduce_name = *s;

  int cx = 0, cy = 0;
  integer("component.x", cx);
  integer("component.y", cy);
  rc.component = Vec2(cx, cy);

  MinimizeConfig& m = rc.solver;
  integer("solver.N", m.N);
  integer("solver.max_iters", m.max_iters);
  number("solver.grad_tol", m.grad_tol);
  number("solver.T_min", m.T_min);
  number("solver.T_max", m.T_max);
  number("solver.armijo", m.armijo);
  number("solver.backtrack", m.backtrack);
  integer("solver.memory", m.memory);
  integer("solver.multistart", m.multistart);
  number("solver.v_max", m.v_max);

  StringConfig& st = rc.string;
  integer("string.beads", st.beads);
  integer("string.N", st.N);
  integer("string.max_iters", st.max_iters);
  number("string.step", st.step);
  number("string.tol", st.tol);
  integer("string.head_grid", st.head_grid);
  st.epsilon = sc.epsilon;

  number("bracket.tol", rc.bracket.tol);
  integer("bracket.grid", rc.bracket.hamiltonian.grid);
  number("bracket.k_lo", rc.kn.lo);
  number("bracket.k_hi", rc.kn.hi);
  rc.kn.tol = rc.bracket.tol;

  if (get("expect.action")) rc.expect.action = to_number("expect.action", v.at("expect.action"));
  number("expect.tol", rc.expect.tol);
  if (auto s = get("expect.status")) rc.expect.status = *s;
  if (auto s = get("expect.verdict")) {
    if (*s != "DISJOINT" && *s != "OVERLAP") throw ConfigError("expect.verdict", "DISJOINT | OVERLAP");
    rc.expect.verdict = *s;
  }
  for (const auto& [key, value] : v) {
    if (key.rfind("expect.contains.", 0) != 0) continue;
    rc.expect.contains[key.substr(16)] = to_number(key, value);
    used.insert(key);
  }
  if (get("expect.max_width")) {
    rc.expect.max_width = to_number("expect.max_width", v.at("expect.max_width"));
  }

  int seed = 1;
  integer("seed", seed);
  rc.seed = static_cast<std::uint64_t>(seed);
  integer("threads", rc.threads);
  if (rc.threads < 1) throw ConfigError("threads", "must be positive");
  if (auto s = get("out_dir")) rc.out_dir = *s;

  for (const auto& [key, value] : v) {
    if (!used.count(key)) throw ConfigError(key, "unknown key");
  }

  // task requirements
  auto require = [&](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
  };
  if (rc.task == Task::mountain_pass || rc.task == Task::struwe_scan) {
    require(sc.anchor.has_value(), "anchor.x", "required by " + to_string(rc.task));
  }
  if (rc.task == Task::struwe_scan) require(!sc.k_grid.empty(), "k_grid", "required by struwe_scan");
  if (rc.task == Task::no_connection) {
    require(sc.q0.kind == "point" && sc.q1.kind == "point", "q0.kind",
            "no_connection needs two points");
  }
  try {
    m.threads = rc.threads;
    m.seed = rc.seed;
    if (rc.task != Task::reproduce) m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("solver", e.what());
  }
  st.head = m;
  rc.bracket.probe.threads = rc.threads;
  rc.kn.threads = rc.threads;
  rc.kn.seed = rc.seed;
  if (st.beads < 3) throw ConfigError("string.beads", "must be at least 3");
  if (rc.bracket.hamiltonian.grid < 8) throw ConfigError("bracket.grid", "must be at least 8");
  return rc;
}

}  // namespace conorbit
