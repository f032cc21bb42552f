#include "conorbit/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace conorbit {

std::string to_string(LbfgsStop stop) {
  switch (stop) {
    case LbfgsStop::converged:
      return "converged";
    case LbfgsStop::max_iters:
      return "max_iters";
    case LbfgsStop::line_search:
      return "line_search";
    case LbfgsStop::monitor:
      return "monitor";
  }
  return "unknown";
}

namespace {

struct Pair {
  Eigen::VectorXd s, y;
  double rho;
};

}  // namespace

LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, Eigen::VectorXd x0,
                           const LbfgsOptions& options) {
  LbfgsResult out;
  auto stationarity = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
    return problem.stationarity ? problem.stationarity(x, g) : g.norm();
  };
  auto precondition = [&](Eigen::VectorXd& r) {
    if (problem.precondition) problem.precondition(r);
  };
  auto try_eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    ++out.evaluations;
    try {
      double f = problem.evaluate(x, g);
      return std::isfinite(f) ? f : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  Eigen::VectorXd x = std::move(x0);
  if (problem.project) problem.project(x);
  Eigen::VectorXd g(x.size());
  double f = try_eval(x, &g);
  if (!std::isfinite(f)) throw std::domain_error("initial point is infeasible");
  if (problem.refresh) problem.refresh(x);

  std::deque<Pair> memory;
  const double noise = options.noise_floor;

  int it = 0;
  for (;; ++it) {
    out.stationarity = stationarity(x, g);
    if (out.stationarity <= options.grad_tol) {
      out.stop = LbfgsStop::converged;
      break;
    }
    if (problem.monitor && problem.monitor(x, f, g, it)) {
      out.stop = LbfgsStop::monitor;
      break;
    }
    if (it >= options.max_iters) {
      out.stop = LbfgsStop::max_iters;
      break;
    }

    bool accepted = false;
    Eigen::VectorXd xt, gt(x.size());
    double ft = f;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        if (memory.empty()) break;
        memory.clear();
        if (problem.refresh) problem.refresh(x);
      }
      // two-loop recursion
      Eigen::VectorXd d = -g;
      std::vector<double> alpha(memory.size());
      for (int i = static_cast<int>(memory.size()) - 1; i >= 0; --i) {
        alpha[i] = memory[i].rho * memory[i].s.dot(d);
        d -= alpha[i] * memory[i].y;
      }
      if (problem.precondition) {
        precondition(d);
      } else if (!memory.empty()) {
        const Pair& last = memory.back();
        d *= last.s.dot(last.y) / last.y.squaredNorm();
      } else {
        d *= std::min(1.0, 1.0 / std::max(g.norm(), 1e-300));
      }
      for (std::size_t i = 0; i < memory.size(); ++i) {
        double beta = memory[i].rho * memory[i].y.dot(d);
        d += (alpha[i] - beta) * memory[i].s;
      }
      if (g.dot(d) >= 0.0) {
        memory.clear();
        d = -g;
        if (problem.precondition) precondition(d);
        if (g.dot(d) >= 0.0) d = -g;
      }

      double step = 1.0;
      for (int bt = 0; bt < options.max_backtracks; ++bt, step *= options.backtrack) {
        xt = x + step * d;
        if (problem.project) problem.project(xt);
        ft = try_eval(xt, &gt);
        if (!std::isfinite(ft)) continue;
        double decrease = g.dot(xt - x);
        if (ft <= f + options.armijo * decrease) {
          accepted = true;
          break;
        }
        // near a minimum the change in f drowns in rounding; accept if the gradient shrinks
        if (std::abs(ft - f) <= noise * (1.0 + std::abs(f)) &&
            stationarity(xt, gt) < out.stationarity) {
          out.worst_increase = std::max(out.worst_increase, ft - f);
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) {
      out.stop = LbfgsStop::line_search;
      break;
    }

    Eigen::VectorXd s = xt - x, y = gt - g;
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      memory.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(memory.size()) > options.memory) memory.pop_front();
    }
    x = std::move(xt);
    g = gt;
    f = ft;
    out.trace.push_back(f);
    if (problem.refresh && options.refresh_every > 0 && (it + 1) % options.refresh_every == 0) {
      problem.refresh(x);
    }
  }
  out.x = std::move(x);
  out.g = std::move(g);
  out.f = f;
  out.iterations = it;
  return out;
}

}  // namespace conorbit
