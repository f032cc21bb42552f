#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string>
#include <vector>

namespace conorbit {

struct LbfgsOptions {
  int max_iters = 50000;
  double grad_tol = 1e-7;
  int memory = 12;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 60;
  /// Relative size below which action differences are treated as rounding noise.
  double noise_floor = 1e-13;
  int refresh_every = 25;
};

/// Smooth objective with optional preconditioner and feasibility projection.
///
/// `evaluate` returns f(x) and fills the gradient when given a non-null pointer;
/// it may throw (domain exit), which the line search treats as an infeasible trial.
struct LbfgsProblem {
  std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)> evaluate;
  /// Rebuild the preconditioner around x.
  std::function<void(const Eigen::VectorXd&)> refresh;
  /// r <- M^{-1} r.
  std::function<void(Eigen::VectorXd&)> precondition;
  std::function<void(Eigen::VectorXd&)> project;
  /// Stopping measure; defaults to the gradient norm.
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> stationarity;
  /// Called on every accepted iterate; returning true stops the run.
  std::function<bool(const Eigen::VectorXd&, double, const Eigen::VectorXd&, int)> monitor;
};

enum class LbfgsStop { converged, max_iters, line_search, monitor };

std::string to_string(LbfgsStop stop);

struct LbfgsResult {
  Eigen::VectorXd x;
  Eigen::VectorXd g;
  double f = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  int evaluations = 0;
  LbfgsStop stop = LbfgsStop::max_iters;
  /// f after each accepted step.
  std::vector<double> trace;
  /// Largest increase of f accepted as rounding noise.
  double worst_increase = 0.0;
};

/// Limited-memory BFGS with Armijo backtracking. The preconditioner, when given,
/// serves as the initial inverse Hessian of the two-loop recursion.
LbfgsResult lbfgs_minimize(const LbfgsProblem& problem, Eigen::VectorXd x0,
                           const LbfgsOptions& options);

}  // namespace conorbit
