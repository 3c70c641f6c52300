#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

namespace atroreg {

enum class InnerMethod { lbfgs, gradient_descent };

std::string to_string(InnerMethod m);
InnerMethod parse_inner_method(const std::string& name);

struct InnerParams {
  InnerMethod method = InnerMethod::lbfgs;
  int max_iters = 500;
  double g_tol = 1e-5;   // relative: stop when |g| <= g_tol * max(1, |g(start)|)
  double f_tol = 1e-12;  // relative decrease below which progress counts as stalled
  int memory = 10;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
};

enum class InnerStatus {
  converged,           // gradient tolerance met
  stalled,             // relative decrease below f_tol for 3 consecutive iterations
  max_iters,
  line_search_failed,  // degraded: best iterate returned
};

std::string to_string(InnerStatus s);

struct InnerResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  int evaluations = 0;
  InnerStatus status = InnerStatus::max_iters;
  std::vector<double> trace;  // objective at the start and after every accepted step

  bool ok() const { return status == InnerStatus::converged || status == InnerStatus::stalled; }
};

/// Value and gradient at x. May throw; any exception during a line-search
/// trial is treated as an infinite value.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

/// Minimizes `objective` from `x0`. `metric_weight` w scales the inner
/// product (<a, b> = w a.b); it sets the first search direction -g / w, so
/// with w = dt the initial step does not depend on the number of time steps.
InnerResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                     const InnerParams& params, double metric_weight = 1.0);

}  // namespace atroreg
