#include "atroreg/lbfgs.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace atroreg {

std::string to_string(InnerMethod m) {
  return m == InnerMethod::lbfgs ? "lbfgs" : "gradient_descent";
}

InnerMethod parse_inner_method(const std::string& name) {
  if (name == "lbfgs") return InnerMethod::lbfgs;
  if (name == "gradient_descent") return InnerMethod::gradient_descent;
  throw std::invalid_argument("unknown inner method '" + name + "' (expected lbfgs or gradient_descent)");
}

std::string to_string(InnerStatus s) {
  switch (s) {
    case InnerStatus::converged: return "converged";
    case InnerStatus::stalled: return "stalled";
    case InnerStatus::max_iters: return "max_iters";
    case InnerStatus::line_search_failed: return "line_search_failed";
  }
  return "unknown";
}

namespace {

struct CurvaturePair {
  Eigen::VectorXd s, y;
  double rho;
};

// Two-loop recursion: returns -H g.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::deque<CurvaturePair>& mem,
                                double h0) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * mem[i].s.dot(q);
    q -= alpha[i] * mem[i].y;
  }
  q *= h0;
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * mem[i].y.dot(q);
    q += (alpha[i] - beta) * mem[i].s;
  }
  return -q;
}

double safe_eval(const Objective& obj, const Eigen::VectorXd& x, Eigen::VectorXd& g) {
  try {
    const double f = obj(x, g);
    if (!std::isfinite(f) || !g.allFinite()) return std::numeric_limits<double>::infinity();
    return f;
  } catch (const std::exception&) {
    return std::numeric_limits<double>::infinity();
  }
}

}  // namespace

InnerResult minimize(const Objective& objective, const Eigen::VectorXd& x0,
                     const InnerParams& params, double metric_weight) {
  if (params.max_iters < 0 || params.memory < 1 || !(params.g_tol > 0.0))
    throw std::invalid_argument("invalid inner minimizer parameters");

  InnerResult res;
  res.x = x0;
  Eigen::VectorXd g(x0.size());
  res.f = objective(res.x, g);  // the start point must evaluate
  ++res.evaluations;
  res.trace.push_back(res.f);
  res.grad_norm = g.norm();
  const double g_stop = params.g_tol * std::max(1.0, res.grad_norm);

  std::deque<CurvaturePair> mem;
  double gd_step = 1.0;
  int stalled = 0;
  Eigen::VectorXd x_new(x0.size()), g_new(x0.size());

  for (;;) {
    if (res.grad_norm <= g_stop) {
      res.status = InnerStatus::converged;
      return res;
    }
    if (res.iterations >= params.max_iters) {
      res.status = InnerStatus::max_iters;
      return res;
    }

    Eigen::VectorXd d;
    double step = 1.0;
    if (params.method == InnerMethod::lbfgs) {
      double h0 = 1.0 / metric_weight;
      if (!mem.empty()) h0 = mem.back().s.dot(mem.back().y) / mem.back().y.squaredNorm();
      d = lbfgs_direction(g, mem, h0);
      if (d.dot(g) >= 0.0) {  // lost descent; restart from the scaled gradient
        mem.clear();
        d = -g / metric_weight;
      }
    } else {
      d = -g / metric_weight;
      step = gd_step;
    }

    const double slope = g.dot(d);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= params.max_backtracks; ++bt) {
      x_new = res.x + step * d;
      f_new = safe_eval(objective, x_new, g_new);
      ++res.evaluations;
      if (f_new <= res.f + params.armijo_c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= params.backtrack;
    }
    if (!accepted) {
      res.status = InnerStatus::line_search_failed;
      return res;
    }

    if (params.method == InnerMethod::lbfgs) {
      CurvaturePair p{x_new - res.x, g_new - g, 0.0};
      const double sy = p.s.dot(p.y);
      if (sy > 1e-12 * p.s.norm() * p.y.norm()) {
        p.rho = 1.0 / sy;
        mem.push_back(std::move(p));
        if (static_cast<int>(mem.size()) > params.memory) mem.pop_front();
      }
    } else {
      gd_step = 2.0 * step;
    }

    const double decrease = res.f - f_new;
    res.x = x_new;
    g = g_new;
    res.f = f_new;
    res.grad_norm = g.norm();
    ++res.iterations;
    res.trace.push_back(res.f);

    if (decrease <= params.f_tol * std::max(1.0, std::abs(res.f))) {
      if (++stalled >= 3) {
        res.status = res.grad_norm <= g_stop ? InnerStatus::converged : InnerStatus::stalled;
        return res;
      }
    } else {
      stalled = 0;
    }
  }
}

}  // namespace atroreg
