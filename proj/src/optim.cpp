#include "atroreg/optim.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace atroreg {

ALState ALState::initial(const RegistrationProblem& problem, double mu0) {
  if (!(mu0 > 0.0)) throw std::invalid_argument("initial penalty mu0 must be positive");
  ALState s;
  s.mu = mu0;
  const std::size_t rows = problem.constraint.rows(problem.template_mesh.num_vertices());
  s.lambdas.assign(problem.grid.steps, std::vector<double>(rows, 0.0));
  return s;
}

std::string to_string(ALStatus s) { return s == ALStatus::converged ? "converged" : "max_outer"; }

namespace {

void check_al(const RegistrationProblem& problem, const ALState& al) {
  if (!(al.mu > 0.0)) throw std::invalid_argument("penalty mu must be positive");
  const std::size_t rows = problem.constraint.rows(problem.template_mesh.num_vertices());
  if (static_cast<int>(al.lambdas.size()) != problem.grid.steps)
    throw std::invalid_argument("multiplier array has wrong number of steps");
  for (const auto& l : al.lambdas)
    if (l.size() != rows) throw std::invalid_argument("multiplier array has wrong row count");
}

}  // namespace

EnergyTerms evaluate(const RegistrationProblem& problem, const ControlPath& controls,
                     const ALState* al, ControlPath* gradient) {
  const ConstraintSpec& cons = problem.constraint;
  const bool constrained = cons.mode != ConstraintMode::none && al != nullptr;
  if (constrained) check_al(problem, *al);
  if (controls.has_rigid() != problem.rigid)
    throw std::invalid_argument("rigid controls present iff rigid mode is enabled");

  const auto& faces = problem.template_mesh.faces();
  const int steps = problem.grid.steps;
  const double dt = problem.grid.dt();
  const std::size_t n = problem.template_mesh.num_vertices();

  const StatePath path = shoot(problem.template_mesh, controls, problem.kernel, problem.grid);

  EnergyTerms terms;
  // Constraint sensitivities per step: s_k = dPenalty/dg_k / dt.
  std::vector<std::vector<double>> sens(steps);
  std::vector<Points> normals(steps);
  std::vector<Points> velocity(steps);

  for (int t = 0; t < steps; ++t) {
    const Points& alpha = controls.alphas[t];
    double kin = 0.0;
    for (std::size_t k = 0; k < n; ++k) kin += alpha[k].dot(path.velocities[t][k]);
    terms.kinetic += 0.5 * dt * kin;
    if (problem.rigid) {
      const RigidControl& rc = controls.rigid[t];
      double c = problem.rigid_costs.c0 * rc.tau.squaredNorm();
      for (int l = 0; l < 3; ++l) c += problem.rigid_costs.c[l] * rc.beta[l] * rc.beta[l];
      terms.rigid_cost += 0.5 * dt * c;
    }
    if (!constrained) continue;

    normals[t] = vertex_normals(path.states[t], faces);
    velocity[t] = constraint_velocity(path, controls, t);
    const ConstraintResidual r = residual_from_velocity(cons, normals[t], velocity[t]);
    const std::vector<double>& lambda = al->lambdas[t];
    sens[t].assign(r.values.size(), 0.0);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      terms.multiplier -= 0.5 * dt * al->mu * lambda[i] * lambda[i];
      if (!r.active[i]) continue;
      const double z = r.values[i] - al->mu * lambda[i];
      if (z > 0.0) {
        terms.penalty += 0.5 * dt * z * z / al->mu;
        sens[t][i] = z / al->mu;
      }
    }
  }

  const Points& q_final = path.final_state();
  terms.attachment = problem.attachment.weight *
                     attachment_value(problem.attachment, q_final, problem.template_mesh, problem.target);
  if (!std::isfinite(terms.total()))
    throw NonFiniteError("non-finite objective value", steps);

  if (!gradient) return terms;

  // Backward sweep. p holds dF/dq(t+1) while processing step t.
  Points p = attachment_gradient(problem.attachment, q_final, problem.template_mesh, problem.target);
  for (Vec3& v : p) v *= problem.attachment.weight;

  *gradient = ControlPath::zeros(steps, n, problem.rigid);
  for (int t = steps - 1; t >= 0; --t) {
    const Points& q = path.states[t];
    const Points& alpha = controls.alphas[t];

    // s_k N_k, the constraint's pull on the velocity at each vertex.
    Points sn(n, Vec3::Zero());
    if (constrained) {
      if (cons.mode == ConstraintMode::pointwise_atrophy) {
        for (std::size_t k = 0; k < n; ++k) sn[k] = sens[t][k] * normals[t][k];
      } else {
        for (std::size_t k = 0; k < n; ++k) sn[k] = sens[t][0] * normals[t][k];
      }
    }

    Points a(n), b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = alpha[k] + p[k] + sn[k];
      b[k] = p[k] + 0.5 * alpha[k] + sn[k];
    }
    Points ga = apply_kernel(problem.kernel, q, a);
    for (Vec3& v : ga) v *= dt;
    gradient->alphas[t] = std::move(ga);

    const Points bilinear = kernel_bilinear_grad(problem.kernel, q, b, alpha);
    Points p_prev(n);
    if (problem.rigid) {
      const RigidControl& rc = controls.rigid[t];
      const Mat3& rot = path.step_rotations[t];
      Mat3 m = Mat3::Zero();
      Vec3 p_sum = Vec3::Zero(), sn_sum = Vec3::Zero(), torque = Vec3::Zero();
      for (std::size_t k = 0; k < n; ++k) {
        m += p[k] * q[k].transpose();
        p_sum += p[k];
        sn_sum += sn[k];
        torque += q[k].cross(sn[k]);
      }
      const auto d_exp = rotation_exp_derivatives(dt * rc.beta);
      RigidControl& g = gradient->rigid[t];
      for (int l = 0; l < 3; ++l)
        g.beta[l] = dt * (d_exp[l].cwiseProduct(m).sum() + problem.rigid_costs.c[l] * rc.beta[l]);
      g.beta += dt * torque;
      g.tau = dt * (p_sum + problem.rigid_costs.c0 * rc.tau + sn_sum);
      for (std::size_t k = 0; k < n; ++k)
        p_prev[k] = rot.transpose() * p[k] + dt * (bilinear[k] + sn[k].cross(rc.beta));
    } else {
      for (std::size_t k = 0; k < n; ++k) p_prev[k] = p[k] + dt * bilinear[k];
    }

    if (constrained) {
      // q-dependence of the constraint through the vertex normals.
      Points w(n, Vec3::Zero());
      for (std::size_t k = 0; k < n; ++k) {
        const double s = cons.mode == ConstraintMode::pointwise_atrophy ? sens[t][k] : sens[t][0];
        if (s == 0.0) continue;
        w[k] = s * velocity[t][k];
        if (cons.mode == ConstraintMode::pointwise_atrophy && cons.epsilon != 0.0)
          w[k] -= s * cons.epsilon * normals[t][k].normalized();
      }
      const Points gn = vertex_normals_vjp(q, faces, w);
      for (std::size_t k = 0; k < n; ++k) p_prev[k] += dt * gn[k];
    }
    p = std::move(p_prev);
  }
  return terms;
}

double energy(const RegistrationProblem& problem, const ControlPath& controls) {
  return evaluate(problem, controls, nullptr, nullptr).energy();
}

double augmented_energy(const RegistrationProblem& problem, const ControlPath& controls,
                        const ALState& al) {
  return evaluate(problem, controls, &al, nullptr).total();
}

ControlPath adjoint_gradient(const RegistrationProblem& problem, const ControlPath& controls,
                             const ALState& al) {
  ControlPath g;
  evaluate(problem, controls, &al, &g);
  return g;
}

InnerSolve inner_minimize(const RegistrationProblem& problem, const ALState& al,
                          const ControlPath& start, const InnerParams& params) {
  ControlPath work = start;
  ControlPath grad;
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    work.assign_flat(x);
    const double f = evaluate(problem, work, &al, &grad).total();
    g = grad.to_flat();
    return f;
  };
  InnerSolve out;
  out.stats = minimize(objective, start.to_flat(), params, problem.grid.dt());
  out.controls = start;
  out.controls.assign_flat(out.stats.x);
  return out;
}

ALState update_multipliers(const ALState& al, const std::vector<ConstraintResidual>& residuals) {
  if (residuals.size() != al.lambdas.size())
    throw std::invalid_argument("update_multipliers: residual/multiplier step count mismatch");
  ALState next = al;
  for (std::size_t t = 0; t < residuals.size(); ++t) {
    const ConstraintResidual& r = residuals[t];
    if (r.values.size() != al.lambdas[t].size())
      throw std::invalid_argument("update_multipliers: row count mismatch");
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      const double z = r.values[i] - al.mu * al.lambdas[t][i];
      next.lambdas[t][i] = (r.active[i] && z > 0.0) ? -z / al.mu : 0.0;
    }
  }
  return next;
}

double default_violation_tolerance(const RegistrationProblem& problem) {
  const TriMesh& m = problem.template_mesh;
  switch (problem.constraint.mode) {
    case ConstraintMode::none:
      return 0.0;
    case ConstraintMode::pointwise_atrophy: {
      const Points normals = vertex_normals(m);
      double sum = 0.0;
      for (const Vec3& v : normals) sum += v.norm();
      return 1e-3 * sum / static_cast<double>(normals.size());
    }
    case ConstraintMode::global_volume:
      return 1e-3 * std::abs(signed_volume(m.vertices(), m.faces()));
  }
  return 0.0;
}

namespace {

template <typename T>
std::vector<T> flatten(const std::vector<std::vector<T>>& v) {
  std::vector<T> out;
  for (const auto& row : v) out.insert(out.end(), row.begin(), row.end());
  return out;
}

}  // namespace

ALResult al_solve(const RegistrationProblem& problem, const ALParams& params) {
  if (!(params.rho > 0.0 && params.rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  if (!(params.delta_decay > 0.0 && params.delta_decay <= 1.0))
    throw std::invalid_argument("delta_decay must lie in (0, 1]");
  if (params.max_outer < 1) throw std::invalid_argument("max_outer must be at least 1");

  const auto& faces = problem.template_mesh.faces();
  const double dt = problem.grid.dt();
  const bool constrained = problem.constraint.mode != ConstraintMode::none;

  ALResult result;
  result.controls = problem.zero_controls();
  result.state = ALState::initial(problem, params.mu0);
  result.report.tolerance = params.tolerance.value_or(default_violation_tolerance(problem));
  result.report.initial_volume = signed_volume(problem.template_mesh.vertices(), faces);
  std::optional<double> delta0 = params.delta0;

  for (int outer = 0; outer < params.max_outer; ++outer) {
    ALState& al = result.state;
    al.outer_iter = outer;
    InnerSolve inner = inner_minimize(problem, al, result.controls, params.inner);
    result.controls = std::move(inner.controls);

    OuterRecord rec;
    rec.outer = outer;
    rec.mu = al.mu;
    rec.inner_iters = inner.stats.iterations;
    rec.inner_status = inner.stats.status;
    rec.inner_trace = std::move(inner.stats.trace);
    rec.terms = evaluate(problem, result.controls, &al, nullptr);
    al.energy_trace.push_back(rec.terms.total());

    result.path = shoot(problem.template_mesh, result.controls, problem.kernel, problem.grid);
    const bool inner_ok = inner.stats.ok();

    if (!constrained) {
      result.report.outers.push_back(std::move(rec));
      result.report.status = inner_ok ? ALStatus::converged : ALStatus::max_outer;
      break;
    }

    const auto residuals = path_residuals(problem.constraint, result.path, result.controls, faces);
    rec.violation_norm = violation_norm(residuals, dt);
    if (!delta0) delta0 = rec.violation_norm;
    rec.threshold = *delta0 * std::pow(params.delta_decay, outer);

    ALState next = update_multipliers(al, residuals);
    rec.lambda_before = flatten(al.lambdas);
    rec.lambda_after = flatten(next.lambdas);
    for (const auto& r : residuals) {
      rec.residuals.insert(rec.residuals.end(), r.values.begin(), r.values.end());
      rec.active.insert(rec.active.end(), r.active.begin(), r.active.end());
    }
    const bool feasible = rec.violation_norm <= result.report.tolerance;
    const bool tighten = rec.violation_norm > rec.threshold;
    result.report.outers.push_back(std::move(rec));

    next.energy_trace = al.energy_trace;
    result.state = std::move(next);
    if (feasible && inner_ok) {
      result.report.status = ALStatus::converged;
      break;
    }
    if (tighten) result.state.mu *= params.rho;
  }
  result.report.final_volume = signed_volume(result.path.final_state(), faces);
  return result;
}

}  // namespace atroreg
