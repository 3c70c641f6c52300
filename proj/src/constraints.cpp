#include "atroreg/constraints.hpp"

#include <cmath>
#include <stdexcept>

namespace atroreg {

std::string to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::none: return "none";
    case ConstraintMode::pointwise_atrophy: return "pointwise_atrophy";
    case ConstraintMode::global_volume: return "global_volume";
  }
  return "none";
}

ConstraintMode parse_constraint_mode(const std::string& name) {
  if (name == "none") return ConstraintMode::none;
  if (name == "pointwise_atrophy" || name == "pointwise") return ConstraintMode::pointwise_atrophy;
  if (name == "global_volume" || name == "global") return ConstraintMode::global_volume;
  throw std::invalid_argument("unknown constraint mode '" + name +
                              "' (expected none, pointwise_atrophy or global_volume)");
}

std::size_t ConstraintSpec::rows(std::size_t num_vertices) const {
  switch (mode) {
    case ConstraintMode::none: return 0;
    case ConstraintMode::pointwise_atrophy: return num_vertices;
    case ConstraintMode::global_volume: return 1;
  }
  return 0;
}

ConstraintOperator::ConstraintOperator(const Points& q, const std::vector<Face>& faces,
                                       const KernelSpec& kernel)
    : q_(q), kernel_(kernel), normals_(vertex_normals(q, faces)) {}

std::vector<double> ConstraintOperator::apply(const Points& alphas) const {
  const Points v = apply_kernel(kernel_, q_, alphas);
  std::vector<double> out(q_.size());
  for (std::size_t k = 0; k < q_.size(); ++k) out[k] = normals_[k].dot(v[k]);
  return out;
}

Eigen::MatrixXd ConstraintOperator::dense() const {
  const auto n = static_cast<Eigen::Index>(q_.size());
  Eigen::MatrixXd c(n, 3 * n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      c.block<1, 3>(k, 3 * l) = kernel_eval(kernel_, q_[k], q_[l]) * normals_[k].transpose();
  return c;
}

ConstraintResidual residual_from_velocity(const ConstraintSpec& spec, const Points& normals,
                                          const Points& velocity) {
  ConstraintResidual r;
  const std::size_t n = normals.size();
  switch (spec.mode) {
    case ConstraintMode::none:
      break;
    case ConstraintMode::pointwise_atrophy:
      r.values.assign(n, 0.0);
      r.active.assign(n, 0);
      for (std::size_t k = 0; k < n; ++k) {
        const double len = normals[k].norm();
        if (len == 0.0) continue;
        r.values[k] = velocity[k].dot(normals[k]) - spec.epsilon * len;
        r.active[k] = 1;
      }
      break;
    case ConstraintMode::global_volume: {
      double flux = 0.0;
      for (std::size_t k = 0; k < n; ++k) flux += velocity[k].dot(normals[k]);
      r.values = {flux - spec.epsilon};
      r.active = {1};
      break;
    }
  }
  return r;
}

ConstraintResidual residual(const ConstraintSpec& spec, const TriMesh& mesh_at_t,
                            const Points& alphas, const KernelSpec& kernel) {
  if (alphas.size() != mesh_at_t.num_vertices())
    throw std::invalid_argument("residual: momentum count does not match vertex count");
  const Points normals = vertex_normals(mesh_at_t);
  return residual_from_velocity(spec, normals, apply_kernel(kernel, mesh_at_t.vertices(), alphas));
}

double violation_norm(const std::vector<ConstraintResidual>& residuals, double dt) {
  double sum = 0.0;
  for (const ConstraintResidual& r : residuals)
    for (std::size_t i = 0; i < r.values.size(); ++i)
      if (r.active[i] && r.values[i] > 0.0) sum += r.values[i] * r.values[i];
  return std::sqrt(dt * sum);
}

Points constraint_velocity(const StatePath& path, const ControlPath& controls, int step) {
  Points u = path.velocities[step];
  if (controls.has_rigid()) {
    const RigidControl& rc = controls.rigid[step];
    const Points& q = path.states[step];
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += rc.beta.cross(q[k]) + rc.tau;
  }
  return u;
}

std::vector<ConstraintResidual> path_residuals(const ConstraintSpec& spec, const StatePath& path,
                                               const ControlPath& controls,
                                               const std::vector<Face>& faces) {
  std::vector<ConstraintResidual> out;
  const int steps = static_cast<int>(path.velocities.size());
  out.reserve(steps);
  for (int t = 0; t < steps; ++t) {
    const Points normals = vertex_normals(path.states[t], faces);
    out.push_back(residual_from_velocity(spec, normals, constraint_velocity(path, controls, t)));
  }
  return out;
}

}  // namespace atroreg
