#pragma once

#include <string>
#include <vector>

#include "atroreg/dynamics.hpp"
#include "atroreg/kernels.hpp"
#include "atroreg/mesh.hpp"

namespace atroreg {

enum class ConstraintMode { none, pointwise_atrophy, global_volume };

std::string to_string(ConstraintMode m);
ConstraintMode parse_constraint_mode(const std::string& name);

struct ConstraintSpec {
  ConstraintMode mode = ConstraintMode::none;
  double epsilon = 0.0;  // relaxation; multiplies |N_k| in pointwise mode

  std::size_t rows(std::size_t num_vertices) const;
};

/// Constraint rows at one time step. Entries > 0 are violations. Rows whose
/// vertex normal vanishes are excluded (`active` = 0, value 0).
struct ConstraintResidual {
  std::vector<double> values;
  std::vector<char> active;
};

/// Matrix-free C(q): row k, block l is K(q_k, q_l) N_k(q)^T with N_k the
/// area-weighted vertex normal of the current state.
class ConstraintOperator {
 public:
  ConstraintOperator(const Points& q, const std::vector<Face>& faces, const KernelSpec& kernel);

  /// (C alpha)_k = N_k . (K(q) alpha)_k
  std::vector<double> apply(const Points& alphas) const;
  /// Dense n x 3n matrix, for inspection and tests.
  Eigen::MatrixXd dense() const;

  const Points& normals() const { return normals_; }

 private:
  Points q_;
  KernelSpec kernel_;
  Points normals_;
};

/// Residual given the already-computed vertex velocity u_k (kernel part plus
/// any rigid part) and the vertex normals of the state.
ConstraintResidual residual_from_velocity(const ConstraintSpec& spec, const Points& normals,
                                          const Points& velocity);

/// Pointwise: r_k = (C(q) alpha)_k - eps |N_k|. Global: r = 1^T C(q) alpha - eps.
ConstraintResidual residual(const ConstraintSpec& spec, const TriMesh& mesh_at_t,
                            const Points& alphas, const KernelSpec& kernel);

/// sqrt(dt * sum_t |r(t)^+|^2).
double violation_norm(const std::vector<ConstraintResidual>& residuals, double dt);

/// Velocity entering the constraint at step t: K(q) alpha plus, in rigid
/// mode, beta x q + tau.
Points constraint_velocity(const StatePath& path, const ControlPath& controls, int step);

/// Residuals along a whole shot path.
std::vector<ConstraintResidual> path_residuals(const ConstraintSpec& spec, const StatePath& path,
                                               const ControlPath& controls,
                                               const std::vector<Face>& faces);

}  // namespace atroreg
