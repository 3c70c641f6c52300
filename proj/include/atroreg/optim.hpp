#pragma once

#include <optional>
#include <string>
#include <vector>

#include "atroreg/attachment.hpp"
#include "atroreg/constraints.hpp"
#include "atroreg/dynamics.hpp"
#include "atroreg/lbfgs.hpp"

namespace atroreg {

/// Everything that defines one registration instance.
struct RegistrationProblem {
  TriMesh template_mesh;
  TriMesh target;
  KernelSpec kernel;
  AttachmentSpec attachment;
  ConstraintSpec constraint;
  TimeGrid grid;
  bool rigid = false;
  RigidCosts rigid_costs;

  ControlPath zero_controls() const {
    return ControlPath::zeros(grid.steps, template_mesh.num_vertices(), rigid);
  }
};

/// Multipliers and penalty of the augmented Lagrangian. The penalty on the
/// constraint rows g is (1 / 2mu) |(g - mu lambda)^+|^2 - (mu / 2) |lambda|^2,
/// integrated in time, so shrinking mu tightens the penalty. Multipliers are
/// non-positive.
struct ALState {
  std::vector<std::vector<double>> lambdas;  // [step][row]
  double mu = 1.0;
  int outer_iter = 0;
  std::vector<double> energy_trace;

  static ALState initial(const RegistrationProblem& problem, double mu0);
};

struct EnergyTerms {
  double kinetic = 0.0;
  double rigid_cost = 0.0;
  double attachment = 0.0;  // weighted
  double penalty = 0.0;     // (1/2mu) integral of |(g - mu lambda)^+|^2
  double multiplier = 0.0;  // -(mu/2) integral of |lambda|^2, constant in the controls

  double energy() const { return kinetic + rigid_cost + attachment; }
  double total() const { return energy() + penalty + multiplier; }
};

/// Forward shot, all objective terms and, when `gradient` is non-null, the
/// exact gradient of total() with respect to the controls (discrete adjoint
/// of the Euler scheme). `al` may be null when the constraint is ignored.
EnergyTerms evaluate(const RegistrationProblem& problem, const ControlPath& controls,
                     const ALState* al, ControlPath* gradient);

/// Kinetic + rigid cost + weighted attachment.
double energy(const RegistrationProblem& problem, const ControlPath& controls);
double augmented_energy(const RegistrationProblem& problem, const ControlPath& controls,
                        const ALState& al);
ControlPath adjoint_gradient(const RegistrationProblem& problem, const ControlPath& controls,
                             const ALState& al);

struct InnerSolve {
  ControlPath controls;
  InnerResult stats;
};

InnerSolve inner_minimize(const RegistrationProblem& problem, const ALState& al,
                          const ControlPath& start, const InnerParams& params);

/// lambda <- -(1/mu) (g - mu lambda)^+ row by row; excluded rows get 0.
ALState update_multipliers(const ALState& al, const std::vector<ConstraintResidual>& residuals);

struct ALParams {
  double mu0 = 1.0;
  double rho = 0.5;          // penalty shrink factor, 0 < rho < 1
  double delta_decay = 0.5;  // threshold schedule delta_n = delta_0 * decay^n
  std::optional<double> delta0;     // default: violation after the first inner solve
  int max_outer = 20;
  std::optional<double> tolerance;  // default: default_violation_tolerance()
  InnerParams inner;
};

/// 1e-3 * mean |N_k| (pointwise) or 1e-3 * |volume| (global) on the template.
double default_violation_tolerance(const RegistrationProblem& problem);

enum class ALStatus { converged, max_outer };
std::string to_string(ALStatus s);

struct OuterRecord {
  int outer = 0;
  double mu = 0.0;  // penalty used during this outer iteration
  EnergyTerms terms;
  double violation_norm = 0.0;
  double threshold = 0.0;
  int inner_iters = 0;
  InnerStatus inner_status = InnerStatus::converged;
  std::vector<double> inner_trace;
  // flattened [step][row], kept for bookkeeping checks
  std::vector<double> lambda_before;
  std::vector<double> lambda_after;
  std::vector<double> residuals;
  std::vector<char> active;
};

struct ALReport {
  std::vector<OuterRecord> outers;
  ALStatus status = ALStatus::max_outer;
  double tolerance = 0.0;
  double initial_volume = 0.0;
  double final_volume = 0.0;
};

struct ALResult {
  ControlPath controls;
  StatePath path;
  ALState state;
  ALReport report;
};

/// Augmented Lagrangian outer loop starting from zero controls and
/// multipliers. Never throws for non-convergence; check report.status.
ALResult al_solve(const RegistrationProblem& problem, const ALParams& params);

}  // namespace atroreg
