#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "atroreg/kernels.hpp"
#include "atroreg/mesh.hpp"

namespace atroreg {

/// Uniform grid on [0, 1] with `steps` Euler steps of size 1 / steps.
struct TimeGrid {
  int steps = 10;

  TimeGrid() = default;
  explicit TimeGrid(int t);
  double dt() const { return 1.0 / steps; }
};

/// Piecewise-constant rigid control over one step: rotation-generator
/// coefficients in the so(3) basis (E_l x = e_l cross x) and a translation.
struct RigidControl {
  Vec3 beta = Vec3::Zero();
  Vec3 tau = Vec3::Zero();
};

/// Non-negative costs on the rigid controls; c0 weights the translation.
struct RigidCosts {
  double c0 = 0.0;
  std::array<double, 3> c = {0.0, 0.0, 0.0};
};

struct ControlPath {
  std::vector<Points> alphas;        // [step][vertex]
  std::vector<RigidControl> rigid;   // empty unless rigid mode is on

  static ControlPath zeros(int steps, std::size_t n, bool rigid);
  int steps() const { return static_cast<int>(alphas.size()); }
  std::size_t num_vertices() const { return alphas.empty() ? 0 : alphas.front().size(); }
  bool has_rigid() const { return !rigid.empty(); }

  // Flat layout: all momenta step by step, then (beta, tau) per step.
  std::size_t flat_size() const;
  Eigen::VectorXd to_flat() const;
  void assign_flat(const Eigen::VectorXd& x);
};

struct RigidFrame {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

struct StatePath {
  std::vector<Points> states;            // steps + 1 entries, states[0] = template
  std::vector<Points> velocities;        // kernel part K(q_t) alpha_t, one per step
  std::vector<Mat3> step_rotations;      // exp(dt A_t), rigid mode only
  std::vector<RigidFrame> rigid_frames;  // steps + 1 entries, rigid mode only

  const Points& final_state() const { return states.back(); }
};

/// Skew-symmetric matrix of a vector: hat(w) x = w cross x.
Mat3 hat(const Vec3& w);

/// Closed-form exponential of a 3x3 skew-symmetric matrix. Throws
/// std::invalid_argument when U is not skew.
Mat3 rotation_exp(const Mat3& u);

/// Derivatives of exp(hat(w)) with respect to each component of w.
std::array<Mat3, 3> rotation_exp_derivatives(const Vec3& w);

/// Forward Euler shooting. Non-rigid: q += dt K(q) alpha. Rigid:
/// q <- exp(dt hat(beta)) q + dt K(q) alpha + dt tau. Throws on shape
/// mismatch or non-finite input/state.
StatePath shoot(const TriMesh& template_mesh, const ControlPath& controls, const KernelSpec& kernel,
                const TimeGrid& grid);

/// Per-vertex sum over steps of (q(t + dt) - q(t)) . unit vertex normal at t.
ScalarField total_normal_displacement(const StatePath& path, const TriMesh& template_mesh);

/// Writes states as prefix_000.off, prefix_001.off, ...
void export_state_sequence(const StatePath& path, const TriMesh& template_mesh,
                           const std::filesystem::path& directory, const std::string& prefix = "step");

class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, int step) : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace atroreg
