#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "atroreg/config.hpp"

namespace atroreg {

enum ExitCode : int { exit_ok = 0, exit_input_error = 1, exit_not_converged = 2 };

/// Loads meshes, runs the augmented Lagrangian solve and writes
/// config.resolved.json, report.json, final.vtk and step_%03d.off into the
/// output directory.
int cmd_register(const RunConfig& config, std::ostream& log);

struct ShapeRequest {
  enum class Kind { icosphere, ellipsoid } kind = Kind::icosphere;
  int level = 2;
  double radius = 1.0;
  Vec3 axes = Vec3::Ones();
  Vec3 center = Vec3::Zero();
};

int cmd_make_shape(const ShapeRequest& request, const std::filesystem::path& out, std::ostream& log);

struct GradientCheck {
  double max_relative_error = 0.0;  // max |adjoint - fd| / max |fd| over checked coordinates
  std::size_t coordinates = 0;
};

/// Central finite differences of augmented_energy on the given coordinates
/// (all when empty), compared against adjoint_gradient. `corrupt` perturbs
/// the adjoint result (negative control).
GradientCheck finite_difference_check(const RegistrationProblem& problem, const ControlPath& controls,
                                      const ALState& al, const std::vector<std::size_t>& coords,
                                      double relative_step = 1e-5, bool corrupt = false);

/// Random controls whose displacements are a few percent of the mesh size,
/// plus multipliers that put part of the constraint rows in the active set.
ControlPath random_controls(const RegistrationProblem& problem, std::uint64_t seed, double magnitude = 0.05);
ALState random_multipliers(const RegistrationProblem& problem, const ControlPath& controls,
                           std::uint64_t seed);

/// Gradient and geometry self-test on the configured instance (at most 4
/// steps, at most `max_coords` coordinates). Exit 0 iff the relative error is
/// below 1e-4 and the geometry checks pass.
int cmd_check(const RunConfig& config, std::ostream& log, bool corrupt_gradient = false,
              std::size_t max_coords = 300);

}  // namespace atroreg
