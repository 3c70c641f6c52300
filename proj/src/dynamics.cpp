#include "atroreg/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "atroreg/mesh_io.hpp"

namespace atroreg {

TimeGrid::TimeGrid(int t) : steps(t) {
  if (t < 1) throw std::invalid_argument("number of time steps must be at least 1");
}

ControlPath ControlPath::zeros(int steps, std::size_t n, bool rigid) {
  ControlPath c;
  c.alphas.assign(steps, Points(n, Vec3::Zero()));
  if (rigid) c.rigid.assign(steps, RigidControl{});
  return c;
}

std::size_t ControlPath::flat_size() const {
  return alphas.size() * num_vertices() * 3 + rigid.size() * 6;
}

Eigen::VectorXd ControlPath::to_flat() const {
  Eigen::VectorXd x(flat_size());
  Eigen::Index at = 0;
  for (const Points& a : alphas) {
    x.segment(at, 3 * a.size()) = flat(a);
    at += 3 * a.size();
  }
  for (const RigidControl& r : rigid) {
    x.segment<3>(at) = r.beta;
    x.segment<3>(at + 3) = r.tau;
    at += 6;
  }
  return x;
}

void ControlPath::assign_flat(const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != flat_size())
    throw std::invalid_argument("assign_flat: size mismatch");
  Eigen::Index at = 0;
  for (Points& a : alphas) {
    flat(a) = x.segment(at, 3 * a.size());
    at += 3 * a.size();
  }
  for (RigidControl& r : rigid) {
    r.beta = x.segment<3>(at);
    r.tau = x.segment<3>(at + 3);
    at += 6;
  }
}

Mat3 hat(const Vec3& w) {
  Mat3 m;
  m << 0.0, -w.z(), w.y(),
       w.z(), 0.0, -w.x(),
       -w.y(), w.x(), 0.0;
  return m;
}

namespace {

// sin(c)/c and (1 - cos c)/c^2, the latter as 2 sin^2(c/2)/c^2 to avoid
// cancellation for small c.
void exp_coefficients(double c, double& a, double& b) {
  if (c < 1e-8) {
    a = 1.0;
    b = 0.5;
    return;
  }
  a = std::sin(c) / c;
  const double s = std::sin(0.5 * c) / c;
  b = 2.0 * s * s;
}

// a'(c)/c and b'(c)/c.
void exp_coefficient_slopes(double c, double& da, double& db) {
  if (c < 0.5) {
    // alternating series; terms shrink faster than 0.25^n / n!
    da = 0.0;
    db = 0.0;
    double c_pow = 1.0;  // c^(2n-2)
    double fact = 6.0;   // (2n+1)!
    for (int n = 1; n <= 10; ++n) {
      const double sign = (n % 2) ? -1.0 : 1.0;
      da += sign * 2.0 * n * c_pow / fact;
      db += sign * 2.0 * n * c_pow / (fact * (2 * n + 2));
      c_pow *= c * c;
      fact *= (2 * n + 2) * (2 * n + 3);
    }
    return;
  }
  const double c2 = c * c;
  da = (c * std::cos(c) - std::sin(c)) / (c2 * c);
  db = (c * std::sin(c) - 2.0 * (1.0 - std::cos(c))) / (c2 * c2);
}

Vec3 vee(const Mat3& u) { return {u(2, 1), u(0, 2), u(1, 0)}; }

Mat3 exp_of_vector(const Vec3& w) {
  double a = 0.0, b = 0.0;
  exp_coefficients(w.norm(), a, b);
  const Mat3 u = hat(w);
  return Mat3::Identity() + a * u + b * u * u;
}

}  // namespace

Mat3 rotation_exp(const Mat3& u) {
  const double scale = u.norm();
  if ((u + u.transpose()).norm() > 1e-12 * std::max(scale, 1e-300) && scale > 0.0)
    throw std::invalid_argument("rotation_exp: matrix is not skew-symmetric");
  // For U = hat(w), -tr(U^2) = 2 |w|^2, so the rotation angle is |w|.
  return exp_of_vector(vee(u));
}

std::array<Mat3, 3> rotation_exp_derivatives(const Vec3& w) {
  const double c = w.norm();
  double a = 0.0, b = 0.0, da = 0.0, db = 0.0;
  exp_coefficients(c, a, b);
  exp_coefficient_slopes(c, da, db);
  const Mat3 u = hat(w);
  const Mat3 u2 = u * u;
  std::array<Mat3, 3> out;
  for (int l = 0; l < 3; ++l) {
    const Mat3 el = hat(Vec3::Unit(l));
    out[l] = da * w[l] * u + a * el + db * w[l] * u2 + b * (el * u + u * el);
  }
  return out;
}

namespace {

bool finite(const Points& p) {
  for (const Vec3& v : p)
    if (!v.allFinite()) return false;
  return true;
}

}  // namespace

StatePath shoot(const TriMesh& template_mesh, const ControlPath& controls, const KernelSpec& kernel,
                const TimeGrid& grid) {
  const std::size_t n = template_mesh.num_vertices();
  if (controls.steps() != grid.steps)
    throw std::invalid_argument("shoot: control path has " + std::to_string(controls.steps()) +
                                " steps, grid has " + std::to_string(grid.steps));
  for (const Points& a : controls.alphas)
    if (a.size() != n)
      throw std::invalid_argument("shoot: momentum count does not match vertex count");
  const bool rigid = controls.has_rigid();
  if (rigid && static_cast<int>(controls.rigid.size()) != grid.steps)
    throw std::invalid_argument("shoot: rigid control count does not match step count");

  const double dt = grid.dt();
  StatePath path;
  path.states.reserve(grid.steps + 1);
  path.velocities.reserve(grid.steps);
  path.states.push_back(template_mesh.vertices());
  if (rigid) path.rigid_frames.push_back(RigidFrame{});

  for (int t = 0; t < grid.steps; ++t) {
    if (!finite(controls.alphas[t]) ||
        (rigid && !(controls.rigid[t].beta.allFinite() && controls.rigid[t].tau.allFinite())))
      throw NonFiniteError("non-finite control at step " + std::to_string(t), t);

    const Points& q = path.states.back();
    Points v = apply_kernel(kernel, q, controls.alphas[t]);
    Points next(n);
    if (rigid) {
      const RigidControl& rc = controls.rigid[t];
      const Mat3 e = exp_of_vector(dt * rc.beta);
      for (std::size_t k = 0; k < n; ++k) next[k] = e * q[k] + dt * v[k] + dt * rc.tau;
      const RigidFrame& prev = path.rigid_frames.back();
      path.rigid_frames.push_back({e * prev.rotation, e * prev.translation + dt * rc.tau});
      path.step_rotations.push_back(e);
    } else {
      for (std::size_t k = 0; k < n; ++k) next[k] = q[k] + dt * v[k];
    }
    if (!finite(next))
      throw NonFiniteError("non-finite state after step " + std::to_string(t), t);
    path.velocities.push_back(std::move(v));
    path.states.push_back(std::move(next));
  }
  return path;
}

ScalarField total_normal_displacement(const StatePath& path, const TriMesh& template_mesh) {
  const std::size_t n = template_mesh.num_vertices();
  ScalarField out(n, 0.0);
  for (std::size_t t = 0; t + 1 < path.states.size(); ++t) {
    const Points& q = path.states[t];
    const Points normals = vertex_normals(q, template_mesh.faces());
    for (std::size_t k = 0; k < n; ++k) {
      const double len = normals[k].norm();
      if (len == 0.0) continue;
      out[k] += (path.states[t + 1][k] - q[k]).dot(normals[k]) / len;
    }
  }
  return out;
}

void export_state_sequence(const StatePath& path, const TriMesh& template_mesh,
                           const std::filesystem::path& directory, const std::string& prefix) {
  std::filesystem::create_directories(directory);
  char name[64];
  for (std::size_t t = 0; t < path.states.size(); ++t) {
    std::snprintf(name, sizeof(name), "%s_%03zu.off", prefix.c_str(), t);
    save_mesh(template_mesh.with_vertices(path.states[t]), directory / name);
  }
}

}  // namespace atroreg
