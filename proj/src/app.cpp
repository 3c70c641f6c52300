#include "atroreg/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "atroreg/mesh_io.hpp"

namespace atroreg {

namespace {

double bbox_diagonal(const TriMesh& m) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const Vec3& v : m.vertices()) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  return m.num_vertices() ? (hi - lo).norm() : 1.0;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

int cmd_register(const RunConfig& config, std::ostream& log) {
  TriMesh template_mesh, target;
  RegistrationProblem problem;
  try {
    if (config.template_path.empty() || config.target_path.empty())
      throw ConfigError("both 'template' and 'target' mesh paths are required");
    const LoadOptions strict{OrientationPolicy::require};
    template_mesh = load_mesh(config.template_path, strict);
    target = load_mesh(config.target_path, strict);
    problem = make_problem(config, template_mesh, target);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_input_error;
  }

  const std::filesystem::path out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);
  write_json(out_dir / "config.resolved.json", config_to_json(config));

  log << "registering " << template_mesh.num_vertices() << " vertices over " << problem.grid.steps
      << " steps, constraint " << to_string(problem.constraint.mode) << '\n';
  const ALResult result = al_solve(problem, config.al);
  for (const OuterRecord& r : result.report.outers) {
    log << "outer " << r.outer << ": F=" << r.terms.total() << " attachment=" << r.terms.attachment
        << " violation=" << r.violation_norm << " mu=" << r.mu << " inner=" << r.inner_iters << " ("
        << to_string(r.inner_status) << ")\n";
  }

  write_json(out_dir / "report.json", report_to_json(result));
  const ScalarField displacement = total_normal_displacement(result.path, template_mesh);
  save_mesh(template_mesh.with_vertices(result.path.final_state()), out_dir / "final.vtk",
            &displacement, "total_normal_displacement");
  export_state_sequence(result.path, template_mesh, out_dir, "step");

  log << "status: " << to_string(result.report.status) << '\n';
  return result.report.status == ALStatus::converged ? exit_ok : exit_not_converged;
}

int cmd_make_shape(const ShapeRequest& request, const std::filesystem::path& out, std::ostream& log) {
  try {
    if (request.level < 0 || request.level > 6) throw MeshError("subdivision level must lie in [0, 6]");
    TriMesh mesh;
    if (request.kind == ShapeRequest::Kind::icosphere) {
      if (!(request.radius > 0.0)) throw MeshError("radius must be positive");
      mesh = make_icosphere(request.level, request.radius, request.center);
    } else {
      mesh = make_ellipsoid(request.axes, request.level, request.center);
    }
    save_mesh(mesh, out);
    log << "wrote " << out.string() << ": " << mesh.num_vertices() << " vertices, " << mesh.num_faces()
        << " faces, volume " << mesh_volume(mesh).volume << '\n';
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_input_error;
  }
  return exit_ok;
}

GradientCheck finite_difference_check(const RegistrationProblem& problem, const ControlPath& controls,
                                      const ALState& al, const std::vector<std::size_t>& coords,
                                      double relative_step, bool corrupt) {
  const Eigen::VectorXd x0 = controls.to_flat();
  const double h = relative_step * std::max(x0.cwiseAbs().maxCoeff(), 1e-3);
  std::vector<std::size_t> which = coords;
  if (which.empty()) {
    which.resize(x0.size());
    std::iota(which.begin(), which.end(), 0);
  }

  Eigen::VectorXd adjoint = adjoint_gradient(problem, controls, al).to_flat();
  if (corrupt && !which.empty()) adjoint[which.front()] += 0.01 * std::max(adjoint.cwiseAbs().maxCoeff(), 1.0);

  ControlPath probe = controls;
  Eigen::VectorXd x = x0;
  std::vector<double> fd(which.size());
  for (std::size_t i = 0; i < which.size(); ++i) {
    const std::size_t c = which[i];
    x[c] = x0[c] + h;
    probe.assign_flat(x);
    const double fp = augmented_energy(problem, probe, al);
    x[c] = x0[c] - h;
    probe.assign_flat(x);
    const double fm = augmented_energy(problem, probe, al);
    x[c] = x0[c];
    fd[i] = (fp - fm) / (2.0 * h);
  }
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < which.size(); ++i) {
    scale = std::max(scale, std::abs(fd[i]));
    err = std::max(err, std::abs(fd[i] - adjoint[which[i]]));
  }
  GradientCheck out;
  out.coordinates = which.size();
  out.max_relative_error = scale > 0.0 ? err / scale : err;
  return out;
}

ControlPath random_controls(const RegistrationProblem& problem, std::uint64_t seed, double magnitude) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const TriMesh& m = problem.template_mesh;
  const double diag = bbox_diagonal(m);
  // Mean kernel row sum converts momenta into velocities.
  const Eigen::MatrixXd k = kernel_matrix(problem.kernel, m.vertices());
  const double row_sum = k.sum() / std::max<double>(1.0, static_cast<double>(m.num_vertices()));
  const double a_scale = magnitude * diag / row_sum;

  ControlPath c = problem.zero_controls();
  for (Points& a : c.alphas)
    for (Vec3& v : a) v = a_scale * Vec3(normal(rng), normal(rng), normal(rng));
  for (RigidControl& r : c.rigid) {
    r.beta = 0.5 * Vec3(normal(rng), normal(rng), normal(rng));
    r.tau = magnitude * diag * Vec3(normal(rng), normal(rng), normal(rng));
  }
  return c;
}

ALState random_multipliers(const RegistrationProblem& problem, const ControlPath& controls,
                           std::uint64_t seed) {
  ALState al = ALState::initial(problem, 1.0);
  if (problem.constraint.mode == ConstraintMode::none) return al;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const StatePath path = shoot(problem.template_mesh, controls, problem.kernel, problem.grid);
  const auto res = path_residuals(problem.constraint, path, controls, problem.template_mesh.faces());
  double mean = 0.0;
  std::size_t count = 0;
  for (const auto& r : res)
    for (double v : r.values) {
      mean += std::abs(v);
      ++count;
    }
  mean = count ? mean / count : 1.0;
  for (auto& row : al.lambdas)
    for (double& l : row) l = -0.5 * mean * unit(rng);
  return al;
}

int cmd_check(const RunConfig& config, std::ostream& log, bool corrupt_gradient, std::size_t max_coords) {
  RunConfig reduced = config;
  reduced.timesteps = std::min(config.timesteps, 4);
  RegistrationProblem problem;
  try {
    if (config.template_path.empty() || config.target_path.empty())
      throw ConfigError("both 'template' and 'target' mesh paths are required");
    const LoadOptions strict{OrientationPolicy::require};
    problem = make_problem(reduced, load_mesh(config.template_path, strict),
                           load_mesh(config.target_path, strict));
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_input_error;
  }

  bool geometry_ok = true;
  for (const TriMesh* m : {&problem.template_mesh, &problem.target}) {
    Vec3 sum = Vec3::Zero();
    for (std::size_t f = 0; f < m->num_faces(); ++f) sum += face_normal(*m, f);
    const double area = total_area(*m);
    const VolumeResult vol = mesh_volume(*m);
    const bool ok = sum.norm() <= 1e-10 * area && vol.closed && vol.volume > 0.0;
    log << "geometry: |sum of face normals| = " << sum.norm() << " (area " << area << "), volume "
        << vol.volume << (ok ? "  ok" : "  FAILED") << '\n';
    geometry_ok = geometry_ok && ok;
  }

  const ControlPath controls = random_controls(problem, config.seed);
  const ALState al = random_multipliers(problem, controls, config.seed);
  const std::size_t total = controls.flat_size();
  std::vector<std::size_t> coords;
  if (total > max_coords) {
    coords.resize(total);
    std::iota(coords.begin(), coords.end(), 0);
    std::mt19937_64 rng(config.seed + 1);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
    std::sort(coords.begin(), coords.end());
  }
  const GradientCheck check = finite_difference_check(problem, controls, al, coords, 1e-5, corrupt_gradient);
  const bool grad_ok = check.max_relative_error < 1e-4;
  log << "gradient: " << check.coordinates << " coordinates, max relative error " << std::scientific
      << std::setprecision(3) << check.max_relative_error << std::defaultfloat
      << (grad_ok ? "  ok" : "  FAILED") << '\n';
  return grad_ok && geometry_ok ? exit_ok : exit_not_converged;
}

}  // namespace atroreg
