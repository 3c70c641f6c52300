// Command-line driver: register, make-shape, check.

#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "atroreg/app.hpp"
#include "atroreg/parallel.hpp"

using namespace atroreg;

namespace {

// Command-line values that override the JSON config when given.
struct Overrides {
  std::optional<std::string> template_path, target_path, output_dir, mode, kernel_family;
  std::optional<double> sigma, sigma_w, weight, epsilon, mu0, rho;
  std::optional<int> timesteps, max_outer, max_iters;
  std::optional<std::uint64_t> seed;
  bool rigid = false;

  void attach(CLI::App* cmd) {
    cmd->add_option("--template", template_path, "Template mesh (.off/.obj/.vtk)");
    cmd->add_option("--target", target_path, "Target mesh");
    cmd->add_option("--output-dir", output_dir, "Output directory");
    cmd->add_option("--mode", mode, "Constraint mode: none, pointwise_atrophy, global_volume");
    cmd->add_option("--epsilon", epsilon, "Constraint relaxation");
    cmd->add_option("--kernel", kernel_family, "Deformation kernel family: gaussian, cauchy");
    cmd->add_option("--sigma", sigma, "Deformation kernel width");
    cmd->add_option("--sigma-w", sigma_w, "Current kernel width");
    cmd->add_option("--weight", weight, "Attachment weight");
    cmd->add_option("--timesteps", timesteps, "Number of Euler steps");
    cmd->add_option("--mu0", mu0, "Initial penalty parameter");
    cmd->add_option("--rho", rho, "Penalty shrink factor");
    cmd->add_option("--max-outer", max_outer, "Maximum augmented Lagrangian iterations");
    cmd->add_option("--max-iters", max_iters, "Maximum inner iterations");
    cmd->add_option("--seed", seed, "Seed for randomized self-tests");
    cmd->add_flag("--rigid", rigid, "Enable rigid (rotation + translation) controls");
  }

  // Overrides are merged into the JSON document so they pass the same
  // validation as file values.
  void apply(nlohmann::json& j) const {
    if (template_path) j["template"] = *template_path;
    if (target_path) j["target"] = *target_path;
    if (output_dir) j["output_dir"] = *output_dir;
    if (mode) j["constraint"]["mode"] = *mode;
    if (epsilon) j["constraint"]["epsilon"] = *epsilon;
    if (kernel_family) j["kernel"]["family"] = *kernel_family;
    if (sigma) j["kernel"]["sigma"] = *sigma;
    if (sigma_w) j["attachment"]["sigma"] = *sigma_w;
    if (weight) j["attachment"]["weight"] = *weight;
    if (timesteps) j["timesteps"] = *timesteps;
    if (mu0) j["al"]["mu0"] = *mu0;
    if (rho) j["al"]["rho"] = *rho;
    if (max_outer) j["al"]["max_outer"] = *max_outer;
    if (max_iters) j["inner"]["max_iters"] = *max_iters;
    if (seed) j["seed"] = *seed;
    if (rigid) j["rigid"]["enabled"] = true;
  }
};

std::optional<RunConfig> resolve(const std::string& path, const Overrides& o) {
  try {
    nlohmann::json j = nlohmann::json::object();
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open config file " + path);
      j = nlohmann::json::parse(in);
    }
    o.apply(j);
    return config_from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diffeomorphic surface registration with atrophy and volume constraints"};
  app.require_subcommand(1);
  app.fallthrough();

  int threads = 0;
  bool deterministic = false;
  app.add_option("--threads", threads, "Cap on internal threads (default: ATROREG_THREADS or all)");
  app.add_flag("--deterministic", deterministic, "Force serial sums");

  std::string register_config;
  Overrides register_overrides;
  auto* reg = app.add_subcommand("register", "Register a template surface onto a target");
  reg->add_option("config", register_config, "JSON run configuration");
  register_overrides.attach(reg);

  std::string check_config;
  Overrides check_overrides;
  bool corrupt = false;
  std::size_t max_coords = 300;
  auto* check = app.add_subcommand("check", "Adjoint-vs-finite-difference and geometry self-test");
  check->add_option("config", check_config, "JSON run configuration");
  check->add_option("--max-coords", max_coords, "Number of gradient coordinates to probe");
  check->add_flag("--corrupt-gradient", corrupt, "Perturb the adjoint gradient (negative control)");
  check_overrides.attach(check);

  ShapeRequest shape;
  std::string kind = "icosphere";
  std::string out_path;
  std::vector<double> axes, center;
  auto* make = app.add_subcommand("make-shape", "Write a synthetic closed surface");
  make->add_option("kind", kind, "icosphere or ellipsoid")
      ->required()
      ->check(CLI::IsMember({"icosphere", "ellipsoid"}));
  make->add_option("-o,--out", out_path, "Output mesh path (.off or .vtk)")->required();
  make->add_option("--level", shape.level, "Subdivision level (0-6)")->check(CLI::Range(0, 6));
  make->add_option("--radius", shape.radius, "Sphere radius")->check(CLI::PositiveNumber);
  make->add_option("--axes", axes, "Ellipsoid semi-axes")->expected(3)->check(CLI::PositiveNumber);
  make->add_option("--center", center, "Center")->expected(3);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share the input-error exit code; --help exits 0.
    return app.exit(e) == 0 ? exit_ok : exit_input_error;
  }

  apply_thread_env();
  if (threads > 0) set_thread_cap(threads);
  if (deterministic) set_thread_cap(1);

  if (*reg) {
    const auto config = resolve(register_config, register_overrides);
    if (!config) return exit_input_error;
    return cmd_register(*config, std::cout);
  }
  if (*check) {
    const auto config = resolve(check_config, check_overrides);
    if (!config) return exit_input_error;
    return cmd_check(*config, std::cout, corrupt, max_coords);
  }
  shape.kind = kind == "ellipsoid" ? ShapeRequest::Kind::ellipsoid : ShapeRequest::Kind::icosphere;
  if (!axes.empty()) shape.axes = Vec3(axes[0], axes[1], axes[2]);
  if (!center.empty()) shape.center = Vec3(center[0], center[1], center[2]);
  return cmd_make_shape(shape, out_path, std::cout);
}
