#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "atroreg/optim.hpp"

namespace atroreg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// User-facing run description. Widths have no default: kernel.sigma and
/// attachment.sigma are required keys.
struct RunConfig {
  std::string template_path;
  std::string target_path;
  KernelSpec kernel;
  AttachmentSpec attachment;
  ConstraintSpec constraint;
  int timesteps = 10;
  bool rigid = false;
  RigidCosts rigid_costs;
  ALParams al;
  std::string output_dir = "atroreg_out";
  std::uint64_t seed = 0;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Strict parse: unknown keys, wrong types and out-of-range values throw
/// ConfigError naming the offending key.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& c);
RunConfig load_config(const std::filesystem::path& path);

RegistrationProblem make_problem(const RunConfig& config, const TriMesh& template_mesh,
                                 const TriMesh& target);

/// Per-outer-iteration records plus a summary.
nlohmann::json report_to_json(const ALResult& result);

}  // namespace atroreg
