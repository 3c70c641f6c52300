#include "atroreg/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace atroreg {

using nlohmann::json;

namespace {

// Wraps one JSON object; every key must be read or the object is rejected.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }
  ~Section() = default;

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError("missing required key " + where(key));
    return number_value(key);
  }
  double number(const std::string& key, double fallback) {
    if (!has(key)) {
      seen_.insert(key);
      return fallback;
    }
    return number_value(key);
  }
  std::optional<double> optional_number(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return number_value(key);
  }
  long integer(const std::string& key, long fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + " must be an integer");
    return v.get<long>();
  }
  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }
  Section child(const std::string& key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Section(has(key) ? j_.at(key) : empty, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError("unknown key " + where(key));
  }

  std::string where(const std::string& key = "") const {
    if (key.empty()) return path_.empty() ? "config" : "'" + path_ + "'";
    return "'" + (path_.empty() ? key : path_ + "." + key) + "'";
  }

 private:
  double number_value(const std::string& key) {
    seen_.insert(key);
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(where(key) + " must be finite");
    return d;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

template <typename Fn>
auto enum_value(Fn&& parse, const std::string& value, const std::string& key) {
  try {
    return parse(value);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("'" + key + "': " + e.what());
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  c.template_path = root.string("template", "");
  c.target_path = root.string("target", "");

  {
    Section s = root.child("kernel");
    c.kernel.family = enum_value(parse_kernel_family, s.string("family", "gaussian"), "kernel.family");
    c.kernel.sigma = s.number("sigma");
    require(c.kernel.sigma > 0.0, "'kernel.sigma' must be positive");
    s.finish();
  }
  {
    Section s = root.child("attachment");
    c.attachment.kind = enum_value(parse_attachment_kind, s.string("kind", "current"), "attachment.kind");
    c.attachment.kernel.family =
        enum_value(parse_kernel_family, s.string("family", "gaussian"), "attachment.family");
    if (c.attachment.kind == AttachmentKind::current) {
      c.attachment.kernel.sigma = s.number("sigma");
    } else {
      c.attachment.kernel.sigma = s.number("sigma", 1.0);
    }
    require(c.attachment.kernel.sigma > 0.0, "'attachment.sigma' must be positive");
    c.attachment.weight = s.number("weight", 1.0);
    require(c.attachment.weight > 0.0, "'attachment.weight' must be positive");
    s.finish();
  }
  {
    Section s = root.child("constraint");
    c.constraint.mode = enum_value(parse_constraint_mode, s.string("mode", "none"), "constraint.mode");
    c.constraint.epsilon = s.number("epsilon", 0.0);
    require(c.constraint.epsilon >= 0.0, "'constraint.epsilon' must be non-negative");
    s.finish();
  }
  c.timesteps = static_cast<int>(root.integer("timesteps", 10));
  require(c.timesteps >= 1 && c.timesteps <= 10000, "'timesteps' must lie in [1, 10000]");
  {
    Section s = root.child("rigid");
    c.rigid = s.boolean("enabled", false);
    const std::string group = s.string("group", "euclidean");
    if (group != "euclidean" && group != "rigid")
      throw ConfigError("'rigid.group' = '" + group +
                        "' is not supported: only rotations and translations are allowed "
                        "(zero-cost scalings or shears admit no minimizer)");
    c.rigid_costs.c0 = s.number("c0", 0.0);
    c.rigid_costs.c[0] = s.number("c1", 0.0);
    c.rigid_costs.c[1] = s.number("c2", 0.0);
    c.rigid_costs.c[2] = s.number("c3", 0.0);
    require(c.rigid_costs.c0 >= 0.0 && c.rigid_costs.c[0] >= 0.0 && c.rigid_costs.c[1] >= 0.0 &&
                c.rigid_costs.c[2] >= 0.0,
            "rigid costs c0..c3 must be non-negative");
    s.finish();
  }
  {
    Section s = root.child("al");
    c.al.mu0 = s.number("mu0", 1.0);
    require(c.al.mu0 > 0.0, "'al.mu0' must be positive");
    c.al.rho = s.number("rho", 0.5);
    require(c.al.rho > 0.0 && c.al.rho < 1.0, "'al.rho' must lie in (0, 1)");
    c.al.delta_decay = s.number("delta_decay", 0.5);
    require(c.al.delta_decay > 0.0 && c.al.delta_decay <= 1.0, "'al.delta_decay' must lie in (0, 1]");
    c.al.delta0 = s.optional_number("delta0");
    require(!c.al.delta0 || *c.al.delta0 >= 0.0, "'al.delta0' must be non-negative");
    c.al.max_outer = static_cast<int>(s.integer("max_outer", 20));
    require(c.al.max_outer >= 1, "'al.max_outer' must be at least 1");
    c.al.tolerance = s.optional_number("tolerance");
    require(!c.al.tolerance || *c.al.tolerance >= 0.0, "'al.tolerance' must be non-negative");
    s.finish();
  }
  {
    Section s = root.child("inner");
    InnerParams& p = c.al.inner;
    p.method = enum_value(parse_inner_method, s.string("method", "lbfgs"), "inner.method");
    p.max_iters = static_cast<int>(s.integer("max_iters", p.max_iters));
    require(p.max_iters >= 0, "'inner.max_iters' must be non-negative");
    p.g_tol = s.number("g_tol", p.g_tol);
    require(p.g_tol > 0.0, "'inner.g_tol' must be positive");
    p.f_tol = s.number("f_tol", p.f_tol);
    require(p.f_tol >= 0.0, "'inner.f_tol' must be non-negative");
    p.memory = static_cast<int>(s.integer("memory", p.memory));
    require(p.memory >= 1, "'inner.memory' must be at least 1");
    p.armijo_c1 = s.number("armijo_c1", p.armijo_c1);
    require(p.armijo_c1 > 0.0 && p.armijo_c1 < 1.0, "'inner.armijo_c1' must lie in (0, 1)");
    p.backtrack = s.number("backtrack", p.backtrack);
    require(p.backtrack > 0.0 && p.backtrack < 1.0, "'inner.backtrack' must lie in (0, 1)");
    p.max_backtracks = static_cast<int>(s.integer("max_backtracks", p.max_backtracks));
    require(p.max_backtracks >= 1, "'inner.max_backtracks' must be at least 1");
    s.finish();
  }
  c.output_dir = root.string("output_dir", c.output_dir);
  c.seed = root.unsigned_integer("seed", 0);
  root.finish();
  return c;
}

json config_to_json(const RunConfig& c) {
  const InnerParams& p = c.al.inner;
  return json{
      {"template", c.template_path},
      {"target", c.target_path},
      {"kernel", {{"family", to_string(c.kernel.family)}, {"sigma", c.kernel.sigma}}},
      {"attachment",
       {{"kind", to_string(c.attachment.kind)},
        {"family", to_string(c.attachment.kernel.family)},
        {"sigma", c.attachment.kernel.sigma},
        {"weight", c.attachment.weight}}},
      {"constraint", {{"mode", to_string(c.constraint.mode)}, {"epsilon", c.constraint.epsilon}}},
      {"timesteps", c.timesteps},
      {"rigid",
       {{"enabled", c.rigid},
        {"group", "euclidean"},
        {"c0", c.rigid_costs.c0},
        {"c1", c.rigid_costs.c[0]},
        {"c2", c.rigid_costs.c[1]},
        {"c3", c.rigid_costs.c[2]}}},
      {"al",
       {{"mu0", c.al.mu0},
        {"rho", c.al.rho},
        {"delta_decay", c.al.delta_decay},
        {"delta0", optional_json(c.al.delta0)},
        {"max_outer", c.al.max_outer},
        {"tolerance", optional_json(c.al.tolerance)}}},
      {"inner",
       {{"method", to_string(p.method)},
        {"max_iters", p.max_iters},
        {"g_tol", p.g_tol},
        {"f_tol", p.f_tol},
        {"memory", p.memory},
        {"armijo_c1", p.armijo_c1},
        {"backtrack", p.backtrack},
        {"max_backtracks", p.max_backtracks}}},
      {"output_dir", c.output_dir},
      {"seed", c.seed},
  };
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  const InnerParams& x = a.al.inner;
  const InnerParams& y = b.al.inner;
  return a.template_path == b.template_path && a.target_path == b.target_path &&
         a.kernel.family == b.kernel.family && a.kernel.sigma == b.kernel.sigma &&
         a.attachment.kind == b.attachment.kind &&
         a.attachment.kernel.family == b.attachment.kernel.family &&
         a.attachment.kernel.sigma == b.attachment.kernel.sigma &&
         a.attachment.weight == b.attachment.weight && a.constraint.mode == b.constraint.mode &&
         a.constraint.epsilon == b.constraint.epsilon && a.timesteps == b.timesteps &&
         a.rigid == b.rigid && a.rigid_costs.c0 == b.rigid_costs.c0 &&
         a.rigid_costs.c == b.rigid_costs.c && a.al.mu0 == b.al.mu0 && a.al.rho == b.al.rho &&
         a.al.delta_decay == b.al.delta_decay && a.al.delta0 == b.al.delta0 &&
         a.al.max_outer == b.al.max_outer && a.al.tolerance == b.al.tolerance &&
         x.method == y.method && x.max_iters == y.max_iters && x.g_tol == y.g_tol &&
         x.f_tol == y.f_tol && x.memory == y.memory && x.armijo_c1 == y.armijo_c1 &&
         x.backtrack == y.backtrack && x.max_backtracks == y.max_backtracks &&
         a.output_dir == b.output_dir && a.seed == b.seed;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

RegistrationProblem make_problem(const RunConfig& config, const TriMesh& template_mesh,
                                 const TriMesh& target) {
  if (config.attachment.kind == AttachmentKind::landmark && template_mesh.num_vertices() != target.num_vertices())
    throw ConfigError("landmark attachment needs template and target with the same vertex count");
  RegistrationProblem p;
  p.template_mesh = template_mesh;
  p.target = target;
  p.kernel = config.kernel;
  p.attachment = config.attachment;
  p.constraint = config.constraint;
  p.grid = TimeGrid(config.timesteps);
  p.rigid = config.rigid;
  p.rigid_costs = config.rigid_costs;
  return p;
}

json report_to_json(const ALResult& result) {
  json outers = json::array();
  for (const OuterRecord& r : result.report.outers) {
    outers.push_back({
        {"outer", r.outer},
        {"mu", r.mu},
        {"energy", r.terms.total()},
        {"kinetic", r.terms.kinetic},
        {"attachment", r.terms.attachment},
        {"violation_norm", r.violation_norm},
        {"inner_iters", r.inner_iters},
        {"status", to_string(r.inner_status)},
    });
  }
  const OuterRecord* last = result.report.outers.empty() ? nullptr : &result.report.outers.back();
  return json{
      {"status", to_string(result.report.status)},
      {"tolerance", result.report.tolerance},
      {"initial_volume", result.report.initial_volume},
      {"final_volume", result.report.final_volume},
      {"final_mu", result.state.mu},
      {"final_attachment", last ? last->terms.attachment : 0.0},
      {"final_violation_norm", last ? last->violation_norm : 0.0},
      {"outer_iterations", outers},
  };
}

}  // namespace atroreg
