#include "dice/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "dice/errors.hpp"

namespace dice {

namespace {

using nlohmann::json;

// Strict object reader: every key must be consumed, leftovers are reported
// with their dotted path.
class Section {
 public:
  Section(const json& obj, std::string path)
      : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object())
      throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  double num(const char* key, double def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(dotted(key) + ": expected a number");
    return v.get<double>();
  }

  int integer(const char* key, int def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(dotted(key) + ": expected an integer");
    return v.get<int>();
  }

  long long_integer(const char* key, long def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(dotted(key) + ": expected an integer");
    return v.get<long>();
  }

  bool boolean(const char* key, bool def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) throw ConfigError(dotted(key) + ": expected a boolean");
    return v.get<bool>();
  }

  std::string str(const char* key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(dotted(key) + ": expected a string");
    return v.get<std::string>();
  }

  const json* child(const char* key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  std::string dotted(const char* key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void done() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key()))
        throw ConfigError(dotted(it.key().c_str()) + ": unknown key");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_env(const json& j, ExperimentConfig& cfg) {
  Section s(j, "env");
  cfg.env_name = s.str("name", cfg.env_name);
  if (cfg.env_name == "point_goal") {
    PointGoalParams& p = cfg.point_goal;
    p.goals = s.integer("goals", p.goals);
    p.goal_distance = s.num("goal_distance", p.goal_distance);
    p.goal_radius = s.num("goal_radius", p.goal_radius);
    p.step_size = s.num("step_size", p.step_size);
    p.step_cost = s.num("step_cost", p.step_cost);
    p.goal_bonus = s.num("goal_bonus", p.goal_bonus);
    p.horizon = s.integer("horizon", p.horizon);
  } else if (cfg.env_name == "grid_maze") {
    cfg.grid_horizon = s.integer("horizon", cfg.grid_horizon);
  } else if (cfg.env_name == "line_return") {
    cfg.line_horizon = s.integer("horizon", cfg.line_horizon);
  } else {
    throw ConfigError("env.name: unknown environment '" + cfg.env_name + "'");
  }
  s.done();
}

void parse_onpolicy(const json& j, OnPolicyConfig& c) {
  Section s(j, "onpolicy");
  c.K = s.integer("K", c.K);
  c.N = s.integer("N", c.N);
  c.minibatch = s.integer("minibatch", c.minibatch);
  c.sgd_iters = s.integer("sgd_iters", c.sgd_iters);
  c.clip_eps = s.num("clip_eps", c.clip_eps);
  c.kl_coeff = s.num("kl_coeff", c.kl_coeff);
  c.ent_coeff = s.num("ent_coeff", c.ent_coeff);
  c.gamma = s.num("gamma", c.gamma);
  c.lambda = s.num("lambda", c.lambda);
  c.tau = s.num("tau", c.tau);
  c.lr = s.num("lr", c.lr);
  c.vf_lr = s.num("vf_lr", c.vf_lr);
  c.vf_train_iters = s.integer("vf_train_iters", c.vf_train_iters);
  c.dvn_lr = s.num("dvn_lr", c.dvn_lr);
  c.dvn_train_iters = s.integer("dvn_train_iters", c.dvn_train_iters);
  c.max_grad_norm = s.num("max_grad_norm", c.max_grad_norm);
  c.hidden = s.integer("hidden", c.hidden);
  c.log_std_init = s.num("log_std_init", c.log_std_init);
  c.use_tsc = s.boolean("use_tsc", c.use_tsc);
  c.use_ce = s.boolean("use_ce", c.use_ce);
  c.use_dr = s.boolean("use_dr", c.use_dr);
  c.use_dvn = s.boolean("use_dvn", c.use_dvn);
  c.use_na = s.boolean("use_na", c.use_na);
  c.use_du = s.boolean("use_du", c.use_du);
  c.exclude_self = s.boolean("exclude_self", c.exclude_self);
  c.adam = s.boolean("adam", c.adam);
  c.fusion_floor_at_zero =
      s.boolean("fusion_floor_at_zero", c.fusion_floor_at_zero);
  s.done();
}

void parse_offpolicy(const json& j, OffPolicyConfig& c) {
  Section s(j, "offpolicy");
  c.K = s.integer("K", c.K);
  c.N = s.integer("N", c.N);
  c.buffer_capacity = s.integer("buffer_capacity", c.buffer_capacity);
  c.warmup_steps = s.long_integer("warmup_steps", c.warmup_steps);
  c.steps_per_iteration =
      s.integer("steps_per_iteration", c.steps_per_iteration);
  c.updates_per_step = s.integer("updates_per_step", c.updates_per_step);
  c.gamma = s.num("gamma", c.gamma);
  c.tau = s.num("tau", c.tau);
  c.lr = s.num("lr", c.lr);
  c.alpha_ent = s.num("alpha_ent", c.alpha_ent);
  c.auto_alpha = s.boolean("auto_alpha", c.auto_alpha);
  c.target_entropy = s.num("target_entropy", c.target_entropy);
  c.hidden = s.integer("hidden", c.hidden);
  c.log_std_init = s.num("log_std_init", c.log_std_init);
  c.max_grad_norm = s.num("max_grad_norm", c.max_grad_norm);
  const std::string mode = s.str("mode", "share_batch");
  if (mode == "share_batch") {
    c.mode = CeMode::ShareBatch;
  } else if (mode == "share_buffer") {
    c.mode = CeMode::ShareBuffer;
  } else if (mode == "independent") {
    c.mode = CeMode::Independent;
  } else {
    throw ConfigError(
        "offpolicy.mode: expected share_batch, share_buffer, or independent");
  }
  c.use_dr = s.boolean("use_dr", c.use_dr);
  c.use_du = s.boolean("use_du", c.use_du);
  c.exclude_self = s.boolean("exclude_self", c.exclude_self);
  c.adam = s.boolean("adam", c.adam);
  c.fusion_floor_at_zero =
      s.boolean("fusion_floor_at_zero", c.fusion_floor_at_zero);
  s.done();
}

const char* mode_name(CeMode m) {
  switch (m) {
    case CeMode::ShareBatch:
      return "share_batch";
    case CeMode::ShareBuffer:
      return "share_buffer";
    default:
      return "independent";
  }
}

}  // namespace

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  Section s(j, "");
  const int version = s.integer("schema_version", kConfigSchemaVersion);
  if (version != kConfigSchemaVersion)
    throw ConfigError("schema_version: unsupported version " +
                      std::to_string(version));
  cfg.trainer = s.str("trainer", cfg.trainer);
  if (cfg.trainer != "onpolicy" && cfg.trainer != "offpolicy")
    throw ConfigError("trainer: expected onpolicy or offpolicy");
  if (const json* env = s.child("env")) parse_env(*env, cfg);
  if (const json* op = s.child("onpolicy")) parse_onpolicy(*op, cfg.onpolicy);
  if (const json* off = s.child("offpolicy"))
    parse_offpolicy(*off, cfg.offpolicy);
  if (s.has("seeds")) {
    const json& v = j.at("seeds");
    if (!v.is_array() || v.empty())
      throw ConfigError("seeds: expected a non-empty array of integers");
    cfg.seeds.clear();
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() < 0)
        throw ConfigError("seeds: expected non-negative integers");
      cfg.seeds.push_back(e.get<std::uint64_t>());
    }
  }
  cfg.max_env_steps = s.long_integer("max_env_steps", cfg.max_env_steps);
  if (cfg.max_env_steps < 1)
    throw ConfigError("max_env_steps: must be >= 1");
  cfg.out_dir = s.str("out_dir", cfg.out_dir);
  cfg.label = s.str("label", cfg.label);
  s.done();

  if (cfg.trainer == "onpolicy") {
    cfg.onpolicy.validate();
  } else {
    cfg.offpolicy.validate();
    if (cfg.env_name == "grid_maze")
      throw ConfigError(
          "trainer: offpolicy requires a continuous-action environment");
  }
  return cfg;
}

ExperimentConfig load_config_text(const std::string& text,
                                  const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return config_from_json(j);
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected path=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  nlohmann::json value;
  try {
    value = nlohmann::json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;  // bare strings need no quotes
  }

  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty())
      throw ConfigError("override '" + assignment + "': empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (!node->is_object() && !node->is_null())
      throw ConfigError("override '" + assignment + "': " + key +
                        " is not an object");
    start = dot + 1;
  }
}

std::unique_ptr<Env> ExperimentConfig::make_env() const {
  if (env_name == "point_goal") return make_point_goal_2d(point_goal);
  if (env_name == "grid_maze") return make_grid_maze(grid_horizon);
  if (env_name == "line_return") return make_line_return(line_horizon);
  throw ConfigError("env.name: unknown environment '" + env_name + "'");
}

nlohmann::json ExperimentConfig::resolved() const {
  nlohmann::json env{{"name", env_name}};
  if (env_name == "point_goal") {
    env["goals"] = point_goal.goals;
    env["goal_distance"] = point_goal.goal_distance;
    env["goal_radius"] = point_goal.goal_radius;
    env["step_size"] = point_goal.step_size;
    env["step_cost"] = point_goal.step_cost;
    env["goal_bonus"] = point_goal.goal_bonus;
    env["horizon"] = point_goal.horizon;
  } else if (env_name == "grid_maze") {
    env["horizon"] = grid_horizon;
  } else {
    env["horizon"] = line_horizon;
  }

  const OnPolicyConfig& c = onpolicy;
  nlohmann::json on{{"K", c.K},
                    {"N", c.N},
                    {"minibatch", c.minibatch},
                    {"sgd_iters", c.sgd_iters},
                    {"clip_eps", c.clip_eps},
                    {"kl_coeff", c.kl_coeff},
                    {"ent_coeff", c.ent_coeff},
                    {"gamma", c.gamma},
                    {"lambda", c.lambda},
                    {"tau", c.tau},
                    {"lr", c.lr},
                    {"vf_lr", c.vf_lr},
                    {"vf_train_iters", c.vf_train_iters},
                    {"dvn_lr", c.dvn_lr},
                    {"dvn_train_iters", c.dvn_train_iters},
                    {"max_grad_norm", c.max_grad_norm},
                    {"hidden", c.hidden},
                    {"log_std_init", c.log_std_init},
                    {"use_tsc", c.use_tsc},
                    {"use_ce", c.use_ce},
                    {"use_dr", c.use_dr},
                    {"use_dvn", c.use_dvn},
                    {"use_na", c.use_na},
                    {"use_du", c.use_du},
                    {"exclude_self", c.exclude_self},
                    {"adam", c.adam},
                    {"fusion_floor_at_zero", c.fusion_floor_at_zero}};

  const OffPolicyConfig& f = offpolicy;
  nlohmann::json off{{"K", f.K},
                     {"N", f.N},
                     {"buffer_capacity", f.buffer_capacity},
                     {"warmup_steps", f.warmup_steps},
                     {"steps_per_iteration", f.steps_per_iteration},
                     {"updates_per_step", f.updates_per_step},
                     {"gamma", f.gamma},
                     {"tau", f.tau},
                     {"lr", f.lr},
                     {"alpha_ent", f.alpha_ent},
                     {"auto_alpha", f.auto_alpha},
                     {"target_entropy", f.target_entropy},
                     {"hidden", f.hidden},
                     {"log_std_init", f.log_std_init},
                     {"max_grad_norm", f.max_grad_norm},
                     {"mode", mode_name(f.mode)},
                     {"use_dr", f.use_dr},
                     {"use_du", f.use_du},
                     {"exclude_self", f.exclude_self},
                     {"adam", f.adam},
                     {"fusion_floor_at_zero", f.fusion_floor_at_zero}};

  return nlohmann::json{{"schema_version", kConfigSchemaVersion},
                        {"trainer", trainer},
                        {"env", env},
                        {"onpolicy", on},
                        {"offpolicy", off},
                        {"seeds", seeds},
                        {"max_env_steps", max_env_steps},
                        {"out_dir", out_dir},
                        {"label", label}};
}

}  // namespace dice
