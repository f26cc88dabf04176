#ifndef DICE_CONFIG_HPP_
#define DICE_CONFIG_HPP_

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "dice/env.hpp"
#include "dice/trainer_offpolicy.hpp"
#include "dice/trainer_onpolicy.hpp"

namespace dice {

inline constexpr int kConfigSchemaVersion = 1;

// A fully resolved experiment: trainer kind, env, trainer settings, seeds,
// budget, output location. Unknown keys anywhere in the source file are
// rejected with their dotted path.
struct ExperimentConfig {
  std::string trainer = "onpolicy";  // onpolicy | offpolicy
  std::string env_name = "point_goal";
  PointGoalParams point_goal;
  int grid_horizon = 100;
  int line_horizon = 32;
  OnPolicyConfig onpolicy;
  OffPolicyConfig offpolicy;
  std::vector<std::uint64_t> seeds{0, 100, 200};
  long max_env_steps = 100000;
  std::string out_dir = "runs/out";
  std::string label = "full";

  std::unique_ptr<Env> make_env() const;

  // Canonical JSON with every default materialized (manifest payload).
  nlohmann::json resolved() const;
};

// Parse + validate. Throws ConfigError with line:column on syntax errors and
// dotted paths on unknown or ill-typed keys.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig load_config_text(const std::string& text,
                                  const std::string& origin = "<config>");

// Apply one "dotted.path=value" override to a raw JSON document. The value is
// parsed as JSON when possible and falls back to a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

}  // namespace dice

#endif  // DICE_CONFIG_HPP_
