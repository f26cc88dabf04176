#ifndef DICE_ENV_HPP_
#define DICE_ENV_HPP_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dice/policy.hpp"

namespace dice {

enum class ActionKind { Continuous, Discrete };

struct EnvSpec {
  int obs_dim = 0;
  ActionKind kind = ActionKind::Continuous;
  int action_dim = 0;  // box dims (continuous) or number of actions (discrete)
  double action_low = -1.0, action_high = 1.0;
  int horizon = 1;
  std::string name;
};

struct StepResult {
  std::vector<double> next_obs;
  double reward = 0.0;
  bool done = false;
  std::map<std::string, double> info;
};

// Single-owner environment instance. Episodes end at the goal or at the
// horizon; stepping a finished episode is a contract error.
class Env {
 public:
  virtual ~Env() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const Action& action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

// Continuous point agent with G goals at distinct angles and equal distance
// from the origin. Observation: position plus the relative vector to each
// goal. Action: 2-D velocity, clamped per axis to [-1, 1] (clamp events are
// reported in info). Reward: -step_cost per step, +goal_bonus on reaching
// any goal. The episode ends at a goal or at the horizon.
struct PointGoalParams {
  int goals = 3;
  double goal_distance = 1.0;
  double goal_radius = 0.15;
  double step_size = 0.1;  // displacement = step_size * action
  double step_cost = 0.05;
  double goal_bonus = 10.0;
  int horizon = 64;
};
std::unique_ptr<Env> make_point_goal_2d(const PointGoalParams& p);

// 8x8 grid with walls and a single goal. One-hot position observation,
// actions {up, down, left, right}, reward +1 at the goal else 0.
std::unique_ptr<Env> make_grid_maze(int horizon = 100);

// 1-D diagnostic: x' = x + 0.25 * a with a in [-1, 1], reward -(|x| - 1)^2.
// Optima at x = +-1, so gradients and optima are known in closed form.
std::unique_ptr<Env> make_line_return(int horizon = 32);

// Shortest path length from start to goal in the built-in maze (for tests).
int grid_maze_shortest_path();

}  // namespace dice

#endif  // DICE_ENV_HPP_
