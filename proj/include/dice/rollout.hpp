#ifndef DICE_ROLLOUT_HPP_
#define DICE_ROLLOUT_HPP_

#include <cstdint>
#include <vector>

#include "dice/env.hpp"
#include "dice/mlp.hpp"
#include "dice/policy.hpp"
#include "dice/rng.hpp"

namespace dice {

struct Transition {
  std::vector<double> obs, next_obs;
  Action action;
  double reward = 0.0;
  bool done = false;
  // Behavior policy at sampling time: scalar log-prob plus the full head so
  // that ratios and KL terms can be evaluated against any consumer policy.
  double behavior_log_prob = 0.0;
  std::vector<double> behavior_mean, behavior_log_std;  // Gaussian head
  std::vector<double> behavior_probs;                   // categorical head
  int owner = 0;
  // Owner's value estimates, recorded at collection time.
  double value = 0.0, next_value = 0.0;
  // Frozen at collection; never recomputed by consumers.
  double advantage = 0.0, ret = 0.0;
  std::uint64_t owner_value_hash = 0;
};

struct TrajectoryBatch {
  std::vector<Transition> t;
  int obs_dim = 0, action_dim = 0;
  ActionKind kind = ActionKind::Continuous;

  int size() const { return static_cast<int>(t.size()); }
};

// Episode bookkeeping produced alongside a collected batch.
struct CollectStats {
  std::vector<double> completed_returns;  // task return of episodes finished
  int episodes = 0;
};

// Per-agent rollout state. Episodes persist across collect() calls; the env
// is reset lazily on first use and after each done.
class Collector {
 public:
  explicit Collector(Env* env) : env_(env) {}

  // Roll the policy for exactly n transitions, resetting on done. Values come
  // from the owner's value net; behavior distributions are recorded per
  // transition, and every transition is tagged with `owner`.
  TrajectoryBatch collect(const Policy& policy, const Mlp& value_net, int n,
                          int owner, Rng& rng, CollectStats* stats = nullptr);

 private:
  Env* env_;
  std::vector<double> last_obs_;
  bool needs_reset_ = true;
  double episode_reward_ = 0.0;
};

// r + gamma * v_next * (1 - done) - v
double one_step_advantage(double r, double v_s, double v_s_next, bool done,
                          double gamma);

// Generalized advantage estimation over the batch, respecting episode
// boundaries (done flags). The final transition of a truncated episode
// bootstraps through its recorded next_value. Fills t[i].advantage.
void gae(TrajectoryBatch& batch, double gamma, double lambda);

// Bootstrapped discounted returns (value-regression targets). Fills t[i].ret.
void compute_returns(TrajectoryBatch& batch, double gamma);

// Zero mean, unit standard deviation (population), with an epsilon guard.
void normalize_advantages(std::vector<double>& adv);

// Concatenate K owner batches into a shared batch. Advantages stay frozen as
// computed by each owner. Mismatched environment layouts are rejected.
TrajectoryBatch merge_team_batches(const std::vector<TrajectoryBatch>& batches);

// Split N into K per-agent counts: N/K each with the remainder assigned
// round-robin from agent 0, so the counts always sum to N.
std::vector<int> split_counts(int total, int k);

}  // namespace dice

#endif  // DICE_ROLLOUT_HPP_
