#ifndef DICE_TRAINER_OFFPOLICY_HPP_
#define DICE_TRAINER_OFFPOLICY_HPP_

#include <memory>
#include <vector>

#include "dice/diversity.hpp"
#include "dice/env.hpp"
#include "dice/fusion.hpp"
#include "dice/optimizer.hpp"
#include "dice/policy.hpp"
#include "dice/rollout.hpp"
#include "dice/trainer_onpolicy.hpp"  // IterationMetrics, ObjectiveResult

namespace dice {

// How agents see each other's experience.
enum class CeMode { ShareBatch, ShareBuffer, Independent };

struct OffPolicyConfig {
  int K = 5;
  int N = 256;  // update batch size
  int buffer_capacity = 100000;
  long warmup_steps = 500;  // team env steps with uniform actions, no updates
  int steps_per_iteration = 64;  // env steps per agent between metric rows
  int updates_per_step = 1;
  double gamma = 0.99;
  double tau = 0.005;
  double lr = 3e-4;
  double alpha_ent = 0.2;
  bool auto_alpha = false;
  double target_entropy = 0.0;  // 0 = use -action_dim
  int hidden = 64;
  double log_std_init = 0.0;
  double max_grad_norm = 10.0;
  CeMode mode = CeMode::ShareBatch;
  bool use_dr = true;
  bool use_du = true;
  bool exclude_self = false;
  bool adam = false;
  bool fusion_floor_at_zero = false;

  void validate() const;
};

// Fixed-capacity FIFO ring with uniform with-replacement sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, int owner, const EnvSpec& spec);

  void push(Transition tr);
  int size() const { return static_cast<int>(data_.size()); }
  int capacity() const { return capacity_; }
  int owner() const { return owner_; }
  const EnvSpec& env_spec() const { return spec_; }

  // i-th oldest entry (eviction order), for tests.
  const Transition& at(int i) const;

  const Transition& sample(Rng& rng) const;

 private:
  std::vector<Transition> data_;
  int capacity_;
  int owner_;
  int head_ = 0;  // next insertion slot once full
  EnvSpec spec_;
};

// One batch drawn for the whole team: n_j = N/K (round-robin remainder) rows
// from EACH buffer, concatenated in owner order.
TrajectoryBatch sample_share_batch(const std::vector<ReplayBuffer>& buffers,
                                   int N, Rng& rng);

// A personal batch for one agent with the same owner composition, drawn
// fresh (agent_k only tags the draw; composition is identical for all k).
TrajectoryBatch sample_share_buffer(const std::vector<ReplayBuffer>& buffers,
                                    int agent_k, int N, Rng& rng);

// Critic input row: obs followed by the action vector.
std::vector<double> critic_input(const std::vector<double>& obs,
                                 const std::vector<double>& act);

// TD targets y_i = r_i + gamma (1-done) (min_j Qtj(s', a') - alpha log pi(a'|s')),
// with next actions and their log-probs supplied by the caller.
std::vector<double> sac_critic_targets(
    const Mlp& q1_target, const Mlp& q2_target, const TrajectoryBatch& batch,
    const std::vector<std::vector<double>>& next_actions,
    const std::vector<double>& next_log_probs, double gamma, double alpha);

// Diversity TD targets y_i = r_d_i + gamma (1-done) Qd_target(s', a').
std::vector<double> sac_diversity_targets(
    const Mlp& qd_target, const TrajectoryBatch& batch,
    const std::vector<double>& r_d,
    const std::vector<std::vector<double>>& next_actions, double gamma);

// 0.5 * mean (Q(s, a) - y)^2 over the batch's stored state-action pairs,
// with the exact parameter gradient of the loss.
double sac_q_loss(const Mlp& q, const TrajectoryBatch& batch,
                  const std::vector<double>& y, ParamVector* grad = nullptr);

// Reparameterized actor objective with fixed noise eps (one row per
// transition): mean_i [min(Q1, Q2)(s_i, a_i) - alpha log pi(a_i|s_i)] where
// a_i = mean(s_i) + std * eps_i. Critics are held fixed; the gradient is with
// respect to the policy parameters only.
ObjectiveResult sac_actor_objective(const Policy& pi, const Mlp& q1,
                                    const Mlp& q2,
                                    const TrajectoryBatch& batch,
                                    const std::vector<std::vector<double>>& eps,
                                    double alpha);

// Diversity ascent objective mean_i Qd(s_i, a_i), same reparameterization.
ObjectiveResult sac_diversity_ascent_objective(
    const Policy& pi, const Mlp& qd, const TrajectoryBatch& batch,
    const std::vector<std::vector<double>>& eps);

struct SacAgent {
  Policy policy;
  Mlp q1, q2, q1_target, q2_target;
  Mlp qd, qd_target;
  double log_alpha = 0.0;
  OptimizerState pi_opt, q1_opt, q2_opt, qd_opt, alpha_opt;
  std::unique_ptr<Env> env;
  Rng rng;  // env seeds and behavior sampling
  std::vector<double> last_obs;
  bool needs_reset = true;
  double episode_reward = 0.0;
  double last_return_mean = 0.0;
  double last_return_max = 0.0;

  SacAgent(Policy p, Mlp c1, Mlp c2, Mlp d, std::unique_ptr<Env> e,
           std::uint64_t seed)
      : policy(std::move(p)),
        q1(std::move(c1)),
        q2(std::move(c2)),
        q1_target(q1),
        q2_target(q2),
        qd(std::move(d)),
        qd_target(qd),
        env(std::move(e)),
        rng(seed) {}

  double alpha() const;
};

class OffPolicyTrainer {
 public:
  // Continuous action spaces only.
  OffPolicyTrainer(const OffPolicyConfig& cfg, const Env& env_prototype,
                   std::uint64_t master_seed);

  // steps_per_iteration env steps per agent, with one update round per env
  // step once past warmup and the buffers hold enough rows. Throws TrainAbort
  // on non-finite losses, gradients, or parameters.
  IterationMetrics train_iteration();

  const OffPolicyConfig& config() const { return cfg_; }
  const std::vector<SacAgent>& agents() const { return agents_; }
  std::vector<SacAgent>& agents() { return agents_; }
  const std::vector<ReplayBuffer>& buffers() const { return buffers_; }
  const TargetPolicySet& policy_targets() const { return policy_targets_; }
  long iteration() const { return iteration_; }
  long env_steps() const { return env_steps_; }

  void sync_targets_to_live();

 private:
  void update_round();
  void update_agent(int k, const TrajectoryBatch& batch);

  OffPolicyConfig cfg_;
  std::vector<SacAgent> agents_;
  std::vector<ReplayBuffer> buffers_;
  TargetPolicySet policy_targets_;  // diversity references
  Rng sample_rng_;  // batch draws
  Rng update_rng_;  // reparameterization noise and next-state actions
  long iteration_ = 0;
  long env_steps_ = 0;

  // Per-iteration diagnostic accumulators.
  double acc_entropy_ = 0.0, acc_cosine_ = 0.0, acc_qloss_ = 0.0;
  double acc_div_ = 0.0;
  long acc_updates_ = 0, acc_cos_cnt_ = 0;
};

}  // namespace dice

#endif  // DICE_TRAINER_OFFPOLICY_HPP_
