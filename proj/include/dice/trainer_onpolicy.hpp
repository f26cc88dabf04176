#ifndef DICE_TRAINER_ONPOLICY_HPP_
#define DICE_TRAINER_ONPOLICY_HPP_

#include <memory>
#include <vector>

#include "dice/diversity.hpp"
#include "dice/env.hpp"
#include "dice/fusion.hpp"
#include "dice/optimizer.hpp"
#include "dice/policy.hpp"
#include "dice/rollout.hpp"

namespace dice {

struct OnPolicyConfig {
  int K = 5;
  int N = 2048;       // team batch per iteration, split across agents
  int minibatch = 256;
  int sgd_iters = 10;
  double clip_eps = 0.2;
  double kl_coeff = 0.2;
  double ent_coeff = 0.0;
  double gamma = 0.99;
  double lambda = 1.0;
  double tau = 0.005;
  double lr = 1e-4;
  double vf_lr = 1e-3;
  int vf_train_iters = 10;
  double dvn_lr = 1e-3;
  int dvn_train_iters = 10;
  double max_grad_norm = 10.0;  // applied to the fused gradient; <= 0 disables
  int hidden = 64;
  double log_std_init = 0.0;
  bool use_tsc = true;   // two-side clip surrogate; false = PPO clip
  bool use_ce = true;    // shared team batch; false = own batch only
  bool use_dr = true;    // diversity gradient fused into the update
  bool use_dvn = false;  // diversity value network baseline
  bool use_na = false;   // advantage normalization
  bool use_du = true;    // Polyak targets; false = targets track live copies
  bool exclude_self = false;
  bool adam = false;
  bool fusion_floor_at_zero = false;

  void validate() const;  // throws ConfigError
};

struct IterationMetrics {
  long iteration = 0;
  long env_steps = 0;  // cumulative team env steps
  std::vector<double> agent_return_mean;
  std::vector<double> agent_return_max;
  double best_return = 0.0;  // max over agents of the per-agent mean
  double diversity_mean = 0.0;
  double entropy = 0.0;
  double ratio_mean = 0.0;
  double ratio_max = 0.0;
  double grad_cosine = 0.0;  // task/diversity cosine, averaged over updates
  double clip_fraction = 0.0;
  double kl = 0.0;
  double value_loss = 0.0;
};

// Surrogate pieces. Both keep the loss bounded via clipping; TSC additionally
// bounds it below when the advantage is negative.
double tsc_loss(double rho, double adv, double clip_eps);
double ppo_clip_loss(double rho, double adv, double clip_eps);
// Derivatives with respect to rho (clip subgradient: zero on the flat side).
double tsc_loss_drho(double rho, double adv, double clip_eps);
double ppo_clip_loss_drho(double rho, double adv, double clip_eps);

// Scalar objective together with its exact parameter gradient, plus the
// diagnostics accumulated while evaluating it.
struct ObjectiveResult {
  double objective = 0.0;
  ParamVector grad;  // policy flatten order
  double kl = 0.0;   // plain means over the evaluated rows
  double entropy = 0.0;
  double ratio_mean = 0.0;
  double ratio_max = 0.0;
  double clip_fraction = 0.0;
};

// Owner-weighted clipped-surrogate objective over batch rows idx:
//   sum_i w[i] * scale * surrogate(rho_i, signal_i)  with scale = |batch|/|idx|
// so that a uniformly drawn minibatch is an unbiased estimate of the
// full-batch objective. `weights` is aligned with the full batch and holds
// 1 / (K * n_owner) per row, making the full-batch value the average of
// per-owner means. KL penalty and entropy bonus enter with the same weights.
struct SurrogateSpec {
  bool use_tsc = true;
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
  double ent_coeff = 0.0;
};
ObjectiveResult surrogate_objective(const Policy& policy,
                                    const TrajectoryBatch& batch,
                                    const std::vector<int>& idx,
                                    const std::vector<double>& weights,
                                    const std::vector<double>& signal,
                                    const SurrogateSpec& spec);

// Task objective: signal = frozen owner advantages, KL/entropy terms active.
ObjectiveResult ce_task_objective(const Policy& policy,
                                  const TrajectoryBatch& batch,
                                  const std::vector<int>& idx,
                                  const std::vector<double>& weights,
                                  const OnPolicyConfig& cfg);

// Diversity objective: the same surrogate with the advantage replaced by the
// diversity signal (discounted diversity return, or DVN advantages). No KL or
// entropy terms.
ObjectiveResult diversity_objective(const Policy& policy,
                                    const TrajectoryBatch& batch,
                                    const std::vector<int>& idx,
                                    const std::vector<double>& weights,
                                    const std::vector<double>& r_d_signal,
                                    const OnPolicyConfig& cfg);

// 0.5 * mean (v(s) - ret)^2 over idx; optional exact gradient of the loss.
double value_loss(const Mlp& value, const TrajectoryBatch& batch,
                  const std::vector<int>& idx, ParamVector* grad = nullptr);

// Per-row weights 1 / (K * n_owner) for a (possibly merged) batch, with K
// the number of distinct owners present.
std::vector<double> owner_weights(const TrajectoryBatch& batch);

struct OnPolicyAgent {
  Policy policy;
  Mlp value;
  Mlp dvn;
  OptimizerState pi_opt, vf_opt, dvn_opt;
  std::unique_ptr<Env> env;
  std::unique_ptr<Collector> collector;
  Rng rng;  // action sampling and env reset seeds

  // Carried forward when an iteration completes no episode.
  double last_return_mean = 0.0;
  double last_return_max = 0.0;

  OnPolicyAgent(Policy p, Mlp v, Mlp d, std::unique_ptr<Env> e,
                std::uint64_t seed)
      : policy(std::move(p)),
        value(std::move(v)),
        dvn(std::move(d)),
        env(std::move(e)),
        collector(std::make_unique<Collector>(env.get())),
        rng(seed) {}
};

class OnPolicyTrainer {
 public:
  // Builds K agents, each with its own env clone and derived random streams.
  OnPolicyTrainer(const OnPolicyConfig& cfg, const Env& env_prototype,
                  std::uint64_t master_seed);

  // One full DiCE iteration: collect, advantages, merge, diversity signals,
  // minibatch SGA with gradient fusion, value regression, target update.
  // Throws TrainAbort when any objective, gradient, or parameter goes
  // non-finite (the collapse guard).
  IterationMetrics train_iteration();

  const OnPolicyConfig& config() const { return cfg_; }
  const std::vector<OnPolicyAgent>& agents() const { return agents_; }
  std::vector<OnPolicyAgent>& agents() { return agents_; }
  const TargetPolicySet& targets() const { return targets_; }
  long iteration() const { return iteration_; }
  long env_steps() const { return env_steps_; }

  // Reset every target to its agent's live parameters (also the use_du=false
  // path, and useful after tests overwrite agent parameters).
  void sync_targets_to_live();

  // Mean pairwise squared head distance of the live policies over a fixed
  // probe-state set (built once at construction from a random-action rollout,
  // so the measure is comparable across runs with the same seed).
  double mean_pairwise_diversity() const;

 private:
  OnPolicyConfig cfg_;
  std::vector<OnPolicyAgent> agents_;
  TargetPolicySet targets_;
  Rng team_rng_;  // minibatch permutations, shared by all agents
  std::vector<std::vector<double>> probe_obs_;
  long iteration_ = 0;
  long env_steps_ = 0;
};

}  // namespace dice

#endif  // DICE_TRAINER_ONPOLICY_HPP_
