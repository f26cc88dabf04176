#include "dice/rollout.hpp"

#include <cmath>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"

namespace dice {

TrajectoryBatch Collector::collect(const Policy& policy, const Mlp& value_net,
                                   int n, int owner, Rng& rng,
                                   CollectStats* stats) {
  if (n < 1) throw ConfigError("collect: n must be >= 1");
  TrajectoryBatch batch;
  batch.obs_dim = env_->spec().obs_dim;
  batch.action_dim = env_->spec().action_dim;
  batch.kind = env_->spec().kind;
  batch.t.reserve(n);

  const std::uint64_t vhash = param_hash(value_net.flatten());

  if (needs_reset_) {
    last_obs_ = env_->reset(rng.next_u64());
    needs_reset_ = false;
    episode_reward_ = 0.0;
  }

  for (int i = 0; i < n; ++i) {
    Transition tr;
    tr.obs = last_obs_;
    tr.owner = owner;
    std::vector<double> head;
    tr.action = policy.sample(tr.obs, rng, &tr.behavior_log_prob, &head);
    if (policy.kind() == HeadKind::Gaussian) {
      tr.behavior_mean = head;
      tr.behavior_log_std = policy.log_std();
    } else {
      tr.behavior_probs = softmax(head);
    }
    StepResult sr = env_->step(tr.action);
    tr.reward = sr.reward;
    tr.done = sr.done;
    tr.next_obs = sr.next_obs;
    tr.value = value_net.forward(tr.obs)[0];
    tr.next_value = value_net.forward(tr.next_obs)[0];
    tr.owner_value_hash = vhash;
    episode_reward_ += sr.reward;
    if (sr.done) {
      if (stats) {
        stats->completed_returns.push_back(episode_reward_);
        stats->episodes += 1;
      }
      episode_reward_ = 0.0;
      last_obs_ = env_->reset(rng.next_u64());
    } else {
      last_obs_ = sr.next_obs;
    }
    batch.t.push_back(std::move(tr));
  }
  return batch;
}

double one_step_advantage(double r, double v_s, double v_s_next, bool done,
                          double gamma) {
  return r + gamma * v_s_next * (done ? 0.0 : 1.0) - v_s;
}

void gae(TrajectoryBatch& batch, double gamma, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("gae: lambda must be in [0, 1]");
  double next_adv = 0.0;
  for (int i = batch.size() - 1; i >= 0; --i) {
    Transition& tr = batch.t[i];
    double delta =
        one_step_advantage(tr.reward, tr.value, tr.next_value, tr.done, gamma);
    // Continuation only within an episode; the newest transition of a
    // truncated episode bootstraps via delta's next_value term.
    bool continues = !tr.done && i + 1 < batch.size();
    tr.advantage = delta + (continues ? gamma * lambda * next_adv : 0.0);
    next_adv = tr.advantage;
  }
}

void compute_returns(TrajectoryBatch& batch, double gamma) {
  double next_ret = 0.0;
  for (int i = batch.size() - 1; i >= 0; --i) {
    Transition& tr = batch.t[i];
    double bootstrap;
    if (tr.done)
      bootstrap = 0.0;
    else if (i + 1 < batch.size())
      bootstrap = next_ret;
    else
      bootstrap = tr.next_value;
    tr.ret = tr.reward + gamma * bootstrap;
    next_ret = tr.ret;
  }
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.size() < 2)
    throw ConfigError("normalize_advantages: need at least 2 samples");
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  var /= static_cast<double>(adv.size());
  double denom = std::sqrt(var) + 1e-8;
  for (double& a : adv) a = (a - mean) / denom;
}

TrajectoryBatch merge_team_batches(
    const std::vector<TrajectoryBatch>& batches) {
  if (batches.empty()) throw ConfigError("merge: no batches");
  TrajectoryBatch shared;
  shared.obs_dim = batches[0].obs_dim;
  shared.action_dim = batches[0].action_dim;
  shared.kind = batches[0].kind;
  for (const auto& b : batches) {
    if (b.obs_dim != shared.obs_dim || b.action_dim != shared.action_dim ||
        b.kind != shared.kind)
      throw ConfigError("merge: mismatched environment layouts across agents");
    shared.t.insert(shared.t.end(), b.t.begin(), b.t.end());
  }
  return shared;
}

std::vector<int> split_counts(int total, int k) {
  if (k < 1 || total < k) throw ConfigError("split_counts: need total >= k >= 1");
  std::vector<int> counts(k, total / k);
  for (int i = 0; i < total % k; ++i) counts[i] += 1;
  return counts;
}

}  // namespace dice
