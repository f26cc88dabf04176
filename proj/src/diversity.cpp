#include "dice/diversity.hpp"

#include <cmath>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"

namespace dice {

void polyak_update(ParamVector& target, const ParamVector& latest, double tau) {
  if (target.size() != latest.size())
    throw ConfigError("polyak_update: dimension mismatch");
  if (tau < 0.0 || tau > 1.0)
    throw ConfigError("polyak_update: tau must be in [0, 1]");
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = (1.0 - tau) * target[i] + tau * latest[i];
}

namespace {

double squared_distance(const std::vector<double>& a,
                        const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Action mean for Gaussian heads, probability vector for categorical ones.
std::vector<double> behavior_point(const Policy& p,
                                   const std::vector<double>& obs) {
  std::vector<double> h = p.head(obs);
  if (p.kind() == HeadKind::Categorical) return softmax(h);
  return h;
}

}  // namespace

double diversity_reward(const Policy& live, const std::vector<Policy>& targets,
                        int self_index, const std::vector<double>& obs,
                        const DiversityOptions& opts) {
  std::vector<double> mine = behavior_point(live, obs);
  double sum = 0.0;
  int count = 0;
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (opts.exclude_self && static_cast<int>(j) == self_index) continue;
    sum += squared_distance(mine, behavior_point(targets[j], obs));
    count += 1;
  }
  if (count == 0) return 0.0;
  double r = sum / static_cast<double>(count);
  if (opts.per_dim_mean) r /= static_cast<double>(mine.size());
  return r;
}

std::vector<double> diversity_rewards(const Policy& live,
                                      const std::vector<Policy>& targets,
                                      int self_index,
                                      const TrajectoryBatch& batch,
                                      const DiversityOptions& opts) {
  std::vector<double> r(batch.size());
  for (int i = 0; i < batch.size(); ++i)
    r[i] = diversity_reward(live, targets, self_index, batch.t[i].obs, opts);
  return r;
}

std::vector<double> diversity_return(const TrajectoryBatch& batch,
                                     const std::vector<double>& r_d,
                                     double gamma) {
  if (static_cast<int>(r_d.size()) != batch.size())
    throw ConfigError("diversity_return: reward count mismatch");
  std::vector<double> ret(r_d.size(), 0.0);
  double next = 0.0;
  for (int i = batch.size() - 1; i >= 0; --i) {
    // Episode segments follow the transitions' done flags; owners' segments
    // never interleave because batches concatenate per owner in time order.
    bool continues = !batch.t[i].done && i + 1 < batch.size() &&
                     batch.t[i + 1].owner == batch.t[i].owner;
    ret[i] = r_d[i] + (continues ? gamma * next : 0.0);
    next = ret[i];
  }
  return ret;
}

std::vector<Policy> unflatten_targets(const TargetPolicySet& targets,
                                      const Policy& arch) {
  std::vector<Policy> out;
  out.reserve(targets.params.size());
  for (const auto& p : targets.params) {
    Policy t = arch;
    t.unflatten(p);
    out.push_back(std::move(t));
  }
  return out;
}

double fit_dvn(Mlp& dvn, const TrajectoryBatch& batch,
               const std::vector<double>& r_d_returns, int steps,
               OptimizerState& opt) {
  const int n = batch.size();
  std::vector<double> xs(static_cast<std::size_t>(n) * batch.obs_dim);
  for (int i = 0; i < n; ++i)
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(),
              xs.begin() + static_cast<std::size_t>(i) * batch.obs_dim);
  MlpCache cache;
  double loss = 0.0;
  for (int s = 0; s < steps; ++s) {
    dvn.forward_batch(xs, n, cache);
    std::vector<double> upstream(n);
    loss = 0.0;
    for (int i = 0; i < n; ++i) {
      double err = cache.out[i] - r_d_returns[i];
      loss += 0.5 * err * err / n;
      upstream[i] = -err / n;  // ascent on -loss
    }
    ParamVector g = dvn.backward(cache, upstream);
    apply_gradient(dvn.params(), g, opt);
  }
  return loss;
}

std::vector<double> diversity_advantages_with_dvn(
    const Mlp& dvn, const TrajectoryBatch& batch,
    const std::vector<double>& r_d, double gamma, double lambda) {
  std::vector<double> adv(batch.size(), 0.0);
  double next_adv = 0.0;
  for (int i = batch.size() - 1; i >= 0; --i) {
    const Transition& tr = batch.t[i];
    double v = dvn.forward(tr.obs)[0];
    double v_next = dvn.forward(tr.next_obs)[0];
    double delta = r_d[i] + gamma * v_next * (tr.done ? 0.0 : 1.0) - v;
    bool continues = !tr.done && i + 1 < batch.size() &&
                     batch.t[i + 1].owner == tr.owner;
    adv[i] = delta + (continues ? gamma * lambda * next_adv : 0.0);
    next_adv = adv[i];
  }
  return adv;
}

}  // namespace dice
