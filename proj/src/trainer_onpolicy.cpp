#include "dice/trainer_onpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <utility>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"

namespace dice {

void OnPolicyConfig::validate() const {
  if (K < 1) throw ConfigError("onpolicy: K must be >= 1");
  if (N < K) throw ConfigError("onpolicy: N must be >= K");
  if (minibatch < 1 || minibatch > N)
    throw ConfigError("onpolicy: need 1 <= minibatch <= N");
  if (sgd_iters < 1) throw ConfigError("onpolicy: sgd_iters must be >= 1");
  if (vf_train_iters < 0 || dvn_train_iters < 0)
    throw ConfigError("onpolicy: regression iters must be >= 0");
  if (clip_eps <= 0.0) throw ConfigError("onpolicy: clip_eps must be > 0");
  if (kl_coeff < 0.0) throw ConfigError("onpolicy: kl_coeff must be >= 0");
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("onpolicy: gamma must be in [0, 1]");
  if (lambda < 0.0 || lambda > 1.0)
    throw ConfigError("onpolicy: lambda must be in [0, 1]");
  if (tau <= 0.0 || tau > 1.0)
    throw ConfigError("onpolicy: tau must be in (0, 1]");
  if (lr <= 0.0 || vf_lr <= 0.0 || dvn_lr <= 0.0)
    throw ConfigError("onpolicy: learning rates must be > 0");
  if (hidden < 1) throw ConfigError("onpolicy: hidden must be >= 1");
}

double tsc_loss(double rho, double adv, double clip_eps) {
  return std::clamp(rho, 0.0, 1.0 + clip_eps) * adv;
}

double ppo_clip_loss(double rho, double adv, double clip_eps) {
  double clipped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps) * adv;
  return std::min(rho * adv, clipped);
}

double tsc_loss_drho(double rho, double adv, double clip_eps) {
  return (rho > 0.0 && rho < 1.0 + clip_eps) ? adv : 0.0;
}

double ppo_clip_loss_drho(double rho, double adv, double clip_eps) {
  if (adv >= 0.0) return rho < 1.0 + clip_eps ? adv : 0.0;
  return rho > 1.0 - clip_eps ? adv : 0.0;
}

namespace {

bool surrogate_clipped(double rho, double adv, double clip_eps, bool use_tsc) {
  if (use_tsc) return rho >= 1.0 + clip_eps;
  if (adv >= 0.0) return rho > 1.0 + clip_eps;
  return rho < 1.0 - clip_eps;
}

}  // namespace

ObjectiveResult surrogate_objective(const Policy& policy,
                                    const TrajectoryBatch& batch,
                                    const std::vector<int>& idx,
                                    const std::vector<double>& weights,
                                    const std::vector<double>& signal,
                                    const SurrogateSpec& spec) {
  if (idx.empty()) throw ConfigError("surrogate_objective: empty index set");
  if (weights.size() != batch.t.size() || signal.size() != batch.t.size())
    throw ConfigError("surrogate_objective: weights/signal must span the batch");

  const int m = static_cast<int>(idx.size());
  const double scale = static_cast<double>(batch.size()) / m;
  const bool gaussian = policy.kind() == HeadKind::Gaussian;
  const int ad = policy.action_dim();

  std::vector<double> xs(static_cast<std::size_t>(m) * batch.obs_dim);
  for (int r = 0; r < m; ++r) {
    const auto& o = batch.t[idx[r]].obs;
    std::copy(o.begin(), o.end(),
              xs.begin() + static_cast<std::size_t>(r) * batch.obs_dim);
  }
  MlpCache cache;
  policy.net().forward_batch(xs, m, cache);

  const std::vector<double> ls =
      gaussian ? policy.log_std() : std::vector<double>{};

  ObjectiveResult res;
  std::vector<double> upstream(static_cast<std::size_t>(m) * ad, 0.0);
  std::vector<double> ls_grad(gaussian ? ad : 0, 0.0);

  double obj = 0.0, kl_sum = 0.0, ent_sum = 0.0, ratio_sum = 0.0;
  double ratio_max = 0.0;
  int clipped = 0;

  for (int r = 0; r < m; ++r) {
    const Transition& tr = batch.t[idx[r]];
    const double w = weights[idx[r]] * scale;
    const double sig = signal[idx[r]];
    const std::vector<double> head(
        cache.out.begin() + static_cast<std::size_t>(r) * ad,
        cache.out.begin() + static_cast<std::size_t>(r + 1) * ad);
    double* up = &upstream[static_cast<std::size_t>(r) * ad];

    const double lp = policy.log_prob(head, tr.action);
    const double rho = std::exp(lp - tr.behavior_log_prob);
    const double surr = spec.use_tsc ? tsc_loss(rho, sig, spec.clip_eps)
                                     : ppo_clip_loss(rho, sig, spec.clip_eps);
    const double dsurr = spec.use_tsc
                             ? tsc_loss_drho(rho, sig, spec.clip_eps)
                             : ppo_clip_loss_drho(rho, sig, spec.clip_eps);
    obj += w * surr;
    ratio_sum += rho;
    ratio_max = std::max(ratio_max, rho);
    if (surrogate_clipped(rho, sig, spec.clip_eps, spec.use_tsc)) ++clipped;

    if (gaussian) {
      const auto gm = gaussian_log_prob_grad_mean(head, ls, tr.action.cont);
      const auto gs = gaussian_log_prob_grad_log_std(head, ls, tr.action.cont);
      for (int d = 0; d < ad; ++d) {
        up[d] += w * dsurr * rho * gm[d];
        ls_grad[d] += w * dsurr * rho * gs[d] * policy.log_std_grad_mask(d);
      }
      const double klv =
          gaussian_kl(tr.behavior_mean, tr.behavior_log_std, head, ls);
      kl_sum += klv;
      if (spec.kl_coeff > 0.0) {
        obj -= spec.kl_coeff * w * klv;
        std::vector<double> dkm, dks;
        gaussian_kl_grad_c(tr.behavior_mean, tr.behavior_log_std, head, ls,
                           dkm, dks);
        for (int d = 0; d < ad; ++d) {
          up[d] -= spec.kl_coeff * w * dkm[d];
          ls_grad[d] -=
              spec.kl_coeff * w * dks[d] * policy.log_std_grad_mask(d);
        }
      }
      ent_sum += gaussian_entropy(ls);
      if (spec.ent_coeff != 0.0) {
        obj += spec.ent_coeff * w * gaussian_entropy(ls);
        for (int d = 0; d < ad; ++d)
          ls_grad[d] += spec.ent_coeff * w * policy.log_std_grad_mask(d);
      }
    } else {
      const auto glp = categorical_log_prob_grad(head, tr.action.disc);
      for (int d = 0; d < ad; ++d) up[d] += w * dsurr * rho * glp[d];
      const double klv = categorical_kl(tr.behavior_probs, head);
      kl_sum += klv;
      if (spec.kl_coeff > 0.0) {
        obj -= spec.kl_coeff * w * klv;
        const auto dkl = categorical_kl_grad_c(tr.behavior_probs, head);
        for (int d = 0; d < ad; ++d) up[d] -= spec.kl_coeff * w * dkl[d];
      }
      ent_sum += categorical_entropy(head);
      if (spec.ent_coeff != 0.0) {
        obj += spec.ent_coeff * w * categorical_entropy(head);
        const auto dent = categorical_entropy_grad(head);
        for (int d = 0; d < ad; ++d) up[d] += spec.ent_coeff * w * dent[d];
      }
    }
  }

  res.objective = obj;
  res.grad = policy.net().backward(cache, upstream);
  res.grad.insert(res.grad.end(), ls_grad.begin(), ls_grad.end());
  res.kl = kl_sum / m;
  res.entropy = ent_sum / m;
  res.ratio_mean = ratio_sum / m;
  res.ratio_max = ratio_max;
  res.clip_fraction = static_cast<double>(clipped) / m;
  return res;
}

ObjectiveResult ce_task_objective(const Policy& policy,
                                  const TrajectoryBatch& batch,
                                  const std::vector<int>& idx,
                                  const std::vector<double>& weights,
                                  const OnPolicyConfig& cfg) {
  std::vector<double> adv(batch.t.size());
  for (std::size_t i = 0; i < batch.t.size(); ++i) adv[i] = batch.t[i].advantage;
  SurrogateSpec spec{cfg.use_tsc, cfg.clip_eps, cfg.kl_coeff, cfg.ent_coeff};
  return surrogate_objective(policy, batch, idx, weights, adv, spec);
}

ObjectiveResult diversity_objective(const Policy& policy,
                                    const TrajectoryBatch& batch,
                                    const std::vector<int>& idx,
                                    const std::vector<double>& weights,
                                    const std::vector<double>& r_d_signal,
                                    const OnPolicyConfig& cfg) {
  SurrogateSpec spec{cfg.use_tsc, cfg.clip_eps, 0.0, 0.0};
  return surrogate_objective(policy, batch, idx, weights, r_d_signal, spec);
}

double value_loss(const Mlp& value, const TrajectoryBatch& batch,
                  const std::vector<int>& idx, ParamVector* grad) {
  if (idx.empty()) throw ConfigError("value_loss: empty index set");
  const int m = static_cast<int>(idx.size());
  std::vector<double> xs(static_cast<std::size_t>(m) * batch.obs_dim);
  for (int r = 0; r < m; ++r) {
    const auto& o = batch.t[idx[r]].obs;
    std::copy(o.begin(), o.end(),
              xs.begin() + static_cast<std::size_t>(r) * batch.obs_dim);
  }
  MlpCache cache;
  value.forward_batch(xs, m, cache);
  double loss = 0.0;
  std::vector<double> upstream(m, 0.0);
  for (int r = 0; r < m; ++r) {
    const double err = cache.out[r] - batch.t[idx[r]].ret;
    loss += 0.5 * err * err;
    upstream[r] = err / m;
  }
  loss /= m;
  if (grad != nullptr) *grad = value.backward(cache, upstream);
  return loss;
}

std::vector<double> owner_weights(const TrajectoryBatch& batch) {
  if (batch.t.empty()) throw ConfigError("owner_weights: empty batch");
  std::map<int, int> counts;
  for (const auto& tr : batch.t) counts[tr.owner] += 1;
  const double k = static_cast<double>(counts.size());
  std::vector<double> w(batch.t.size());
  for (std::size_t i = 0; i < batch.t.size(); ++i)
    w[i] = 1.0 / (k * counts[batch.t[i].owner]);
  return w;
}

namespace {

std::vector<double> behavior_point(const Policy& p,
                                   const std::vector<double>& obs) {
  std::vector<double> head = p.head(obs);
  if (p.kind() == HeadKind::Categorical) return softmax(head);
  return head;
}

}  // namespace

OnPolicyTrainer::OnPolicyTrainer(const OnPolicyConfig& cfg,
                                 const Env& env_prototype,
                                 std::uint64_t master_seed)
    : cfg_(cfg), team_rng_(derive_seed(master_seed, "team", 0)) {
  cfg_.validate();
  const EnvSpec& spec = env_prototype.spec();
  const HeadKind kind = spec.kind == ActionKind::Continuous
                            ? HeadKind::Gaussian
                            : HeadKind::Categorical;
  targets_.tau = cfg_.tau;
  agents_.reserve(cfg_.K);
  for (int k = 0; k < cfg_.K; ++k) {
    Rng init_rng(derive_seed(master_seed, "init", k));
    Policy p(spec.obs_dim, cfg_.hidden, spec.action_dim, kind,
             cfg_.log_std_init);
    p.init(init_rng);
    Mlp v(spec.obs_dim, cfg_.hidden, 1);
    v.init(init_rng);
    Mlp dvn(spec.obs_dim, cfg_.hidden, 1);
    dvn.init(init_rng);
    agents_.emplace_back(std::move(p), std::move(v), std::move(dvn),
                         env_prototype.clone(),
                         derive_seed(master_seed, "agent", k));
    OnPolicyAgent& a = agents_.back();
    a.pi_opt.lr = cfg_.lr;
    a.pi_opt.adam = cfg_.adam;
    a.vf_opt.lr = cfg_.vf_lr;
    a.vf_opt.adam = cfg_.adam;
    a.dvn_opt.lr = cfg_.dvn_lr;
    a.dvn_opt.adam = cfg_.adam;
    targets_.params.push_back(a.policy.flatten());
  }

  // Fixed probe states from a random-action rollout; shared across runs with
  // the same master seed so diversity summaries are comparable.
  auto probe_env = env_prototype.clone();
  Rng pr(derive_seed(master_seed, "probe", 0));
  std::vector<double> obs = probe_env->reset(pr.next_u64());
  for (int i = 0; i < 64; ++i) {
    probe_obs_.push_back(obs);
    Action act;
    if (spec.kind == ActionKind::Continuous) {
      act.cont.resize(spec.action_dim);
      for (int d = 0; d < spec.action_dim; ++d)
        act.cont[d] = pr.uniform(spec.action_low, spec.action_high);
    } else {
      act.disc = pr.uniform_int(spec.action_dim);
    }
    StepResult sr = probe_env->step(act);
    obs = sr.done ? probe_env->reset(pr.next_u64()) : sr.next_obs;
  }
}

void OnPolicyTrainer::sync_targets_to_live() {
  for (int k = 0; k < cfg_.K; ++k)
    targets_.params[k] = agents_[k].policy.flatten();
}

double OnPolicyTrainer::mean_pairwise_diversity() const {
  const int K = cfg_.K;
  if (K < 2) return 0.0;
  std::vector<std::vector<std::vector<double>>> pts(K);
  for (int k = 0; k < K; ++k) {
    pts[k].reserve(probe_obs_.size());
    for (const auto& obs : probe_obs_)
      pts[k].push_back(behavior_point(agents_[k].policy, obs));
  }
  double total = 0.0;
  int pairs = 0;
  for (int k = 0; k < K; ++k) {
    for (int j = k + 1; j < K; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < probe_obs_.size(); ++i) {
        double sq = 0.0;
        for (std::size_t d = 0; d < pts[k][i].size(); ++d) {
          const double diff = pts[k][i][d] - pts[j][i][d];
          sq += diff * diff;
        }
        acc += sq;
      }
      total += acc / static_cast<double>(probe_obs_.size());
      ++pairs;
    }
  }
  return total / pairs;
}

IterationMetrics OnPolicyTrainer::train_iteration() {
  const int K = cfg_.K;
  IterationMetrics m;
  m.iteration = iteration_;
  m.agent_return_mean.resize(K);
  m.agent_return_max.resize(K);

  for (int k = 0; k < K; ++k) {
    if (!all_finite(agents_[k].policy.flatten()))
      throw TrainAbort("non-finite policy parameters", iteration_);
  }

  // (1)+(2) per-agent rollouts with frozen owner advantages and returns
  const std::vector<int> counts = split_counts(cfg_.N, K);
  std::vector<TrajectoryBatch> own(K);
  for (int k = 0; k < K; ++k) {
    OnPolicyAgent& a = agents_[k];
    CollectStats stats;
    own[k] = a.collector->collect(a.policy, a.value, counts[k], k, a.rng,
                                  &stats);
    gae(own[k], cfg_.gamma, cfg_.lambda);
    compute_returns(own[k], cfg_.gamma);
    for (const auto& tr : own[k].t) {
      if (!std::isfinite(tr.advantage) || !std::isfinite(tr.ret))
        throw TrainAbort("non-finite advantage", iteration_);
    }
    if (!stats.completed_returns.empty()) {
      double sum = 0.0, mx = stats.completed_returns[0];
      for (double rv : stats.completed_returns) {
        sum += rv;
        mx = std::max(mx, rv);
      }
      a.last_return_mean = sum / stats.completed_returns.size();
      a.last_return_max = mx;
    }
    m.agent_return_mean[k] = a.last_return_mean;
    m.agent_return_max[k] = a.last_return_max;
    env_steps_ += counts[k];
  }
  m.env_steps = env_steps_;
  m.best_return =
      *std::max_element(m.agent_return_mean.begin(), m.agent_return_mean.end());

  // (3) shared batch (CE) or per-agent batches
  TrajectoryBatch shared;
  std::vector<const TrajectoryBatch*> train_batch(K);
  std::vector<double> w_shared;
  std::vector<std::vector<double>> w_own(K);
  if (cfg_.use_ce) {
    shared = merge_team_batches(own);
    if (cfg_.use_na) {
      std::vector<double> adv(shared.t.size());
      for (std::size_t i = 0; i < shared.t.size(); ++i)
        adv[i] = shared.t[i].advantage;
      normalize_advantages(adv);
      for (std::size_t i = 0; i < shared.t.size(); ++i)
        shared.t[i].advantage = adv[i];
    }
    w_shared = owner_weights(shared);
    for (int k = 0; k < K; ++k) train_batch[k] = &shared;
  } else {
    for (int k = 0; k < K; ++k) {
      if (cfg_.use_na) {
        std::vector<double> adv(own[k].t.size());
        for (std::size_t i = 0; i < own[k].t.size(); ++i)
          adv[i] = own[k].t[i].advantage;
        normalize_advantages(adv);
        for (std::size_t i = 0; i < own[k].t.size(); ++i)
          own[k].t[i].advantage = adv[i];
      }
      w_own[k] = owner_weights(own[k]);
      train_batch[k] = &own[k];
    }
  }

  // (4) per-agent diversity signals on the agent's own rollout, against
  // iteration-start targets, frozen for the epochs below
  const std::vector<Policy> target_policies =
      unflatten_targets(targets_, agents_[0].policy);
  DiversityOptions dopts;
  dopts.exclude_self = cfg_.exclude_self;
  std::vector<std::vector<double>> d_signal(K);
  double div_sum = 0.0;
  long div_cnt = 0;
  for (int k = 0; k < K; ++k) {
    const TrajectoryBatch& b = own[k];
    std::vector<double> r_d =
        diversity_rewards(agents_[k].policy, target_policies, k, b, dopts);
    for (double v : r_d) {
      if (!std::isfinite(v))
        throw TrainAbort("non-finite diversity reward", iteration_);
      div_sum += v;
    }
    div_cnt += static_cast<long>(r_d.size());
    if (cfg_.use_dr) {
      if (cfg_.use_dvn) {
        const std::vector<double> rd_ret = diversity_return(b, r_d, cfg_.gamma);
        fit_dvn(agents_[k].dvn, b, rd_ret, cfg_.dvn_train_iters,
                agents_[k].dvn_opt);
        d_signal[k] = diversity_advantages_with_dvn(agents_[k].dvn, b, r_d,
                                                    cfg_.gamma, cfg_.lambda);
      } else {
        d_signal[k] = diversity_return(b, r_d, cfg_.gamma);
      }
      for (double v : d_signal[k]) {
        if (!std::isfinite(v))
          throw TrainAbort("non-finite diversity signal", iteration_);
      }
    }
  }
  m.diversity_mean = div_cnt > 0 ? div_sum / div_cnt : 0.0;

  // (5) minibatch SGA epochs with gradient fusion; the diversity gradient is
  // evaluated on the agent's full own rollout
  std::vector<std::vector<int>> div_idx(K);
  std::vector<std::vector<double>> w_div(K);
  if (cfg_.use_dr) {
    for (int k = 0; k < K; ++k) {
      div_idx[k].resize(own[k].t.size());
      std::iota(div_idx[k].begin(), div_idx[k].end(), 0);
      w_div[k] = owner_weights(own[k]);
    }
  }
  double cos_sum = 0.0;
  long cos_cnt = 0;
  double kl_sum = 0.0, ent_sum = 0.0, ratio_sum = 0.0, clip_sum = 0.0;
  double ratio_max = 0.0;
  long diag_cnt = 0;

  auto update_agent = [&](int k, const TrajectoryBatch& b,
                          const std::vector<int>& idx,
                          const std::vector<double>& w) {
    OnPolicyAgent& a = agents_[k];
    ObjectiveResult task = ce_task_objective(a.policy, b, idx, w, cfg_);
    if (!std::isfinite(task.objective))
      throw TrainAbort("non-finite task objective", iteration_);
    ParamVector g_final;
    if (cfg_.use_dr) {
      ObjectiveResult div = diversity_objective(a.policy, own[k], div_idx[k],
                                                w_div[k], d_signal[k], cfg_);
      if (!std::isfinite(div.objective))
        throw TrainAbort("non-finite diversity objective", iteration_);
      FusionOptions fo;
      fo.floor_at_zero = cfg_.fusion_floor_at_zero;
      FusionResult fr;
      try {
        fr = fuse(task.grad, div.grad, fo);
      } catch (const TrainAbort& e) {
        throw TrainAbort(e.reason, iteration_);
      }
      g_final = std::move(fr.g_final);
      cos_sum += fr.cosine;
      ++cos_cnt;
    } else {
      if (!all_finite(task.grad))
        throw TrainAbort("non-finite task gradient", iteration_);
      g_final = std::move(task.grad);
    }
    clip_by_norm(g_final, cfg_.max_grad_norm);
    ParamVector params = a.policy.flatten();
    try {
      apply_gradient(params, g_final, a.pi_opt);
    } catch (const TrainAbort& e) {
      throw TrainAbort(e.reason, iteration_);
    }
    if (!all_finite(params))
      throw TrainAbort("non-finite policy parameters after update", iteration_);
    a.policy.unflatten(params);

    kl_sum += task.kl;
    ent_sum += task.entropy;
    ratio_sum += task.ratio_mean;
    ratio_max = std::max(ratio_max, task.ratio_max);
    clip_sum += task.clip_fraction;
    ++diag_cnt;
  };

  for (int e = 0; e < cfg_.sgd_iters; ++e) {
    if (cfg_.use_ce) {
      std::vector<int> perm(shared.size());
      std::iota(perm.begin(), perm.end(), 0);
      team_rng_.shuffle(perm);
      for (int start = 0; start < static_cast<int>(perm.size());
           start += cfg_.minibatch) {
        const int stop =
            std::min<int>(start + cfg_.minibatch, static_cast<int>(perm.size()));
        const std::vector<int> idx(perm.begin() + start, perm.begin() + stop);
        for (int k = 0; k < K; ++k) update_agent(k, shared, idx, w_shared);
      }
    } else {
      for (int k = 0; k < K; ++k) {
        std::vector<int> perm(own[k].size());
        std::iota(perm.begin(), perm.end(), 0);
        team_rng_.shuffle(perm);
        for (int start = 0; start < static_cast<int>(perm.size());
             start += cfg_.minibatch) {
          const int stop = std::min<int>(start + cfg_.minibatch,
                                         static_cast<int>(perm.size()));
          const std::vector<int> idx(perm.begin() + start, perm.begin() + stop);
          update_agent(k, own[k], idx, w_own[k]);
        }
      }
    }
  }

  // (6) value regression on each agent's own rollouts
  double vloss_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    OnPolicyAgent& a = agents_[k];
    std::vector<int> all_idx(own[k].size());
    std::iota(all_idx.begin(), all_idx.end(), 0);
    double vloss = 0.0;
    for (int it = 0; it < cfg_.vf_train_iters; ++it) {
      ParamVector g;
      vloss = value_loss(a.value, own[k], all_idx, &g);
      if (!std::isfinite(vloss))
        throw TrainAbort("non-finite value loss", iteration_);
      for (double& x : g) x = -x;
      clip_by_norm(g, cfg_.max_grad_norm);
      ParamVector p = a.value.flatten();
      try {
        apply_gradient(p, g, a.vf_opt);
      } catch (const TrainAbort& e) {
        throw TrainAbort(e.reason, iteration_);
      }
      a.value.unflatten(p);
    }
    vloss_sum += vloss;
  }
  m.value_loss = vloss_sum / K;

  // (7) target maintenance
  if (cfg_.use_du) {
    for (int k = 0; k < K; ++k)
      polyak_update(targets_.params[k], agents_[k].policy.flatten(), cfg_.tau);
  } else {
    sync_targets_to_live();
  }

  // (8) diagnostics
  m.grad_cosine = cos_cnt > 0 ? cos_sum / cos_cnt : 0.0;
  if (diag_cnt > 0) {
    m.kl = kl_sum / diag_cnt;
    m.entropy = ent_sum / diag_cnt;
    m.ratio_mean = ratio_sum / diag_cnt;
    m.ratio_max = ratio_max;
    m.clip_fraction = clip_sum / diag_cnt;
  }
  ++iteration_;
  return m;
}

}  // namespace dice
