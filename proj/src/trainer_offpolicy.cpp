#include "dice/trainer_offpolicy.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"

namespace dice {

void OffPolicyConfig::validate() const {
  if (K < 1) throw ConfigError("offpolicy: K must be >= 1");
  if (N < K) throw ConfigError("offpolicy: N must be >= K");
  if (buffer_capacity < N)
    throw ConfigError("offpolicy: buffer_capacity must be >= N");
  if (warmup_steps < 0) throw ConfigError("offpolicy: warmup_steps must be >= 0");
  if (steps_per_iteration < 1)
    throw ConfigError("offpolicy: steps_per_iteration must be >= 1");
  if (updates_per_step < 1)
    throw ConfigError("offpolicy: updates_per_step must be >= 1");
  if (gamma < 0.0 || gamma > 1.0)
    throw ConfigError("offpolicy: gamma must be in [0, 1]");
  if (tau <= 0.0 || tau > 1.0)
    throw ConfigError("offpolicy: tau must be in (0, 1]");
  if (lr <= 0.0) throw ConfigError("offpolicy: lr must be > 0");
  if (alpha_ent <= 0.0) throw ConfigError("offpolicy: alpha_ent must be > 0");
  if (hidden < 1) throw ConfigError("offpolicy: hidden must be >= 1");
}

ReplayBuffer::ReplayBuffer(int capacity, int owner, const EnvSpec& spec)
    : capacity_(capacity), owner_(owner), spec_(spec) {
  if (capacity < 1) throw ConfigError("replay buffer: capacity must be >= 1");
  data_.reserve(capacity);
}

void ReplayBuffer::push(Transition tr) {
  if (size() < capacity_) {
    data_.push_back(std::move(tr));
  } else {
    data_[head_] = std::move(tr);
    head_ = (head_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::at(int i) const {
  if (i < 0 || i >= size()) throw ConfigError("replay buffer: index out of range");
  if (size() < capacity_) return data_[i];
  return data_[(head_ + i) % capacity_];
}

const Transition& ReplayBuffer::sample(Rng& rng) const {
  if (data_.empty()) throw ConfigError("replay buffer: sample from empty buffer");
  return data_[rng.uniform_int(size())];
}

TrajectoryBatch sample_share_batch(const std::vector<ReplayBuffer>& buffers,
                                   int N, Rng& rng) {
  if (buffers.empty()) throw ConfigError("sample_share_batch: no buffers");
  const EnvSpec& es = buffers[0].env_spec();
  TrajectoryBatch b;
  b.obs_dim = es.obs_dim;
  b.action_dim = es.action_dim;
  b.kind = es.kind;
  b.t.reserve(N);
  const std::vector<int> counts =
      split_counts(N, static_cast<int>(buffers.size()));
  for (std::size_t j = 0; j < buffers.size(); ++j) {
    if (buffers[j].size() < counts[j])
      throw ConfigError("sample_share_batch: underfilled buffer");
    for (int c = 0; c < counts[j]; ++c) b.t.push_back(buffers[j].sample(rng));
  }
  return b;
}

TrajectoryBatch sample_share_buffer(const std::vector<ReplayBuffer>& buffers,
                                    int agent_k, int N, Rng& rng) {
  (void)agent_k;  // composition is owner-uniform for every agent
  return sample_share_batch(buffers, N, rng);
}

std::vector<double> critic_input(const std::vector<double>& obs,
                                 const std::vector<double>& act) {
  std::vector<double> x;
  x.reserve(obs.size() + act.size());
  x.insert(x.end(), obs.begin(), obs.end());
  x.insert(x.end(), act.begin(), act.end());
  return x;
}

namespace {

// Row-major [batch][obs+action] critic inputs.
std::vector<double> critic_inputs_next(const TrajectoryBatch& batch,
                                       const std::vector<std::vector<double>>&
                                           next_actions) {
  const std::size_t od = batch.obs_dim;
  const std::size_t ad = next_actions.empty() ? 0 : next_actions[0].size();
  std::vector<double> xs(batch.t.size() * (od + ad));
  for (std::size_t i = 0; i < batch.t.size(); ++i) {
    std::copy(batch.t[i].next_obs.begin(), batch.t[i].next_obs.end(),
              xs.begin() + i * (od + ad));
    std::copy(next_actions[i].begin(), next_actions[i].end(),
              xs.begin() + i * (od + ad) + od);
  }
  return xs;
}

std::vector<double> critic_inputs_stored(const TrajectoryBatch& batch) {
  const std::size_t od = batch.obs_dim;
  const std::size_t ad = batch.t.empty() ? 0 : batch.t[0].action.cont.size();
  std::vector<double> xs(batch.t.size() * (od + ad));
  for (std::size_t i = 0; i < batch.t.size(); ++i) {
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(),
              xs.begin() + i * (od + ad));
    std::copy(batch.t[i].action.cont.begin(), batch.t[i].action.cont.end(),
              xs.begin() + i * (od + ad) + od);
  }
  return xs;
}

}  // namespace

std::vector<double> sac_critic_targets(
    const Mlp& q1_target, const Mlp& q2_target, const TrajectoryBatch& batch,
    const std::vector<std::vector<double>>& next_actions,
    const std::vector<double>& next_log_probs, double gamma, double alpha) {
  const int m = batch.size();
  if (static_cast<int>(next_actions.size()) != m ||
      static_cast<int>(next_log_probs.size()) != m)
    throw ConfigError("sac_critic_targets: next-action rows must match batch");
  const std::vector<double> xs = critic_inputs_next(batch, next_actions);
  MlpCache c1, c2;
  q1_target.forward_batch(xs, m, c1);
  q2_target.forward_batch(xs, m, c2);
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i) {
    const double qmin = std::min(c1.out[i], c2.out[i]);
    const double cont = batch.t[i].done ? 0.0 : 1.0;
    y[i] = batch.t[i].reward +
           gamma * cont * (qmin - alpha * next_log_probs[i]);
  }
  return y;
}

std::vector<double> sac_diversity_targets(
    const Mlp& qd_target, const TrajectoryBatch& batch,
    const std::vector<double>& r_d,
    const std::vector<std::vector<double>>& next_actions, double gamma) {
  const int m = batch.size();
  if (static_cast<int>(r_d.size()) != m ||
      static_cast<int>(next_actions.size()) != m)
    throw ConfigError("sac_diversity_targets: row mismatch");
  const std::vector<double> xs = critic_inputs_next(batch, next_actions);
  MlpCache c;
  qd_target.forward_batch(xs, m, c);
  std::vector<double> y(m);
  for (int i = 0; i < m; ++i) {
    const double cont = batch.t[i].done ? 0.0 : 1.0;
    y[i] = r_d[i] + gamma * cont * c.out[i];
  }
  return y;
}

double sac_q_loss(const Mlp& q, const TrajectoryBatch& batch,
                  const std::vector<double>& y, ParamVector* grad) {
  const int m = batch.size();
  if (m == 0) throw ConfigError("sac_q_loss: empty batch");
  if (static_cast<int>(y.size()) != m)
    throw ConfigError("sac_q_loss: target rows must match batch");
  const std::vector<double> xs = critic_inputs_stored(batch);
  MlpCache cache;
  q.forward_batch(xs, m, cache);
  double loss = 0.0;
  std::vector<double> upstream(m);
  for (int i = 0; i < m; ++i) {
    const double err = cache.out[i] - y[i];
    loss += 0.5 * err * err;
    upstream[i] = err / m;
  }
  loss /= m;
  if (grad != nullptr) *grad = q.backward(cache, upstream);
  return loss;
}

ObjectiveResult sac_actor_objective(const Policy& pi, const Mlp& q1,
                                    const Mlp& q2,
                                    const TrajectoryBatch& batch,
                                    const std::vector<std::vector<double>>& eps,
                                    double alpha) {
  if (pi.kind() != HeadKind::Gaussian)
    throw ConfigError("sac actor: Gaussian policies only");
  const int m = batch.size();
  if (static_cast<int>(eps.size()) != m)
    throw ConfigError("sac actor: noise rows must match batch");
  const int ad = pi.action_dim();
  const int od = batch.obs_dim;

  std::vector<double> xs(static_cast<std::size_t>(m) * od);
  for (int i = 0; i < m; ++i)
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(),
              xs.begin() + static_cast<std::size_t>(i) * od);
  MlpCache cpi;
  pi.net().forward_batch(xs, m, cpi);

  const std::vector<double> ls = pi.log_std();
  std::vector<double> sd(ad);
  for (int d = 0; d < ad; ++d) sd[d] = std::exp(ls[d]);

  constexpr double kLog2Pi = 1.8378770664093453;
  std::vector<double> qx(static_cast<std::size_t>(m) * (od + ad));
  for (int i = 0; i < m; ++i) {
    double* row = &qx[static_cast<std::size_t>(i) * (od + ad)];
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(), row);
    for (int d = 0; d < ad; ++d)
      row[od + d] = cpi.out[static_cast<std::size_t>(i) * ad + d] +
                    sd[d] * eps[i][d];
  }
  MlpCache c1, c2;
  q1.forward_batch(qx, m, c1);
  q2.forward_batch(qx, m, c2);

  ObjectiveResult res;
  double obj = 0.0;
  double lp_sum = 0.0;
  std::vector<double> up1(m, 0.0), up2(m, 0.0);
  for (int i = 0; i < m; ++i) {
    if (c1.out[i] <= c2.out[i]) {
      obj += c1.out[i] / m;
      up1[i] = 1.0 / m;
    } else {
      obj += c2.out[i] / m;
      up2[i] = 1.0 / m;
    }
    double lp = 0.0;
    for (int d = 0; d < ad; ++d)
      lp += -0.5 * eps[i][d] * eps[i][d] - ls[d] - 0.5 * kLog2Pi;
    lp_sum += lp;
    obj -= alpha * lp / m;
  }

  std::vector<double> ig1, ig2;
  q1.backward(c1, up1, &ig1);
  q2.backward(c2, up2, &ig2);

  std::vector<double> up_pi(static_cast<std::size_t>(m) * ad, 0.0);
  std::vector<double> ls_grad(ad, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d < ad; ++d) {
      const double da = ig1[static_cast<std::size_t>(i) * (od + ad) + od + d] +
                        ig2[static_cast<std::size_t>(i) * (od + ad) + od + d];
      up_pi[static_cast<std::size_t>(i) * ad + d] = da;
      ls_grad[d] += da * sd[d] * eps[i][d] + alpha / m;
    }
  }
  for (int d = 0; d < ad; ++d) ls_grad[d] *= pi.log_std_grad_mask(d);

  res.objective = obj;
  res.grad = pi.net().backward(cpi, up_pi);
  res.grad.insert(res.grad.end(), ls_grad.begin(), ls_grad.end());
  res.entropy = -lp_sum / m;
  return res;
}

ObjectiveResult sac_diversity_ascent_objective(
    const Policy& pi, const Mlp& qd, const TrajectoryBatch& batch,
    const std::vector<std::vector<double>>& eps) {
  if (pi.kind() != HeadKind::Gaussian)
    throw ConfigError("sac diversity: Gaussian policies only");
  const int m = batch.size();
  if (static_cast<int>(eps.size()) != m)
    throw ConfigError("sac diversity: noise rows must match batch");
  const int ad = pi.action_dim();
  const int od = batch.obs_dim;

  std::vector<double> xs(static_cast<std::size_t>(m) * od);
  for (int i = 0; i < m; ++i)
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(),
              xs.begin() + static_cast<std::size_t>(i) * od);
  MlpCache cpi;
  pi.net().forward_batch(xs, m, cpi);

  const std::vector<double> ls = pi.log_std();
  std::vector<double> sd(ad);
  for (int d = 0; d < ad; ++d) sd[d] = std::exp(ls[d]);

  std::vector<double> qx(static_cast<std::size_t>(m) * (od + ad));
  for (int i = 0; i < m; ++i) {
    double* row = &qx[static_cast<std::size_t>(i) * (od + ad)];
    std::copy(batch.t[i].obs.begin(), batch.t[i].obs.end(), row);
    for (int d = 0; d < ad; ++d)
      row[od + d] = cpi.out[static_cast<std::size_t>(i) * ad + d] +
                    sd[d] * eps[i][d];
  }
  MlpCache cq;
  qd.forward_batch(qx, m, cq);

  ObjectiveResult res;
  double obj = 0.0;
  std::vector<double> up(m, 1.0 / m);
  for (int i = 0; i < m; ++i) obj += cq.out[i] / m;

  std::vector<double> ig;
  qd.backward(cq, up, &ig);

  std::vector<double> up_pi(static_cast<std::size_t>(m) * ad, 0.0);
  std::vector<double> ls_grad(ad, 0.0);
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d < ad; ++d) {
      const double da = ig[static_cast<std::size_t>(i) * (od + ad) + od + d];
      up_pi[static_cast<std::size_t>(i) * ad + d] = da;
      ls_grad[d] += da * sd[d] * eps[i][d];
    }
  }
  for (int d = 0; d < ad; ++d) ls_grad[d] *= pi.log_std_grad_mask(d);

  res.objective = obj;
  res.grad = pi.net().backward(cpi, up_pi);
  res.grad.insert(res.grad.end(), ls_grad.begin(), ls_grad.end());
  return res;
}

double SacAgent::alpha() const { return std::exp(log_alpha); }

OffPolicyTrainer::OffPolicyTrainer(const OffPolicyConfig& cfg,
                                   const Env& env_prototype,
                                   std::uint64_t master_seed)
    : cfg_(cfg),
      sample_rng_(derive_seed(master_seed, "sample", 0)),
      update_rng_(derive_seed(master_seed, "update", 0)) {
  cfg_.validate();
  const EnvSpec& spec = env_prototype.spec();
  if (spec.kind != ActionKind::Continuous)
    throw ConfigError("offpolicy: continuous action spaces only");
  policy_targets_.tau = cfg_.tau;
  agents_.reserve(cfg_.K);
  for (int k = 0; k < cfg_.K; ++k) {
    Rng init_rng(derive_seed(master_seed, "init", k));
    Policy p(spec.obs_dim, cfg_.hidden, spec.action_dim, HeadKind::Gaussian,
             cfg_.log_std_init);
    p.init(init_rng);
    const int qin = spec.obs_dim + spec.action_dim;
    Mlp c1(qin, cfg_.hidden, 1), c2(qin, cfg_.hidden, 1), d(qin, cfg_.hidden, 1);
    c1.init(init_rng);
    c2.init(init_rng);
    d.init(init_rng);
    agents_.emplace_back(std::move(p), std::move(c1), std::move(c2),
                         std::move(d), env_prototype.clone(),
                         derive_seed(master_seed, "agent", k));
    SacAgent& a = agents_.back();
    a.log_alpha = std::log(cfg_.alpha_ent);
    for (OptimizerState* o :
         {&a.pi_opt, &a.q1_opt, &a.q2_opt, &a.qd_opt, &a.alpha_opt}) {
      o->lr = cfg_.lr;
      o->adam = cfg_.adam;
    }
    buffers_.emplace_back(cfg_.buffer_capacity, k, spec);
    policy_targets_.params.push_back(a.policy.flatten());
  }
}

void OffPolicyTrainer::sync_targets_to_live() {
  for (int k = 0; k < cfg_.K; ++k)
    policy_targets_.params[k] = agents_[k].policy.flatten();
}

void OffPolicyTrainer::update_agent(int k, const TrajectoryBatch& batch) {
  SacAgent& a = agents_[k];
  const int m = batch.size();
  const int ad = a.policy.action_dim();
  const double alpha = a.alpha();

  std::vector<std::vector<double>> next_act(m);
  std::vector<double> next_lp(m);
  for (int i = 0; i < m; ++i) {
    double lp = 0.0;
    Action act = a.policy.sample(batch.t[i].next_obs, update_rng_, &lp);
    next_act[i] = std::move(act.cont);
    next_lp[i] = lp;
  }

  // Twin-critic regression.
  const std::vector<double> y = sac_critic_targets(
      a.q1_target, a.q2_target, batch, next_act, next_lp, cfg_.gamma, alpha);
  for (double v : y)
    if (!std::isfinite(v)) throw TrainAbort("non-finite TD target", iteration_);
  const std::pair<Mlp*, OptimizerState*> critics[] = {{&a.q1, &a.q1_opt},
                                                      {&a.q2, &a.q2_opt}};
  for (auto [q, opt] : critics) {
    ParamVector g;
    const double loss = sac_q_loss(*q, batch, y, &g);
    if (!std::isfinite(loss))
      throw TrainAbort("non-finite critic loss", iteration_);
    for (double& x : g) x = -x;
    clip_by_norm(g, cfg_.max_grad_norm);
    ParamVector p = q->flatten();
    try {
      apply_gradient(p, g, *opt);
    } catch (const TrainAbort& e) {
      throw TrainAbort(e.reason, iteration_);
    }
    q->unflatten(p);
    acc_qloss_ += loss / 2.0;
  }

  // Diversity critic regression against current delayed targets.
  if (cfg_.use_dr) {
    const std::vector<Policy> target_policies =
        unflatten_targets(policy_targets_, a.policy);
    DiversityOptions dopts;
    dopts.exclude_self = cfg_.exclude_self;
    const std::vector<double> r_d =
        diversity_rewards(a.policy, target_policies, k, batch, dopts);
    double rd_sum = 0.0;
    for (double v : r_d) {
      if (!std::isfinite(v))
        throw TrainAbort("non-finite diversity reward", iteration_);
      rd_sum += v;
    }
    acc_div_ += rd_sum / m;
    const std::vector<double> yd =
        sac_diversity_targets(a.qd_target, batch, r_d, next_act, cfg_.gamma);
    ParamVector g;
    const double loss = sac_q_loss(a.qd, batch, yd, &g);
    if (!std::isfinite(loss))
      throw TrainAbort("non-finite diversity-critic loss", iteration_);
    for (double& x : g) x = -x;
    clip_by_norm(g, cfg_.max_grad_norm);
    ParamVector p = a.qd.flatten();
    try {
      apply_gradient(p, g, a.qd_opt);
    } catch (const TrainAbort& e) {
      throw TrainAbort(e.reason, iteration_);
    }
    a.qd.unflatten(p);
  }

  // Actor step with gradient fusion.
  std::vector<std::vector<double>> eps(m, std::vector<double>(ad));
  for (int i = 0; i < m; ++i)
    for (int d = 0; d < ad; ++d) eps[i][d] = update_rng_.normal();
  ObjectiveResult task = sac_actor_objective(a.policy, a.q1, a.q2, batch, eps,
                                             alpha);
  if (!std::isfinite(task.objective))
    throw TrainAbort("non-finite actor objective", iteration_);
  ParamVector g_final;
  if (cfg_.use_dr) {
    ObjectiveResult div =
        sac_diversity_ascent_objective(a.policy, a.qd, batch, eps);
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
    acc_cosine_ += fr.cosine;
    ++acc_cos_cnt_;
  } else {
    if (!all_finite(task.grad))
      throw TrainAbort("non-finite actor gradient", iteration_);
    g_final = std::move(task.grad);
  }
  clip_by_norm(g_final, cfg_.max_grad_norm);
  ParamVector p = a.policy.flatten();
  try {
    apply_gradient(p, g_final, a.pi_opt);
  } catch (const TrainAbort& e) {
    throw TrainAbort(e.reason, iteration_);
  }
  if (!all_finite(p))
    throw TrainAbort("non-finite policy parameters after update", iteration_);
  a.policy.unflatten(p);

  // Entropy temperature.
  if (cfg_.auto_alpha) {
    const double h_target =
        cfg_.target_entropy != 0.0 ? cfg_.target_entropy : -ad;
    double mean_lp = 0.0;
    const std::vector<double> ls = a.policy.log_std();
    constexpr double kLog2Pi = 1.8378770664093453;
    for (int i = 0; i < m; ++i)
      for (int d = 0; d < ad; ++d)
        mean_lp += -0.5 * eps[i][d] * eps[i][d] - ls[d] - 0.5 * kLog2Pi;
    mean_lp /= m;
    ParamVector la{a.log_alpha};
    const ParamVector ga{a.alpha() * (mean_lp + h_target)};
    apply_gradient(la, ga, a.alpha_opt);
    a.log_alpha = la[0];
  }

  // Soft target updates.
  ParamVector qt = a.q1_target.flatten();
  polyak_update(qt, a.q1.flatten(), cfg_.tau);
  a.q1_target.unflatten(qt);
  qt = a.q2_target.flatten();
  polyak_update(qt, a.q2.flatten(), cfg_.tau);
  a.q2_target.unflatten(qt);
  if (cfg_.use_dr) {
    qt = a.qd_target.flatten();
    polyak_update(qt, a.qd.flatten(), cfg_.tau);
    a.qd_target.unflatten(qt);
  }
  if (cfg_.use_du) {
    polyak_update(policy_targets_.params[k], a.policy.flatten(), cfg_.tau);
  } else {
    policy_targets_.params[k] = a.policy.flatten();
  }

  ++acc_updates_;
}

void OffPolicyTrainer::update_round() {
  if (cfg_.mode == CeMode::ShareBatch) {
    const TrajectoryBatch b = sample_share_batch(buffers_, cfg_.N, sample_rng_);
    for (int k = 0; k < cfg_.K; ++k) update_agent(k, b);
  } else if (cfg_.mode == CeMode::ShareBuffer) {
    for (int k = 0; k < cfg_.K; ++k) {
      const TrajectoryBatch b =
          sample_share_buffer(buffers_, k, cfg_.N, sample_rng_);
      update_agent(k, b);
    }
  } else {
    for (int k = 0; k < cfg_.K; ++k) {
      const EnvSpec& es = buffers_[k].env_spec();
      TrajectoryBatch b;
      b.obs_dim = es.obs_dim;
      b.action_dim = es.action_dim;
      b.kind = es.kind;
      b.t.reserve(cfg_.N);
      for (int c = 0; c < cfg_.N; ++c)
        b.t.push_back(buffers_[k].sample(sample_rng_));
      update_agent(k, b);
    }
  }
}

IterationMetrics OffPolicyTrainer::train_iteration() {
  const int K = cfg_.K;
  IterationMetrics m;
  m.iteration = iteration_;
  m.agent_return_mean.resize(K);
  m.agent_return_max.resize(K);
  acc_entropy_ = acc_cosine_ = acc_qloss_ = acc_div_ = 0.0;
  acc_updates_ = acc_cos_cnt_ = 0;

  for (int k = 0; k < K; ++k) {
    if (!all_finite(agents_[k].policy.flatten()))
      throw TrainAbort("non-finite policy parameters", iteration_);
  }

  std::vector<std::vector<double>> completed(K);
  const std::vector<int> need = split_counts(cfg_.N, K);

  for (int s = 0; s < cfg_.steps_per_iteration; ++s) {
    for (int k = 0; k < K; ++k) {
      SacAgent& a = agents_[k];
      const EnvSpec& es = a.env->spec();
      if (a.needs_reset) {
        a.last_obs = a.env->reset(a.rng.next_u64());
        a.needs_reset = false;
        a.episode_reward = 0.0;
      }
      Transition tr;
      tr.obs = a.last_obs;
      tr.owner = k;
      if (env_steps_ < cfg_.warmup_steps) {
        tr.action.cont.resize(es.action_dim);
        for (int d = 0; d < es.action_dim; ++d)
          tr.action.cont[d] = a.rng.uniform(es.action_low, es.action_high);
      } else {
        tr.action = a.policy.sample(a.last_obs, a.rng, &tr.behavior_log_prob);
      }
      StepResult sr = a.env->step(tr.action);
      tr.reward = sr.reward;
      tr.done = sr.done;
      tr.next_obs = sr.next_obs;
      a.episode_reward += sr.reward;
      if (sr.done) {
        completed[k].push_back(a.episode_reward);
        a.needs_reset = true;
      } else {
        a.last_obs = sr.next_obs;
      }
      buffers_[k].push(std::move(tr));
      ++env_steps_;
    }
    bool ready = env_steps_ >= cfg_.warmup_steps;
    for (int j = 0; j < K && ready; ++j) {
      const int want = cfg_.mode == CeMode::Independent ? cfg_.N : need[j];
      if (buffers_[j].size() < want) ready = false;
    }
    if (ready) {
      for (int u = 0; u < cfg_.updates_per_step; ++u) update_round();
    }
  }

  for (int k = 0; k < K; ++k) {
    SacAgent& a = agents_[k];
    if (!completed[k].empty()) {
      double sum = 0.0, mx = completed[k][0];
      for (double rv : completed[k]) {
        sum += rv;
        mx = std::max(mx, rv);
      }
      a.last_return_mean = sum / completed[k].size();
      a.last_return_max = mx;
    }
    m.agent_return_mean[k] = a.last_return_mean;
    m.agent_return_max[k] = a.last_return_max;
  }
  m.env_steps = env_steps_;
  m.best_return =
      *std::max_element(m.agent_return_mean.begin(), m.agent_return_mean.end());

  double ent = 0.0;
  for (int k = 0; k < K; ++k)
    ent += gaussian_entropy(agents_[k].policy.log_std());
  m.entropy = ent / K;
  m.grad_cosine = acc_cos_cnt_ > 0 ? acc_cosine_ / acc_cos_cnt_ : 0.0;
  m.value_loss = acc_updates_ > 0 ? acc_qloss_ / acc_updates_ : 0.0;
  m.diversity_mean = acc_updates_ > 0 ? acc_div_ / acc_updates_ : 0.0;
  ++iteration_;
  return m;
}

}  // namespace dice
