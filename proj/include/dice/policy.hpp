#ifndef DICE_POLICY_HPP_
#define DICE_POLICY_HPP_

#include <vector>

#include "dice/mlp.hpp"
#include "dice/rng.hpp"
#include "dice/vec.hpp"

namespace dice {

enum class HeadKind { Gaussian, Categorical };

// One action: continuous vector OR discrete index, selected by the head.
struct Action {
  std::vector<double> cont;
  int disc = 0;
};

// Policy network: two-hidden-layer body producing the action mean (Gaussian)
// or logits (categorical). Gaussian policies carry state-independent log-std
// parameters, one per action dimension, clamped to [log_std_min, log_std_max]
// wherever they are used. Flatten order: body params, then log-std.
class Policy {
 public:
  Policy() = default;
  Policy(int obs_dim, int hidden, int action_dim, HeadKind kind,
         double log_std_init = 0.0, double log_std_min = -10.0,
         double log_std_max = 2.0);

  void init(Rng& rng);

  HeadKind kind() const { return kind_; }
  int obs_dim() const { return net_.in_dim(); }
  int action_dim() const { return net_.out_dim(); }
  int n_params() const;

  const Mlp& net() const { return net_; }
  Mlp& net() { return net_; }

  // Effective (clamped) log-std vector.
  std::vector<double> log_std() const;
  const std::vector<double>& raw_log_std() const { return log_std_; }
  std::vector<double>& raw_log_std() { return log_std_; }

  // 1 if the raw log-std is inside the clamp interval (gradient passes), else 0.
  double log_std_grad_mask(int d) const;

  // Action mean (Gaussian) or logits (categorical) for one observation.
  std::vector<double> head(const std::vector<double>& obs) const;

  // Sample an action and its log-probability. Gaussian: mean + std * eps with
  // eps ~ N(0, I) from rng. Categorical: inverse-CDF on one uniform.
  Action sample(const std::vector<double>& obs, Rng& rng,
                double* log_prob = nullptr,
                std::vector<double>* head_out = nullptr) const;

  double log_prob(const std::vector<double>& head_out,
                  const Action& action) const;

  double entropy(const std::vector<double>& head_out) const;

  ParamVector flatten() const;
  void unflatten(const ParamVector& flat);

 private:
  Mlp net_;
  HeadKind kind_ = HeadKind::Gaussian;
  std::vector<double> log_std_;  // raw, Gaussian only
  double log_std_min_ = -10.0, log_std_max_ = 2.0;
};

}  // namespace dice

#endif  // DICE_POLICY_HPP_
