#ifndef DICE_DIVERSITY_HPP_
#define DICE_DIVERSITY_HPP_

#include <vector>

#include "dice/mlp.hpp"
#include "dice/optimizer.hpp"
#include "dice/policy.hpp"
#include "dice/rollout.hpp"
#include "dice/vec.hpp"

namespace dice {

// Delayed-update reference policies, one per agent, updated only by Polyak
// averaging: theta_target <- (1 - tau) * theta_target + tau * theta_latest.
struct TargetPolicySet {
  std::vector<ParamVector> params;
  double tau = 0.005;
};

void polyak_update(ParamVector& target, const ParamVector& latest, double tau);

struct DiversityOptions {
  // Compare against all K targets (own target included) and divide by K.
  // With exclude_self the trainee's own target is skipped and the divisor
  // becomes K-1 (for K = 1 the reward is then 0).
  bool exclude_self = false;
  // Divide the squared distance by the action dimension.
  bool per_dim_mean = false;
};

// Behavioral distance of agent k's live policy from the team's reference
// policies at one observation: the mean squared L2 distance between action
// means (Gaussian) or action-probability vectors (categorical). Always >= 0.
double diversity_reward(const Policy& live, const std::vector<Policy>& targets,
                        int self_index, const std::vector<double>& obs,
                        const DiversityOptions& opts = {});

// Per-transition diversity rewards over a whole batch.
std::vector<double> diversity_rewards(const Policy& live,
                                      const std::vector<Policy>& targets,
                                      int self_index,
                                      const TrajectoryBatch& batch,
                                      const DiversityOptions& opts = {});

// Discounted diversity returns: reverse scan of r_d within episode segments.
std::vector<double> diversity_return(const TrajectoryBatch& batch,
                                     const std::vector<double>& r_d,
                                     double gamma);

// Materialize target parameter vectors as forward-capable policies, using
// `arch` as the architecture template.
std::vector<Policy> unflatten_targets(const TargetPolicySet& targets,
                                      const Policy& arch);

// Regress the diversity value network toward R_d targets (full-batch MSE
// descent steps). Returns the final loss.
double fit_dvn(Mlp& dvn, const TrajectoryBatch& batch,
               const std::vector<double>& r_d_returns, int steps,
               OptimizerState& opt);

// GAE over diversity rewards using DVN values; replaces raw R_d in the
// diversity objective when the DVN is enabled.
std::vector<double> diversity_advantages_with_dvn(
    const Mlp& dvn, const TrajectoryBatch& batch,
    const std::vector<double>& r_d, double gamma, double lambda);

}  // namespace dice

#endif  // DICE_DIVERSITY_HPP_
