#ifndef DICE_OPTIMIZER_HPP_
#define DICE_OPTIMIZER_HPP_

#include <cstdint>
#include <vector>

#include "dice/vec.hpp"

namespace dice {

// Gradient-ascent optimizer state. The reference update is plain stochastic
// gradient ascent, theta <- theta + lr * g. With adam=true an
// adaptive-moment variant (ascent form) is used instead.
struct OptimizerState {
  double lr = 1e-4;
  bool adam = false;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::int64_t step = 0;
  ParamVector m, v;  // first/second moment accumulators (adam only)
};

// Ascent step along g. Rejects non-finite gradients (throws TrainAbort with
// the parameters left untouched).
void apply_gradient(ParamVector& params, const ParamVector& g,
                    OptimizerState& opt);

// Rescale g in place so its L2 norm is at most max_norm. No-op when
// max_norm <= 0.
void clip_by_norm(ParamVector& g, double max_norm);

}  // namespace dice

#endif  // DICE_OPTIMIZER_HPP_
