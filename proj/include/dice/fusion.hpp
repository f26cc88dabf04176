#ifndef DICE_FUSION_HPP_
#define DICE_FUSION_HPP_

#include "dice/vec.hpp"

namespace dice {

// Outcome of fusing a task gradient with a diversity gradient.
struct FusionResult {
  ParamVector g_final;
  ParamVector d;            // unit bisector (empty on degenerate paths)
  double proj_task = 0.0;   // g_t . d
  double proj_div = 0.0;    // g_d . d
  double cosine = 0.0;      // cos angle(g_t, g_d); 0 when undefined
  bool clipped = false;     // proj_div > proj_task
  bool degenerate_task = false;  // ||g_t|| = 0
  bool degenerate_div = false;   // ||g_d|| = 0
  bool opposed = false;          // Z(g_t) + Z(g_d) vanished
};

// x / ||x||_2. Signals a zero input through *ok instead of dividing by zero.
ParamVector normalize(const ParamVector& x, bool* ok = nullptr);

// Unit angular bisector Z(Z(g_t) + Z(g_d)). Preconditions: both non-zero and
// not exactly opposed (callers go through fuse(), which handles those).
ParamVector bisector(const ParamVector& g_t, const ParamVector& g_d);

struct FusionOptions {
  // Floor the fused magnitude at zero instead of letting a negative
  // diversity projection shrink it below zero.
  bool floor_at_zero = false;
};

// Feasible-direction fusion:
//   d = Z(Z(g_t) + Z(g_d)),  g_final = (g_t.d + min(g_d.d, g_t.d)) / 2 * d.
// Degenerate inputs: zero diversity gradient returns g_t unchanged; zero task
// gradient returns the zero vector (diversity alone never drives an update);
// exactly opposed gradients fall back to g_t with the `opposed` flag set.
// Non-finite inputs are rejected.
FusionResult fuse(const ParamVector& g_t, const ParamVector& g_d,
                  const FusionOptions& opts = {});

}  // namespace dice

#endif  // DICE_FUSION_HPP_
