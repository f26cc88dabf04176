#include "dice/optimizer.hpp"

#include <cmath>

#include "dice/errors.hpp"

namespace dice {

void apply_gradient(ParamVector& params, const ParamVector& g,
                    OptimizerState& opt) {
  if (g.size() != params.size())
    throw ConfigError("apply_gradient: dimension mismatch");
  if (!all_finite(g))
    throw TrainAbort("non-finite gradient component", opt.step);

  opt.step += 1;
  if (!opt.adam) {
    axpy(opt.lr, g, params);
    return;
  }
  if (opt.m.size() != g.size()) {
    opt.m.assign(g.size(), 0.0);
    opt.v.assign(g.size(), 0.0);
  }
  const double b1t = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.step));
  const double b2t = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.step));
  for (std::size_t i = 0; i < g.size(); ++i) {
    opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * g[i];
    opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * g[i] * g[i];
    double mh = opt.m[i] / b1t;
    double vh = opt.v[i] / b2t;
    params[i] += opt.lr * mh / (std::sqrt(vh) + opt.eps);
  }
}

void clip_by_norm(ParamVector& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double n = norm(g);
  if (n > max_norm) scale(g, max_norm / n);
}

}  // namespace dice
