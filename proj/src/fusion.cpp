#include "dice/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "dice/errors.hpp"

namespace dice {

namespace {
constexpr double kOpposedEps = 1e-12;
}

ParamVector normalize(const ParamVector& x, bool* ok) {
  const double n = norm(x);
  if (n == 0.0) {
    if (ok != nullptr) *ok = false;
    return ParamVector(x.size(), 0.0);
  }
  if (ok != nullptr) *ok = true;
  ParamVector out = x;
  scale(out, 1.0 / n);
  return out;
}

ParamVector bisector(const ParamVector& g_t, const ParamVector& g_d) {
  ParamVector zt = normalize(g_t);
  ParamVector zd = normalize(g_d);
  for (size_t i = 0; i < zt.size(); ++i) zt[i] += zd[i];
  return normalize(zt);
}

FusionResult fuse(const ParamVector& g_t, const ParamVector& g_d,
                  const FusionOptions& opts) {
  if (g_t.size() != g_d.size()) {
    throw ConfigError("fuse: gradient size mismatch");
  }
  if (!all_finite(g_t) || !all_finite(g_d)) {
    throw TrainAbort("fuse: non-finite gradient input", -1);
  }

  FusionResult r;
  const double nt = norm(g_t);
  const double nd = norm(g_d);

  if (nd == 0.0) {
    r.degenerate_div = true;
    r.g_final = g_t;
    if (nt == 0.0) r.degenerate_task = true;
    return r;
  }
  if (nt == 0.0) {
    r.degenerate_task = true;
    r.g_final = ParamVector(g_t.size(), 0.0);
    return r;
  }

  r.cosine = dot(g_t, g_d) / (nt * nd);

  ParamVector sum(g_t.size());
  for (size_t i = 0; i < sum.size(); ++i) {
    sum[i] = g_t[i] / nt + g_d[i] / nd;
  }
  const double ns = norm(sum);
  if (ns < kOpposedEps) {
    r.opposed = true;
    r.g_final = g_t;
    return r;
  }

  r.d = sum;
  scale(r.d, 1.0 / ns);
  r.proj_task = dot(g_t, r.d);
  r.proj_div = dot(g_d, r.d);

  double m_div = r.proj_div;
  if (m_div > r.proj_task) {
    m_div = r.proj_task;
    r.clipped = true;
  }
  double mag = 0.5 * (r.proj_task + m_div);
  if (opts.floor_at_zero && mag < 0.0) mag = 0.0;

  r.g_final = r.d;
  scale(r.g_final, mag);
  return r;
}

}  // namespace dice
