#ifndef DICE_VEC_HPP_
#define DICE_VEC_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "dice/rng.hpp"

namespace dice {

// Flattened parameter / gradient vector over all network weights.
using ParamVector = std::vector<double>;

inline double dot(const ParamVector& a, const ParamVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const ParamVector& a) { return std::sqrt(dot(a, a)); }

// y += alpha * x
inline void axpy(double alpha, const ParamVector& x, ParamVector& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(ParamVector& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline bool all_finite(const ParamVector& x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

// Content hash of a parameter vector; used to record advantage provenance.
inline std::uint64_t param_hash(const ParamVector& x) {
  return fnv1a(x.data(), x.size() * sizeof(double));
}

}  // namespace dice

#endif  // DICE_VEC_HPP_
