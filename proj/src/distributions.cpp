#include "dice/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dice/errors.hpp"

namespace dice {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
}

double gaussian_log_prob(const std::vector<double>& mean,
                         const std::vector<double>& log_std,
                         const std::vector<double>& action) {
  if (mean.size() != log_std.size() || mean.size() != action.size())
    throw ConfigError("gaussian_log_prob: dimension mismatch");
  double lp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double inv_std = std::exp(-log_std[d]);
    double z = (action[d] - mean[d]) * inv_std;
    lp += -0.5 * z * z - log_std[d] - 0.5 * kLog2Pi;
  }
  return lp;
}

double gaussian_entropy(const std::vector<double>& log_std) {
  double h = 0.0;
  for (double ls : log_std) h += 0.5 * (1.0 + kLog2Pi) + ls;
  return h;
}

double gaussian_kl(const std::vector<double>& mean_b,
                   const std::vector<double>& log_std_b,
                   const std::vector<double>& mean_c,
                   const std::vector<double>& log_std_c) {
  double kl = 0.0;
  for (std::size_t d = 0; d < mean_b.size(); ++d) {
    double var_b = std::exp(2.0 * log_std_b[d]);
    double var_c = std::exp(2.0 * log_std_c[d]);
    double dm = mean_b[d] - mean_c[d];
    kl += log_std_c[d] - log_std_b[d] + (var_b + dm * dm) / (2.0 * var_c) - 0.5;
  }
  return kl;
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

double categorical_log_prob(const std::vector<double>& logits, int action) {
  double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return logits[action] - m - std::log(z);
}

double categorical_entropy(const std::vector<double>& logits) {
  std::vector<double> p = softmax(logits);
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

double categorical_kl(const std::vector<double>& probs_b,
                      const std::vector<double>& logits_c) {
  double kl = 0.0;
  for (std::size_t i = 0; i < probs_b.size(); ++i) {
    if (probs_b[i] <= 0.0) continue;
    kl += probs_b[i] *
          (std::log(probs_b[i]) - categorical_log_prob(logits_c, static_cast<int>(i)));
  }
  return kl;
}

std::vector<double> gaussian_log_prob_grad_mean(
    const std::vector<double>& mean, const std::vector<double>& log_std,
    const std::vector<double>& action) {
  std::vector<double> g(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double inv_var = std::exp(-2.0 * log_std[d]);
    g[d] = (action[d] - mean[d]) * inv_var;
  }
  return g;
}

std::vector<double> gaussian_log_prob_grad_log_std(
    const std::vector<double>& mean, const std::vector<double>& log_std,
    const std::vector<double>& action) {
  std::vector<double> g(mean.size());
  for (std::size_t d = 0; d < mean.size(); ++d) {
    double inv_var = std::exp(-2.0 * log_std[d]);
    double dm = action[d] - mean[d];
    g[d] = dm * dm * inv_var - 1.0;
  }
  return g;
}

void gaussian_kl_grad_c(const std::vector<double>& mean_b,
                        const std::vector<double>& log_std_b,
                        const std::vector<double>& mean_c,
                        const std::vector<double>& log_std_c,
                        std::vector<double>& d_mean_c,
                        std::vector<double>& d_log_std_c) {
  d_mean_c.assign(mean_b.size(), 0.0);
  d_log_std_c.assign(mean_b.size(), 0.0);
  for (std::size_t d = 0; d < mean_b.size(); ++d) {
    double var_b = std::exp(2.0 * log_std_b[d]);
    double var_c = std::exp(2.0 * log_std_c[d]);
    double dm = mean_b[d] - mean_c[d];
    d_mean_c[d] = (mean_c[d] - mean_b[d]) / var_c;
    d_log_std_c[d] = 1.0 - (var_b + dm * dm) / var_c;
  }
}

std::vector<double> categorical_log_prob_grad(const std::vector<double>& logits,
                                              int action) {
  std::vector<double> g = softmax(logits);
  for (double& v : g) v = -v;
  g[action] += 1.0;
  return g;
}

std::vector<double> categorical_kl_grad_c(const std::vector<double>& probs_b,
                                          const std::vector<double>& logits_c) {
  std::vector<double> g = softmax(logits_c);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] -= probs_b[i];
  return g;
}

std::vector<double> categorical_entropy_grad(const std::vector<double>& logits) {
  std::vector<double> p = softmax(logits);
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log(v);
  std::vector<double> g(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) g[i] = -p[i] * (std::log(p[i]) + h);
  return g;
}

}  // namespace dice
