#include "dice/policy.hpp"

#include <algorithm>
#include <cmath>

#include "dice/distributions.hpp"
#include "dice/errors.hpp"

namespace dice {

Policy::Policy(int obs_dim, int hidden, int action_dim, HeadKind kind,
               double log_std_init, double log_std_min, double log_std_max)
    : net_(obs_dim, hidden, action_dim),
      kind_(kind),
      log_std_min_(log_std_min),
      log_std_max_(log_std_max) {
  if (kind_ == HeadKind::Gaussian) log_std_.assign(action_dim, log_std_init);
}

void Policy::init(Rng& rng) { net_.init(rng); }

int Policy::n_params() const {
  return net_.n_params() + static_cast<int>(log_std_.size());
}

std::vector<double> Policy::log_std() const {
  std::vector<double> ls(log_std_.size());
  for (std::size_t d = 0; d < log_std_.size(); ++d)
    ls[d] = std::clamp(log_std_[d], log_std_min_, log_std_max_);
  return ls;
}

double Policy::log_std_grad_mask(int d) const {
  return (log_std_[d] > log_std_min_ && log_std_[d] < log_std_max_) ? 1.0 : 0.0;
}

std::vector<double> Policy::head(const std::vector<double>& obs) const {
  return net_.forward(obs);
}

Action Policy::sample(const std::vector<double>& obs, Rng& rng,
                      double* log_prob_out,
                      std::vector<double>* head_out) const {
  std::vector<double> h = head(obs);
  Action a;
  if (kind_ == HeadKind::Gaussian) {
    std::vector<double> ls = log_std();
    a.cont.resize(h.size());
    for (std::size_t d = 0; d < h.size(); ++d)
      a.cont[d] = h[d] + std::exp(ls[d]) * rng.normal();
    if (log_prob_out) *log_prob_out = gaussian_log_prob(h, ls, a.cont);
  } else {
    std::vector<double> p = softmax(h);
    double u = rng.uniform();
    double c = 0.0;
    a.disc = static_cast<int>(p.size()) - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      c += p[i];
      if (u < c) {
        a.disc = static_cast<int>(i);
        break;
      }
    }
    if (log_prob_out) *log_prob_out = categorical_log_prob(h, a.disc);
  }
  if (head_out) *head_out = std::move(h);
  return a;
}

double Policy::log_prob(const std::vector<double>& head_out,
                        const Action& action) const {
  if (kind_ == HeadKind::Gaussian)
    return gaussian_log_prob(head_out, log_std(), action.cont);
  return categorical_log_prob(head_out, action.disc);
}

double Policy::entropy(const std::vector<double>& head_out) const {
  if (kind_ == HeadKind::Gaussian) return gaussian_entropy(log_std());
  return categorical_entropy(head_out);
}

ParamVector Policy::flatten() const {
  ParamVector flat = net_.flatten();
  flat.insert(flat.end(), log_std_.begin(), log_std_.end());
  return flat;
}

void Policy::unflatten(const ParamVector& flat) {
  const std::size_t nn = static_cast<std::size_t>(net_.n_params());
  if (flat.size() != nn + log_std_.size())
    throw ConfigError("Policy: unflatten size mismatch");
  net_.unflatten(ParamVector(flat.begin(), flat.begin() + nn));
  std::copy(flat.begin() + nn, flat.end(), log_std_.begin());
}

}  // namespace dice
