#include "dice/mlp.hpp"

#include <cmath>
#include <string>

#include "dice/errors.hpp"

namespace dice {

Mlp::Mlp(int in_dim, int hidden, int out_dim)
    : in_dim_(in_dim), hidden_(hidden), out_dim_(out_dim) {
  if (in_dim < 1 || hidden < 1 || out_dim < 1)
    throw ConfigError("Mlp: dimensions must be positive");
  w1_ = 0;
  b1_ = w1_ + hidden_ * in_dim_;
  w2_ = b1_ + hidden_;
  b2_ = w2_ + hidden_ * hidden_;
  w3_ = b2_ + hidden_;
  b3_ = w3_ + out_dim_ * hidden_;
  params_.assign(b3_ + out_dim_, 0.0);
}

int Mlp::n_params() const { return static_cast<int>(params_.size()); }

void Mlp::init(Rng& rng) {
  auto fill = [&rng, this](int off, int rows, int cols) {
    double s = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows * cols; ++i) params_[off + i] = rng.uniform(-s, s);
  };
  fill(w1_, hidden_, in_dim_);
  fill(w2_, hidden_, hidden_);
  fill(w3_, out_dim_, hidden_);
  // biases stay zero
}

void Mlp::check_obs_dim(std::size_t got) const {
  if (static_cast<int>(got) != in_dim_)
    throw ConfigError("Mlp: observation dimension " + std::to_string(got) +
                      " does not match input dimension " +
                      std::to_string(in_dim_));
}

std::vector<double> Mlp::forward(const std::vector<double>& obs) const {
  check_obs_dim(obs.size());
  MlpCache c;
  forward_batch(obs, 1, c);
  return std::vector<double>(c.out.begin(), c.out.end());
}

void Mlp::forward_batch(const std::vector<double>& xs, int batch,
                        MlpCache& cache) const {
  if (static_cast<int>(xs.size()) != batch * in_dim_)
    throw ConfigError("Mlp: batch input size mismatch");
  cache.batch = batch;
  cache.x = xs;
  cache.h1.assign(static_cast<std::size_t>(batch) * hidden_, 0.0);
  cache.h2.assign(static_cast<std::size_t>(batch) * hidden_, 0.0);
  cache.out.assign(static_cast<std::size_t>(batch) * out_dim_, 0.0);

  const double* p = params_.data();
  for (int b = 0; b < batch; ++b) {
    const double* x = &xs[static_cast<std::size_t>(b) * in_dim_];
    double* h1 = &cache.h1[static_cast<std::size_t>(b) * hidden_];
    double* h2 = &cache.h2[static_cast<std::size_t>(b) * hidden_];
    double* out = &cache.out[static_cast<std::size_t>(b) * out_dim_];
    for (int i = 0; i < hidden_; ++i) {
      double z = p[b1_ + i];
      const double* w = p + w1_ + i * in_dim_;
      for (int j = 0; j < in_dim_; ++j) z += w[j] * x[j];
      h1[i] = z > 0.0 ? z : 0.0;
    }
    for (int i = 0; i < hidden_; ++i) {
      double z = p[b2_ + i];
      const double* w = p + w2_ + i * hidden_;
      for (int j = 0; j < hidden_; ++j) z += w[j] * h1[j];
      h2[i] = z > 0.0 ? z : 0.0;
    }
    for (int i = 0; i < out_dim_; ++i) {
      double z = p[b3_ + i];
      const double* w = p + w3_ + i * hidden_;
      for (int j = 0; j < hidden_; ++j) z += w[j] * h2[j];
      out[i] = z;
    }
  }
}

ParamVector Mlp::backward(const MlpCache& cache,
                          const std::vector<double>& upstream,
                          std::vector<double>* input_grad) const {
  if (static_cast<int>(upstream.size()) != cache.batch * out_dim_)
    throw ConfigError("Mlp: upstream gradient size mismatch");
  ParamVector g(params_.size(), 0.0);
  if (input_grad) input_grad->assign(cache.x.size(), 0.0);

  const double* p = params_.data();
  std::vector<double> d2(hidden_), d1(hidden_);
  for (int b = 0; b < cache.batch; ++b) {
    const double* x = &cache.x[static_cast<std::size_t>(b) * in_dim_];
    const double* h1 = &cache.h1[static_cast<std::size_t>(b) * hidden_];
    const double* h2 = &cache.h2[static_cast<std::size_t>(b) * hidden_];
    const double* u = &upstream[static_cast<std::size_t>(b) * out_dim_];

    for (int i = 0; i < out_dim_; ++i) {
      g[b3_ + i] += u[i];
      double* gw = g.data() + w3_ + i * hidden_;
      for (int j = 0; j < hidden_; ++j) gw[j] += u[i] * h2[j];
    }
    for (int j = 0; j < hidden_; ++j) {
      double s = 0.0;
      for (int i = 0; i < out_dim_; ++i) s += p[w3_ + i * hidden_ + j] * u[i];
      d2[j] = h2[j] > 0.0 ? s : 0.0;  // ReLU subgradient, 0 at kink
    }
    for (int i = 0; i < hidden_; ++i) {
      g[b2_ + i] += d2[i];
      double* gw = g.data() + w2_ + i * hidden_;
      for (int j = 0; j < hidden_; ++j) gw[j] += d2[i] * h1[j];
    }
    for (int j = 0; j < hidden_; ++j) {
      double s = 0.0;
      for (int i = 0; i < hidden_; ++i) s += p[w2_ + i * hidden_ + j] * d2[i];
      d1[j] = h1[j] > 0.0 ? s : 0.0;
    }
    for (int i = 0; i < hidden_; ++i) {
      g[b1_ + i] += d1[i];
      double* gw = g.data() + w1_ + i * in_dim_;
      for (int j = 0; j < in_dim_; ++j) gw[j] += d1[i] * x[j];
    }
    if (input_grad) {
      double* gx = input_grad->data() + static_cast<std::size_t>(b) * in_dim_;
      for (int j = 0; j < in_dim_; ++j) {
        double s = 0.0;
        for (int i = 0; i < hidden_; ++i) s += p[w1_ + i * in_dim_ + j] * d1[i];
        gx[j] = s;
      }
    }
  }
  return g;
}

ParamVector Mlp::flatten() const { return params_; }

void Mlp::unflatten(const ParamVector& flat) {
  if (flat.size() != params_.size())
    throw ConfigError("Mlp: unflatten size mismatch");
  params_ = flat;
}

}  // namespace dice
