#ifndef DICE_MLP_HPP_
#define DICE_MLP_HPP_

#include <cstdint>
#include <vector>

#include "dice/rng.hpp"
#include "dice/vec.hpp"

namespace dice {

// Forward activations for one batch; required by backward().
struct MlpCache {
  int batch = 0;
  std::vector<double> x;    // [batch][in]
  std::vector<double> h1;   // [batch][hidden], post-ReLU
  std::vector<double> h2;   // [batch][hidden], post-ReLU
  std::vector<double> out;  // [batch][out]
};

// Fully connected network with two ReLU hidden layers and a linear output.
// Parameters flatten in a fixed order: w1, b1, w2, b2, w3, b3 (weights
// row-major, output x input). flatten/unflatten round-trip bit-exactly.
class Mlp {
 public:
  Mlp() = default;
  Mlp(int in_dim, int hidden, int out_dim);

  void init(Rng& rng);  // uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) per layer

  int in_dim() const { return in_dim_; }
  int out_dim() const { return out_dim_; }
  int hidden() const { return hidden_; }
  int n_params() const;

  // Single observation; returns the output head values.
  std::vector<double> forward(const std::vector<double>& obs) const;

  // Batched forward; xs is row-major [batch][in_dim]. Fills cache.
  void forward_batch(const std::vector<double>& xs, int batch,
                     MlpCache& cache) const;

  // Exact gradient of sum_i upstream[i] . out[i] w.r.t. all parameters,
  // flattened. If input_grad is non-null it receives d/d(xs), same shape
  // as cache.x.
  ParamVector backward(const MlpCache& cache,
                       const std::vector<double>& upstream,
                       std::vector<double>* input_grad = nullptr) const;

  ParamVector flatten() const;
  void unflatten(const ParamVector& flat);

  // Direct parameter access for optimizers; layout matches flatten().
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

 private:
  int in_dim_ = 0, hidden_ = 0, out_dim_ = 0;
  // Single contiguous buffer in flatten() order; offsets below.
  ParamVector params_;
  int w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0, w3_ = 0, b3_ = 0;

  void check_obs_dim(std::size_t got) const;
};

}  // namespace dice

#endif  // DICE_MLP_HPP_
