#ifndef DICE_DISTRIBUTIONS_HPP_
#define DICE_DISTRIBUTIONS_HPP_

#include <vector>

namespace dice {

// Diagonal Gaussian log density, summed over dimensions.
double gaussian_log_prob(const std::vector<double>& mean,
                         const std::vector<double>& log_std,
                         const std::vector<double>& action);

// Differential entropy of a diagonal Gaussian: sum_d 0.5(1+ln 2pi) + log_std_d.
double gaussian_entropy(const std::vector<double>& log_std);

// KL(b || c) between diagonal Gaussians.
double gaussian_kl(const std::vector<double>& mean_b,
                   const std::vector<double>& log_std_b,
                   const std::vector<double>& mean_c,
                   const std::vector<double>& log_std_c);

std::vector<double> softmax(const std::vector<double>& logits);

// log p(a) under softmax(logits).
double categorical_log_prob(const std::vector<double>& logits, int action);

double categorical_entropy(const std::vector<double>& logits);

// KL(probs_b || softmax(logits_c)).
double categorical_kl(const std::vector<double>& probs_b,
                      const std::vector<double>& logits_c);

// Gradients of the Gaussian log density at a fixed action:
// d/d mean = (a - mean) / var, d/d log_std = (a - mean)^2 / var - 1.
std::vector<double> gaussian_log_prob_grad_mean(
    const std::vector<double>& mean, const std::vector<double>& log_std,
    const std::vector<double>& action);
std::vector<double> gaussian_log_prob_grad_log_std(
    const std::vector<double>& mean, const std::vector<double>& log_std,
    const std::vector<double>& action);

// Gradients of KL(b || c) with respect to the c parameters.
void gaussian_kl_grad_c(const std::vector<double>& mean_b,
                        const std::vector<double>& log_std_b,
                        const std::vector<double>& mean_c,
                        const std::vector<double>& log_std_c,
                        std::vector<double>& d_mean_c,
                        std::vector<double>& d_log_std_c);

// d log p(a) / d logits = onehot(a) - softmax(logits).
std::vector<double> categorical_log_prob_grad(const std::vector<double>& logits,
                                              int action);

// d KL(probs_b || softmax(logits_c)) / d logits_c = softmax(logits_c) - probs_b.
std::vector<double> categorical_kl_grad_c(const std::vector<double>& probs_b,
                                          const std::vector<double>& logits_c);

// d H(softmax(logits)) / d logits_m = -p_m (log p_m + H).
std::vector<double> categorical_entropy_grad(const std::vector<double>& logits);

}  // namespace dice

#endif  // DICE_DISTRIBUTIONS_HPP_
