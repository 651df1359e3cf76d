#pragma once

#include <vector>

#include "bricks/ad/tensor.hpp"

namespace bricks::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm limit applied before the update; <= 0 disables it.
  double clip_norm = 0.5;
};

/// Global L2 norm of the parameters' gradients.
template <class Real>
double grad_norm(const std::vector<Tensor<Real>>& params);

/// Scales all gradients so their global norm is at most `max_norm`; returns
/// the norm before scaling.
template <class Real>
double clip_grad_norm(const std::vector<Tensor<Real>>& params, double max_norm);

template <class Real>
class Adam {
 public:
  Adam(std::vector<Tensor<Real>> params, AdamConfig cfg);

  /// Clips, then applies one bias-corrected update from the current
  /// gradients. Returns the pre-clip gradient norm. Throws NumericalError on a
  /// non-finite gradient.
  double step();
  void zero_grad();

  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long steps() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor<Real>> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace bricks::ad
