#include "bricks/ad/optim.hpp"

#include <cmath>

#include "bricks/errors.hpp"

namespace bricks::ad {

template <class Real>
double grad_norm(const std::vector<Tensor<Real>>& params) {
  double sq = 0.0;
  for (const Tensor<Real>& p : params) {
    for (Real g : p.node()->grad) {
      sq += static_cast<double>(g) * static_cast<double>(g);
    }
  }
  return std::sqrt(sq);
}

template <class Real>
double clip_grad_norm(const std::vector<Tensor<Real>>& params, double max_norm) {
  const double norm = grad_norm(params);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (const Tensor<Real>& p : params) {
      for (Real& g : p.node()->grad) {
        g = static_cast<Real>(static_cast<double>(g) * s);
      }
    }
  }
  return norm;
}

template <class Real>
Adam<Real>::Adam(std::vector<Tensor<Real>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  for (const Tensor<Real>& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

template <class Real>
double Adam<Real>::step() {
  const double norm = clip_grad_norm(params_, cfg_.clip_norm);
  if (!std::isfinite(norm)) {
    throw NumericalError("non-finite gradient norm in optimizer step");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node<Real>& n = *params_[i].node();
    if (n.grad.empty()) {
      n.grad.assign(n.value.size(), Real(0));
    }
    for (std::size_t k = 0; k < n.value.size(); ++k) {
      const double g = static_cast<double>(n.grad[k]);
      m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * g;
      v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * g * g;
      const double mh = m_[i][k] / c1;
      const double vh = v_[i][k] / c2;
      n.value[k] = static_cast<Real>(static_cast<double>(n.value[k]) -
                                     cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps));
    }
  }
  return norm;
}

template <class Real>
void Adam<Real>::zero_grad() {
  for (Tensor<Real>& p : params_) {
    p.zero_grad();
  }
}

template class Adam<float>;
template class Adam<double>;
template double grad_norm(const std::vector<Tensor<float>>&);
template double grad_norm(const std::vector<Tensor<double>>&);
template double clip_grad_norm(const std::vector<Tensor<float>>&, double);
template double clip_grad_norm(const std::vector<Tensor<double>>&, double);

}  // namespace bricks::ad
