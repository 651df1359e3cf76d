#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bricks::ad {

/// One value on the tape. Tensors are matrices (rows x cols, row-major);
/// scalars are 1x1 and image batches are stored as (pixels, channels).
template <class Real>
struct Node {
  int rows = 0;
  int cols = 0;
  std::vector<Real> value;
  /// Empty until a gradient flows into the node.
  std::vector<Real> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  std::size_t numel() const { return value.size(); }
  std::vector<Real>& grad_buffer() {
    if (grad.empty()) {
      grad.assign(value.size(), Real(0));
    }
    return grad;
  }
};

template <class Real>
class Tensor {
 public:
  using NodePtr = std::shared_ptr<Node<Real>>;

  Tensor() = default;
  explicit Tensor(NodePtr n) : n_(std::move(n)) {}

  static Tensor constant(int rows, int cols, std::vector<Real> values);
  static Tensor zeros(int rows, int cols);
  static Tensor full(int rows, int cols, Real v);
  static Tensor scalar(Real v) { return full(1, 1, v); }
  /// Leaf that accumulates gradients.
  static Tensor parameter(int rows, int cols, std::vector<Real> values);

  bool defined() const { return n_ != nullptr; }
  int rows() const { return n_->rows; }
  int cols() const { return n_->cols; }
  std::size_t numel() const { return n_->value.size(); }
  bool requires_grad() const { return n_->requires_grad; }
  std::string shape_string() const;

  std::span<Real> value() { return n_->value; }
  std::span<const Real> value() const { return n_->value; }
  Real at(int r, int c) const {
    return n_->value[static_cast<std::size_t>(r) * static_cast<std::size_t>(n_->cols) +
                     static_cast<std::size_t>(c)];
  }
  Real item() const;

  /// Gradient after backward(); zeros when nothing flowed in.
  std::vector<Real> grad() const;
  void zero_grad() { n_->grad.clear(); }

  const NodePtr& node() const { return n_; }

 private:
  NodePtr n_;
};

/// Disables tape recording on this thread while alive.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

bool grad_enabled();

/// Builds an op result. When recording is on and any parent requires a
/// gradient, the result keeps `parents` and `backward`; otherwise both are
/// dropped and the result is a constant.
template <class Real>
Tensor<Real> make_op(int rows, int cols, std::vector<Real> value, std::vector<Tensor<Real>> parents,
                     std::function<void(Node<Real>&)> backward);

/// Reverse-mode sweep from a 1x1 loss. Gradients accumulate into every
/// reachable node that requires one.
template <class Real>
void backward(const Tensor<Real>& loss);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace bricks::ad
