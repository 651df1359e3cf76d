#include "bricks/ad/tensor.hpp"

#include <unordered_set>
#include <utility>

#include "bricks/errors.hpp"

namespace bricks::ad {

namespace {

thread_local bool g_grad_enabled = true;

}  // namespace

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

template <class Real>
Tensor<Real> Tensor<Real>::constant(int rows, int cols, std::vector<Real> values) {
  if (rows < 0 || cols < 0 ||
      values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    throw ContractViolation("tensor: " + std::to_string(values.size()) + " values for shape (" +
                            std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  auto n = std::make_shared<Node<Real>>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(values);
  return Tensor(std::move(n));
}

template <class Real>
Tensor<Real> Tensor<Real>::zeros(int rows, int cols) {
  return full(rows, cols, Real(0));
}

template <class Real>
Tensor<Real> Tensor<Real>::full(int rows, int cols, Real v) {
  return constant(rows, cols,
                  std::vector<Real>(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), v));
}

template <class Real>
Tensor<Real> Tensor<Real>::parameter(int rows, int cols, std::vector<Real> values) {
  Tensor t = constant(rows, cols, std::move(values));
  t.n_->requires_grad = true;
  return t;
}

template <class Real>
std::string Tensor<Real>::shape_string() const {
  return "(" + std::to_string(rows()) + ", " + std::to_string(cols()) + ")";
}

template <class Real>
Real Tensor<Real>::item() const {
  if (numel() != 1) {
    throw ContractViolation("item() on a tensor of shape " + shape_string());
  }
  return n_->value[0];
}

template <class Real>
std::vector<Real> Tensor<Real>::grad() const {
  if (n_->grad.empty()) {
    return std::vector<Real>(n_->value.size(), Real(0));
  }
  return n_->grad;
}

template <class Real>
Tensor<Real> make_op(int rows, int cols, std::vector<Real> value, std::vector<Tensor<Real>> parents,
                     std::function<void(Node<Real>&)> backward) {
  Tensor<Real> out = Tensor<Real>::constant(rows, cols, std::move(value));
  if (!g_grad_enabled) {
    return out;
  }
  bool any = false;
  for (const Tensor<Real>& p : parents) {
    any = any || p.requires_grad();
  }
  if (!any) {
    return out;
  }
  Node<Real>& n = *out.node();
  n.requires_grad = true;
  n.parents.reserve(parents.size());
  for (Tensor<Real>& p : parents) {
    n.parents.push_back(p.node());
  }
  n.backward = std::move(backward);
  return out;
}

template <class Real>
void backward(const Tensor<Real>& loss) {
  if (loss.numel() != 1) {
    throw ContractViolation("backward: loss must be a scalar, got shape " + loss.shape_string());
  }
  if (!loss.requires_grad()) {
    return;
  }
  // Iterative post-order DFS gives a topological order with parents first.
  std::vector<Node<Real>*> order;
  std::unordered_set<Node<Real>*> seen;
  std::vector<std::pair<Node<Real>*, std::size_t>> stack;
  stack.emplace_back(loss.node().get(), 0);
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<Real>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) {
        stack.emplace_back(p, 0);
      }
      continue;
    }
    order.push_back(node);
    stack.pop_back();
  }
  loss.node()->grad_buffer()[0] += Real(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<Real>* n = *it;
    if (n->backward && !n->grad.empty()) {
      n->backward(*n);
    }
  }
}

template class Tensor<float>;
template class Tensor<double>;
template Tensor<float> make_op(int, int, std::vector<float>, std::vector<Tensor<float>>,
                               std::function<void(Node<float>&)>);
template Tensor<double> make_op(int, int, std::vector<double>, std::vector<Tensor<double>>,
                                std::function<void(Node<double>&)>);
template void backward(const Tensor<float>&);
template void backward(const Tensor<double>&);

}  // namespace bricks::ad
