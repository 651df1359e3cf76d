#include "bricks/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "bricks/errors.hpp"

namespace bricks::ad {

namespace {

template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MapM = Eigen::Map<Mat<Real>>;
template <class Real>
using CMapM = Eigen::Map<const Mat<Real>>;

template <class Real>
CMapM<Real> view(const std::vector<Real>& v, int r, int c) {
  return CMapM<Real>(v.data(), r, c);
}
template <class Real>
MapM<Real> view(std::vector<Real>& v, int r, int c) {
  return MapM<Real>(v.data(), r, c);
}
template <class Real>
CMapM<Real> val(const T<Real>& t) {
  return CMapM<Real>(t.node()->value.data(), t.rows(), t.cols());
}

template <class Real>
[[noreturn]] void shape_error(const char* op, const T<Real>& a, const T<Real>& b) {
  throw ContractViolation(std::string(op) + ": incompatible shapes " + a.shape_string() + " and " +
                          b.shape_string());
}

template <class Real>
void require_same(const char* op, const T<Real>& a, const T<Real>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    shape_error(op, a, b);
  }
}

/// Gradient buffer of a parent, or null when it does not need one.
template <class Real>
std::vector<Real>* gbuf(const T<Real>& p) {
  return p.requires_grad() ? &p.node()->grad_buffer() : nullptr;
}

template <class Real, class F, class D>
T<Real> unary(const T<Real>& a, F f, D dfdx) {
  std::vector<Real> out(a.numel());
  const auto& av = a.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(av[i]);
  }
  return make_op<Real>(a.rows(), a.cols(), std::move(out), {a}, [a, dfdx](Node<Real>& n) {
    auto* ga = gbuf(a);
    if (!ga) {
      return;
    }
    const auto& av = a.node()->value;
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      (*ga)[i] += n.grad[i] * dfdx(av[i], n.value[i]);
    }
  });
}

}  // namespace

template <class Real>
T<Real> matmul(const T<Real>& a, const T<Real>& b) {
  if (a.cols() != b.rows()) {
    shape_error("matmul", a, b);
  }
  std::vector<Real> out(static_cast<std::size_t>(a.rows()) * static_cast<std::size_t>(b.cols()));
  view(out, a.rows(), b.cols()).noalias() = val(a) * val(b);
  return make_op<Real>(a.rows(), b.cols(), std::move(out), {a, b}, [a, b](Node<Real>& n) {
    const auto g = view(static_cast<const std::vector<Real>&>(n.grad), n.rows, n.cols);
    if (auto* ga = gbuf(a)) {
      view(*ga, a.rows(), a.cols()).noalias() += g * val(b).transpose();
    }
    if (auto* gb = gbuf(b)) {
      view(*gb, b.rows(), b.cols()).noalias() += val(a).transpose() * g;
    }
  });
}

template <class Real>
T<Real> linear(const T<Real>& x, const T<Real>& w, const T<Real>& b) {
  if (x.cols() != w.rows()) {
    shape_error("linear", x, w);
  }
  if (b.rows() != 1 || b.cols() != w.cols()) {
    shape_error("linear bias", w, b);
  }
  const int n = x.rows();
  const int m = w.cols();
  std::vector<Real> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
  auto o = view(out, n, m);
  o.noalias() = val(x) * val(w);
  o.rowwise() += val(b).row(0);
  return make_op<Real>(n, m, std::move(out), {x, w, b}, [x, w, b](Node<Real>& nd) {
    const auto g = view(static_cast<const std::vector<Real>&>(nd.grad), nd.rows, nd.cols);
    if (auto* gx = gbuf(x)) {
      view(*gx, x.rows(), x.cols()).noalias() += g * val(w).transpose();
    }
    if (auto* gw = gbuf(w)) {
      view(*gw, w.rows(), w.cols()).noalias() += val(x).transpose() * g;
    }
    if (auto* gb = gbuf(b)) {
      view(*gb, 1, b.cols()) += g.colwise().sum();
    }
  });
}

template <class Real>
T<Real> add(const T<Real>& a, const T<Real>& b) {
  require_same("add", a, b);
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.node()->value[i] + b.node()->value[i];
  }
  return make_op<Real>(a.rows(), a.cols(), std::move(out), {a, b}, [a, b](Node<Real>& n) {
    for (const T<Real>* p : {&a, &b}) {
      if (auto* g = gbuf(*p)) {
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
          (*g)[i] += n.grad[i];
        }
      }
    }
  });
}

template <class Real>
T<Real> sub(const T<Real>& a, const T<Real>& b) {
  require_same("sub", a, b);
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.node()->value[i] - b.node()->value[i];
  }
  return make_op<Real>(a.rows(), a.cols(), std::move(out), {a, b}, [a, b](Node<Real>& n) {
    if (auto* g = gbuf(a)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*g)[i] += n.grad[i];
      }
    }
    if (auto* g = gbuf(b)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*g)[i] -= n.grad[i];
      }
    }
  });
}

template <class Real>
T<Real> mul(const T<Real>& a, const T<Real>& b) {
  require_same("mul", a, b);
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = a.node()->value[i] * b.node()->value[i];
  }
  return make_op<Real>(a.rows(), a.cols(), std::move(out), {a, b}, [a, b](Node<Real>& n) {
    if (auto* g = gbuf(a)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*g)[i] += n.grad[i] * b.node()->value[i];
      }
    }
    if (auto* g = gbuf(b)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*g)[i] += n.grad[i] * a.node()->value[i];
      }
    }
  });
}

template <class Real>
T<Real> scale(const T<Real>& a, Real s) {
  return unary(a, [s](Real x) { return x * s; }, [s](Real, Real) { return s; });
}

template <class Real>
T<Real> add_scalar(const T<Real>& a, Real s) {
  return unary(a, [s](Real x) { return x + s; }, [](Real, Real) { return Real(1); });
}

template <class Real>
T<Real> relu(const T<Real>& a) {
  return unary(
      a, [](Real x) { return x > Real(0) ? x : Real(0); },
      [](Real x, Real) { return x > Real(0) ? Real(1) : Real(0); });
}

template <class Real>
T<Real> sigmoid(const T<Real>& a) {
  return unary(
      a,
      [](Real x) {
        if (x >= Real(0)) {
          return Real(1) / (Real(1) + std::exp(-x));
        }
        const Real e = std::exp(x);
        return e / (Real(1) + e);
      },
      [](Real, Real y) { return y * (Real(1) - y); });
}

template <class Real>
T<Real> exp(const T<Real>& a) {
  return unary(a, [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

template <class Real>
T<Real> clamp(const T<Real>& a, Real lo, Real hi) {
  return unary(
      a, [lo, hi](Real x) { return std::clamp(x, lo, hi); },
      [lo, hi](Real x, Real) { return (x > lo && x < hi) ? Real(1) : Real(0); });
}

template <class Real>
T<Real> minimum(const T<Real>& a, const T<Real>& b) {
  require_same("minimum", a, b);
  std::vector<Real> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::min(a.node()->value[i], b.node()->value[i]);
  }
  return make_op<Real>(a.rows(), a.cols(), std::move(out), {a, b}, [a, b](Node<Real>& n) {
    auto* ga = gbuf(a);
    auto* gb = gbuf(b);
    for (std::size_t i = 0; i < n.grad.size(); ++i) {
      const bool take_a = a.node()->value[i] <= b.node()->value[i];
      if (take_a && ga) {
        (*ga)[i] += n.grad[i];
      } else if (!take_a && gb) {
        (*gb)[i] += n.grad[i];
      }
    }
  });
}

template <class Real>
T<Real> concat_cols(const std::vector<T<Real>>& parts) {
  if (parts.empty()) {
    throw ContractViolation("concat_cols: no inputs");
  }
  const int rows = parts.front().rows();
  int cols = 0;
  for (const T<Real>& p : parts) {
    if (p.rows() != rows) {
      shape_error("concat_cols", parts.front(), p);
    }
    cols += p.cols();
  }
  std::vector<Real> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  auto o = view(out, rows, cols);
  int c0 = 0;
  for (const T<Real>& p : parts) {
    o.middleCols(c0, p.cols()) = val(p);
    c0 += p.cols();
  }
  return make_op<Real>(rows, cols, std::move(out), parts, [parts](Node<Real>& n) {
    const auto g = view(static_cast<const std::vector<Real>&>(n.grad), n.rows, n.cols);
    int c = 0;
    for (const T<Real>& p : parts) {
      if (auto* gp = gbuf(p)) {
        view(*gp, p.rows(), p.cols()) += g.middleCols(c, p.cols());
      }
      c += p.cols();
    }
  });
}

template <class Real>
T<Real> concat_rows(const std::vector<T<Real>>& parts) {
  if (parts.empty()) {
    throw ContractViolation("concat_rows: no inputs");
  }
  const int cols = parts.front().cols();
  int rows = 0;
  for (const T<Real>& p : parts) {
    if (p.cols() != cols) {
      shape_error("concat_rows", parts.front(), p);
    }
    rows += p.rows();
  }
  std::vector<Real> out;
  out.reserve(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
  for (const T<Real>& p : parts) {
    out.insert(out.end(), p.node()->value.begin(), p.node()->value.end());
  }
  return make_op<Real>(rows, cols, std::move(out), parts, [parts](Node<Real>& n) {
    std::size_t off = 0;
    for (const T<Real>& p : parts) {
      if (auto* gp = gbuf(p)) {
        for (std::size_t i = 0; i < p.numel(); ++i) {
          (*gp)[i] += n.grad[off + i];
        }
      }
      off += p.numel();
    }
  });
}

template <class Real>
T<Real> gather_rows(const T<Real>& x, const std::vector<int>& rows) {
  const std::size_t c = static_cast<std::size_t>(x.cols());
  std::vector<Real> out(rows.size() * c);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] < 0 || rows[r] >= x.rows()) {
      throw ContractViolation("gather_rows: row " + std::to_string(rows[r]) +
                              " out of range for shape " + x.shape_string());
    }
    std::copy_n(x.node()->value.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(rows[r]) * c),
                c, out.begin() + static_cast<std::ptrdiff_t>(r * c));
  }
  return make_op<Real>(static_cast<int>(rows.size()), x.cols(), std::move(out), {x},
                       [x, rows, c](Node<Real>& n) {
                         auto* gx = gbuf(x);
                         if (!gx) {
                           return;
                         }
                         for (std::size_t r = 0; r < rows.size(); ++r) {
                           const std::size_t src = static_cast<std::size_t>(rows[r]) * c;
                           for (std::size_t k = 0; k < c; ++k) {
                             (*gx)[src + k] += n.grad[r * c + k];
                           }
                         }
                       });
}

template <class Real>
T<Real> segment_sum(const T<Real>& x, const std::vector<int>& seg, int segments) {
  if (seg.size() != static_cast<std::size_t>(x.rows())) {
    throw ContractViolation("segment_sum: " + std::to_string(seg.size()) +
                            " segment ids for shape " + x.shape_string());
  }
  const std::size_t c = static_cast<std::size_t>(x.cols());
  std::vector<Real> out(static_cast<std::size_t>(segments) * c, Real(0));
  for (std::size_t r = 0; r < seg.size(); ++r) {
    if (seg[r] < 0 || seg[r] >= segments) {
      throw ContractViolation("segment_sum: segment id out of range");
    }
    for (std::size_t k = 0; k < c; ++k) {
      out[static_cast<std::size_t>(seg[r]) * c + k] += x.node()->value[r * c + k];
    }
  }
  return make_op<Real>(segments, x.cols(), std::move(out), {x}, [x, seg, c](Node<Real>& n) {
    auto* gx = gbuf(x);
    if (!gx) {
      return;
    }
    for (std::size_t r = 0; r < seg.size(); ++r) {
      for (std::size_t k = 0; k < c; ++k) {
        (*gx)[r * c + k] += n.grad[static_cast<std::size_t>(seg[r]) * c + k];
      }
    }
  });
}

template <class Real>
T<Real> segment_mean(const T<Real>& x, const std::vector<int>& seg, int segments) {
  std::vector<int> counts(static_cast<std::size_t>(segments), 0);
  for (int s : seg) {
    if (s >= 0 && s < segments) {
      ++counts[static_cast<std::size_t>(s)];
    }
  }
  std::vector<Real> inv(static_cast<std::size_t>(x.rows()) * static_cast<std::size_t>(x.cols()));
  for (std::size_t r = 0; r < seg.size(); ++r) {
    if (seg[r] < 0 || seg[r] >= segments) {
      continue;  // segment_sum reports it
    }
    const Real w = Real(1) / static_cast<Real>(counts[static_cast<std::size_t>(seg[r])]);
    std::fill_n(inv.begin() + static_cast<std::ptrdiff_t>(r * static_cast<std::size_t>(x.cols())),
                x.cols(), w);
  }
  return segment_sum(mul(x, T<Real>::constant(x.rows(), x.cols(), std::move(inv))), seg, segments);
}

template <class Real>
T<Real> scatter_padded(const T<Real>& x, const std::vector<int>& seg, const std::vector<int>& pos,
                       int segments, int width, Real fill) {
  if (x.cols() != 1 || seg.size() != static_cast<std::size_t>(x.rows()) || pos.size() != seg.size()) {
    throw ContractViolation("scatter_padded: expected a column vector with one (segment, position) "
                            "per row, got shape " + x.shape_string());
  }
  std::vector<Real> out(static_cast<std::size_t>(segments) * static_cast<std::size_t>(width), fill);
  std::vector<std::size_t> where(seg.size());
  for (std::size_t r = 0; r < seg.size(); ++r) {
    if (seg[r] < 0 || seg[r] >= segments || pos[r] < 0 || pos[r] >= width) {
      throw ContractViolation("scatter_padded: position " + std::to_string(pos[r]) +
                              " exceeds width " + std::to_string(width));
    }
    where[r] = static_cast<std::size_t>(seg[r]) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(pos[r]);
    out[where[r]] = x.node()->value[r];
  }
  return make_op<Real>(segments, width, std::move(out), {x}, [x, where](Node<Real>& n) {
    if (auto* gx = gbuf(x)) {
      for (std::size_t r = 0; r < where.size(); ++r) {
        (*gx)[r] += n.grad[where[r]];
      }
    }
  });
}

template <class Real>
T<Real> reshape(const T<Real>& x, int rows, int cols) {
  if (static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) != x.numel()) {
    throw ContractViolation("reshape: cannot view " + x.shape_string() + " as (" +
                            std::to_string(rows) + ", " + std::to_string(cols) + ")");
  }
  return make_op<Real>(rows, cols, x.node()->value, {x}, [x](Node<Real>& n) {
    if (auto* gx = gbuf(x)) {
      for (std::size_t i = 0; i < n.grad.size(); ++i) {
        (*gx)[i] += n.grad[i];
      }
    }
  });
}

template <class Real>
T<Real> sum(const T<Real>& x) {
  Real s = 0;
  for (Real v : x.node()->value) {
    s += v;
  }
  return make_op<Real>(1, 1, {s}, {x}, [x](Node<Real>& n) {
    if (auto* gx = gbuf(x)) {
      for (Real& g : *gx) {
        g += n.grad[0];
      }
    }
  });
}

template <class Real>
T<Real> mean(const T<Real>& x) {
  if (x.numel() == 0) {
    throw ContractViolation("mean of an empty tensor");
  }
  return scale(sum(x), Real(1) / static_cast<Real>(x.numel()));
}

template <class Real>
T<Real> softmax_rows(const T<Real>& x) {
  const int rows = x.rows();
  const int cols = x.cols();
  std::vector<Real> out(x.numel());
  for (int r = 0; r < rows; ++r) {
    const Real* in = x.node()->value.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    Real* o = out.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    const Real m = *std::max_element(in, in + cols);
    Real z = 0;
    for (int k = 0; k < cols; ++k) {
      o[k] = std::exp(in[k] - m);
      z += o[k];
    }
    for (int k = 0; k < cols; ++k) {
      o[k] /= z;
    }
  }
  return make_op<Real>(rows, cols, std::move(out), {x}, [x](Node<Real>& n) {
    auto* gx = gbuf(x);
    if (!gx) {
      return;
    }
    for (int r = 0; r < n.rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * static_cast<std::size_t>(n.cols);
      Real dot = 0;
      for (int k = 0; k < n.cols; ++k) {
        dot += n.grad[base + static_cast<std::size_t>(k)] * n.value[base + static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < n.cols; ++k) {
        const std::size_t i = base + static_cast<std::size_t>(k);
        (*gx)[i] += n.value[i] * (n.grad[i] - dot);
      }
    }
  });
}

template <class Real>
T<Real> masked_log_softmax(const T<Real>& x, const Mask& mask) {
  if (mask.size() != x.numel()) {
    throw ContractViolation("masked_log_softmax: mask of " + std::to_string(mask.size()) +
                            " entries for shape " + x.shape_string());
  }
  const int rows = x.rows();
  const std::size_t cols = static_cast<std::size_t>(x.cols());
  std::vector<Real> out(x.numel(), Real(0));
  for (int r = 0; r < rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * cols;
    Real m = -std::numeric_limits<Real>::infinity();
    for (std::size_t k = 0; k < cols; ++k) {
      if (mask[base + k]) {
        m = std::max(m, x.node()->value[base + k]);
      }
    }
    if (!std::isfinite(m)) {
      throw ContractViolation("masked_log_softmax: row " + std::to_string(r) +
                              " has no unmasked finite entry");
    }
    Real z = 0;
    for (std::size_t k = 0; k < cols; ++k) {
      if (mask[base + k]) {
        z += std::exp(x.node()->value[base + k] - m);
      }
    }
    const Real lz = m + std::log(z);
    for (std::size_t k = 0; k < cols; ++k) {
      if (mask[base + k]) {
        out[base + k] = x.node()->value[base + k] - lz;
      }
    }
  }
  return make_op<Real>(rows, x.cols(), std::move(out), {x}, [x, mask, cols](Node<Real>& n) {
    auto* gx = gbuf(x);
    if (!gx) {
      return;
    }
    for (int r = 0; r < n.rows; ++r) {
      const std::size_t base = static_cast<std::size_t>(r) * cols;
      Real gsum = 0;
      for (std::size_t k = 0; k < cols; ++k) {
        if (mask[base + k]) {
          gsum += n.grad[base + k];
        }
      }
      for (std::size_t k = 0; k < cols; ++k) {
        if (mask[base + k]) {
          (*gx)[base + k] += n.grad[base + k] - std::exp(n.value[base + k]) * gsum;
        }
      }
    }
  });
}

template <class Real>
T<Real> pick(const T<Real>& x, const std::vector<int>& idx) {
  if (idx.size() != static_cast<std::size_t>(x.rows())) {
    throw ContractViolation("pick: " + std::to_string(idx.size()) + " indices for shape " +
                            x.shape_string());
  }
  const std::size_t cols = static_cast<std::size_t>(x.cols());
  std::vector<Real> out(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= cols) {
      throw ContractViolation("pick: column index out of range for shape " + x.shape_string());
    }
    out[r] = x.node()->value[r * cols + static_cast<std::size_t>(idx[r])];
  }
  return make_op<Real>(x.rows(), 1, std::move(out), {x}, [x, idx, cols](Node<Real>& n) {
    if (auto* gx = gbuf(x)) {
      for (std::size_t r = 0; r < idx.size(); ++r) {
        (*gx)[r * cols + static_cast<std::size_t>(idx[r])] += n.grad[r];
      }
    }
  });
}

template <class Real>
T<Real> masked_entropy(const T<Real>& logp, const Mask& mask) {
  if (mask.size() != logp.numel()) {
    throw ContractViolation("masked_entropy: mask size does not match shape " + logp.shape_string());
  }
  const std::size_t cols = static_cast<std::size_t>(logp.cols());
  std::vector<Real> out(static_cast<std::size_t>(logp.rows()), Real(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t k = 0; k < cols; ++k) {
      const std::size_t i = r * cols + k;
      if (mask[i]) {
        const Real l = logp.node()->value[i];
        out[r] -= std::exp(l) * l;
      }
    }
  }
  return make_op<Real>(logp.rows(), 1, std::move(out), {logp}, [logp, mask, cols](Node<Real>& n) {
    auto* g = gbuf(logp);
    if (!g) {
      return;
    }
    for (std::size_t r = 0; r < static_cast<std::size_t>(n.rows); ++r) {
      for (std::size_t k = 0; k < cols; ++k) {
        const std::size_t i = r * cols + k;
        if (mask[i]) {
          const Real l = logp.node()->value[i];
          (*g)[i] -= n.grad[r] * std::exp(l) * (l + Real(1));
        }
      }
    }
  });
}

template <class Real>
T<Real> bce(const T<Real>& p, const T<Real>& y) {
  require_same("bce", p, y);
  const Real eps = std::numeric_limits<Real>::epsilon();
  const std::size_t n = p.numel();
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real q = std::clamp(p.node()->value[i], eps, Real(1) - eps);
    const Real t = y.node()->value[i];
    total -= t * std::log(q) + (Real(1) - t) * std::log(Real(1) - q);
  }
  return make_op<Real>(1, 1, {total / static_cast<Real>(n)}, {p}, [p, y, eps, n](Node<Real>& nd) {
    auto* g = gbuf(p);
    if (!g) {
      return;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const Real raw = p.node()->value[i];
      if (raw <= eps || raw >= Real(1) - eps) {
        continue;
      }
      const Real t = y.node()->value[i];
      (*g)[i] += nd.grad[0] * (-t / raw + (Real(1) - t) / (Real(1) - raw)) / static_cast<Real>(n);
    }
  });
}

template <class Real>
T<Real> bce_with_logits(const T<Real>& logits, const T<Real>& y) {
  require_same("bce_with_logits", logits, y);
  const std::size_t n = logits.numel();
  Real total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real x = logits.node()->value[i];
    const Real t = y.node()->value[i];
    // max(x, 0) - x t + log(1 + exp(-|x|))
    total += std::max(x, Real(0)) - x * t + std::log1p(std::exp(-std::abs(x)));
  }
  return make_op<Real>(1, 1, {total / static_cast<Real>(n)}, {logits},
                       [logits, y, n](Node<Real>& nd) {
                         auto* g = gbuf(logits);
                         if (!g) {
                           return;
                         }
                         for (std::size_t i = 0; i < n; ++i) {
                           const Real x = logits.node()->value[i];
                           const Real s = x >= Real(0) ? Real(1) / (Real(1) + std::exp(-x))
                                                       : std::exp(x) / (Real(1) + std::exp(x));
                           (*g)[i] += nd.grad[0] * (s - y.node()->value[i]) / static_cast<Real>(n);
                         }
                       });
}

template <class Real>
T<Real> mse(const T<Real>& a, const T<Real>& b) {
  require_same("mse", a, b);
  const T<Real> d = sub(a, b);
  return mean(mul(d, d));
}

int pooled_size(int n) { return (n + 1) / 2; }

template <class Real>
T<Real> conv2d(const T<Real>& x, int batch, int h, int w, const T<Real>& weight, const T<Real>& b) {
  const int cin = x.cols();
  const int cout = weight.cols();
  const int pixels = h * w;
  if (x.rows() != batch * pixels) {
    throw ContractViolation("conv2d: input shape " + x.shape_string() + " is not " +
                            std::to_string(batch) + " images of " + std::to_string(h) + "x" +
                            std::to_string(w));
  }
  if (weight.rows() != 9 * cin) {
    shape_error("conv2d", x, weight);
  }
  if (b.rows() != 1 || b.cols() != cout) {
    shape_error("conv2d bias", weight, b);
  }
  const int rows = batch * pixels;
  const int k = 9 * cin;
  auto cols = std::make_shared<std::vector<Real>>(static_cast<std::size_t>(rows) * static_cast<std::size_t>(k),
                                                  Real(0));
  const Real* xv = x.node()->value.data();
  for (int bi = 0; bi < batch; ++bi) {
    for (int py = 0; py < h; ++py) {
      for (int px = 0; px < w; ++px) {
        Real* dst = cols->data() + static_cast<std::size_t>((bi * pixels + py * w + px)) * static_cast<std::size_t>(k);
        for (int ky = 0; ky < 3; ++ky) {
          const int sy = py + ky - 1;
          if (sy < 0 || sy >= h) {
            continue;
          }
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = px + kx - 1;
            if (sx < 0 || sx >= w) {
              continue;
            }
            const Real* src = xv + static_cast<std::size_t>(bi * pixels + sy * w + sx) * static_cast<std::size_t>(cin);
            std::copy_n(src, cin, dst + (ky * 3 + kx) * cin);
          }
        }
      }
    }
  }
  std::vector<Real> out(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cout));
  auto o = view(out, rows, cout);
  o.noalias() = view(static_cast<const std::vector<Real>&>(*cols), rows, k) * val(weight);
  o.rowwise() += val(b).row(0);
  return make_op<Real>(
      rows, cout, std::move(out), {x, weight, b},
      [x, weight, b, cols, batch, h, w, cin, k, rows](Node<Real>& nd) {
        const auto g = view(static_cast<const std::vector<Real>&>(nd.grad), nd.rows, nd.cols);
        const auto cm = view(static_cast<const std::vector<Real>&>(*cols), rows, k);
        if (auto* gw = gbuf(weight)) {
          view(*gw, weight.rows(), weight.cols()).noalias() += cm.transpose() * g;
        }
        if (auto* gb = gbuf(b)) {
          view(*gb, 1, b.cols()) += g.colwise().sum();
        }
        if (auto* gx = gbuf(x)) {
          Mat<Real> dcols = g * val(weight).transpose();
          const int pixels = h * w;
          for (int bi = 0; bi < batch; ++bi) {
            for (int py = 0; py < h; ++py) {
              for (int px = 0; px < w; ++px) {
                const Real* src = dcols.data() + static_cast<std::size_t>(bi * pixels + py * w + px) * static_cast<std::size_t>(k);
                for (int ky = 0; ky < 3; ++ky) {
                  const int sy = py + ky - 1;
                  if (sy < 0 || sy >= h) {
                    continue;
                  }
                  for (int kx = 0; kx < 3; ++kx) {
                    const int sx = px + kx - 1;
                    if (sx < 0 || sx >= w) {
                      continue;
                    }
                    Real* dst = gx->data() + static_cast<std::size_t>(bi * pixels + sy * w + sx) * static_cast<std::size_t>(cin);
                    const Real* s = src + (ky * 3 + kx) * cin;
                    for (int c = 0; c < cin; ++c) {
                      dst[c] += s[c];
                    }
                  }
                }
              }
            }
          }
        }
      });
}

template <class Real>
T<Real> maxpool2d(const T<Real>& x, int batch, int h, int w) {
  const int c = x.cols();
  if (x.rows() != batch * h * w) {
    throw ContractViolation("maxpool2d: input shape " + x.shape_string() + " is not " +
                            std::to_string(batch) + " images of " + std::to_string(h) + "x" +
                            std::to_string(w));
  }
  const int oh = pooled_size(h);
  const int ow = pooled_size(w);
  const int pad_y = std::max((oh - 1) * 2 + 3 - h, 0) / 2;
  const int pad_x = std::max((ow - 1) * 2 + 3 - w, 0) / 2;
  const std::size_t out_rows = static_cast<std::size_t>(batch) * static_cast<std::size_t>(oh * ow);
  std::vector<Real> out(out_rows * static_cast<std::size_t>(c));
  auto arg = std::make_shared<std::vector<std::size_t>>(out.size());
  const Real* xv = x.node()->value.data();
  for (int bi = 0; bi < batch; ++bi) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const std::size_t orow = static_cast<std::size_t>(bi * oh * ow + oy * ow + ox);
        for (int ch = 0; ch < c; ++ch) {
          Real best = -std::numeric_limits<Real>::infinity();
          std::size_t best_i = 0;
          for (int ky = 0; ky < 3; ++ky) {
            const int sy = oy * 2 + ky - pad_y;
            if (sy < 0 || sy >= h) {
              continue;
            }
            for (int kx = 0; kx < 3; ++kx) {
              const int sx = ox * 2 + kx - pad_x;
              if (sx < 0 || sx >= w) {
                continue;
              }
              const std::size_t i = static_cast<std::size_t>(bi * h * w + sy * w + sx) * static_cast<std::size_t>(c) +
                                    static_cast<std::size_t>(ch);
              if (xv[i] > best) {
                best = xv[i];
                best_i = i;
              }
            }
          }
          out[orow * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = best;
          (*arg)[orow * static_cast<std::size_t>(c) + static_cast<std::size_t>(ch)] = best_i;
        }
      }
    }
  }
  return make_op<Real>(static_cast<int>(out_rows), c, std::move(out), {x}, [x, arg](Node<Real>& n) {
    if (auto* gx = gbuf(x)) {
      for (std::size_t i = 0; i < arg->size(); ++i) {
        (*gx)[(*arg)[i]] += n.grad[i];
      }
    }
  });
}

#define BRICKS_AD_INSTANTIATE(R)                                                                   \
  template T<R> matmul(const T<R>&, const T<R>&);                                                  \
  template T<R> linear(const T<R>&, const T<R>&, const T<R>&);                                     \
  template T<R> add(const T<R>&, const T<R>&);                                                     \
  template T<R> sub(const T<R>&, const T<R>&);                                                     \
  template T<R> mul(const T<R>&, const T<R>&);                                                     \
  template T<R> scale(const T<R>&, R);                                                             \
  template T<R> add_scalar(const T<R>&, R);                                                        \
  template T<R> relu(const T<R>&);                                                                 \
  template T<R> sigmoid(const T<R>&);                                                              \
  template T<R> exp(const T<R>&);                                                                  \
  template T<R> clamp(const T<R>&, R, R);                                                          \
  template T<R> minimum(const T<R>&, const T<R>&);                                                 \
  template T<R> concat_cols(const std::vector<T<R>>&);                                             \
  template T<R> concat_rows(const std::vector<T<R>>&);                                             \
  template T<R> gather_rows(const T<R>&, const std::vector<int>&);                                 \
  template T<R> segment_sum(const T<R>&, const std::vector<int>&, int);                            \
  template T<R> segment_mean(const T<R>&, const std::vector<int>&, int);                           \
  template T<R> scatter_padded(const T<R>&, const std::vector<int>&, const std::vector<int>&, int, \
                               int, R);                                                            \
  template T<R> reshape(const T<R>&, int, int);                                                    \
  template T<R> sum(const T<R>&);                                                                  \
  template T<R> mean(const T<R>&);                                                                 \
  template T<R> softmax_rows(const T<R>&);                                                         \
  template T<R> masked_log_softmax(const T<R>&, const Mask&);                                      \
  template T<R> pick(const T<R>&, const std::vector<int>&);                                        \
  template T<R> masked_entropy(const T<R>&, const Mask&);                                          \
  template T<R> bce(const T<R>&, const T<R>&);                                                     \
  template T<R> bce_with_logits(const T<R>&, const T<R>&);                                         \
  template T<R> mse(const T<R>&, const T<R>&);                                                     \
  template T<R> conv2d(const T<R>&, int, int, int, const T<R>&, const T<R>&);                      \
  template T<R> maxpool2d(const T<R>&, int, int, int);

BRICKS_AD_INSTANTIATE(float)
BRICKS_AD_INSTANTIATE(double)

#undef BRICKS_AD_INSTANTIATE

}  // namespace bricks::ad
