#pragma once

#include <cstdint>
#include <vector>

#include "bricks/ad/tensor.hpp"

// Differentiable ops. Shape mismatches throw ContractViolation naming both
// shapes.
namespace bricks::ad {

template <class Real> using T = Tensor<Real>;
using Mask = std::vector<std::uint8_t>;

template <class Real> T<Real> matmul(const T<Real>& a, const T<Real>& b);
/// x * w + b with b a single row broadcast over x's rows.
template <class Real> T<Real> linear(const T<Real>& x, const T<Real>& w, const T<Real>& b);

template <class Real> T<Real> add(const T<Real>& a, const T<Real>& b);
template <class Real> T<Real> sub(const T<Real>& a, const T<Real>& b);
template <class Real> T<Real> mul(const T<Real>& a, const T<Real>& b);
template <class Real> T<Real> scale(const T<Real>& a, Real s);
template <class Real> T<Real> add_scalar(const T<Real>& a, Real s);

template <class Real> T<Real> relu(const T<Real>& a);
template <class Real> T<Real> sigmoid(const T<Real>& a);
template <class Real> T<Real> exp(const T<Real>& a);
/// Gradient passes only where lo < a < hi.
template <class Real> T<Real> clamp(const T<Real>& a, Real lo, Real hi);
/// Elementwise min; ties send the gradient to `a`.
template <class Real> T<Real> minimum(const T<Real>& a, const T<Real>& b);

template <class Real> T<Real> concat_cols(const std::vector<T<Real>>& parts);
template <class Real> T<Real> concat_rows(const std::vector<T<Real>>& parts);
template <class Real> T<Real> gather_rows(const T<Real>& x, const std::vector<int>& rows);
/// Row r of x is added to output row seg[r]; output has `segments` rows.
template <class Real>
T<Real> segment_sum(const T<Real>& x, const std::vector<int>& seg, int segments);
/// Segment average; empty segments give zero rows.
template <class Real>
T<Real> segment_mean(const T<Real>& x, const std::vector<int>& seg, int segments);
/// Column vector x (N x 1) laid out as a (segments x width) matrix: entry r
/// goes to (seg[r], pos[r]); unfilled entries hold `fill` and carry no
/// gradient.
template <class Real>
T<Real> scatter_padded(const T<Real>& x, const std::vector<int>& seg, const std::vector<int>& pos,
                       int segments, int width, Real fill);
template <class Real> T<Real> reshape(const T<Real>& x, int rows, int cols);

template <class Real> T<Real> sum(const T<Real>& x);
template <class Real> T<Real> mean(const T<Real>& x);

/// Row-wise softmax, stabilised by the row max.
template <class Real> T<Real> softmax_rows(const T<Real>& x);
/// Row-wise log-softmax over entries with mask != 0. Masked entries have
/// probability 0; their output value is 0 and receives no gradient. Every row
/// needs at least one unmasked entry.
template <class Real> T<Real> masked_log_softmax(const T<Real>& x, const Mask& mask);
/// out[r] = x[r, idx[r]], shape (rows, 1).
template <class Real> T<Real> pick(const T<Real>& x, const std::vector<int>& idx);
/// -sum_k exp(l) * l over unmasked entries of a masked_log_softmax output;
/// shape (rows, 1).
template <class Real> T<Real> masked_entropy(const T<Real>& logp, const Mask& mask);

/// Mean binary cross-entropy of probabilities p against labels y in {0, 1};
/// p is clamped to [eps, 1 - eps] inside the log.
template <class Real> T<Real> bce(const T<Real>& p, const T<Real>& y);
/// Mean binary cross-entropy on logits, computed stably.
template <class Real> T<Real> bce_with_logits(const T<Real>& logits, const T<Real>& y);
template <class Real> T<Real> mse(const T<Real>& a, const T<Real>& b);

/// 3x3 convolution, stride 1, zero "same" padding. x holds `batch` images of
/// h x w pixels as rows (image-major, then row-major pixels) with channels as
/// columns; w is (9 * in_channels, out_channels) with row (ky * 3 + kx) *
/// in_channels + c; b is (1, out_channels).
template <class Real>
T<Real> conv2d(const T<Real>& x, int batch, int h, int w, const T<Real>& weight, const T<Real>& b);
/// 3x3 max pool, stride 2, "same" padding: output ceil(h/2) x ceil(w/2),
/// padding split with the extra cell after the image.
template <class Real> T<Real> maxpool2d(const T<Real>& x, int batch, int h, int w);
int pooled_size(int n);

}  // namespace bricks::ad
