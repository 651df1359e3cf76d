#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "bricks/ad/tensor.hpp"

namespace bricks::ad {

struct GradCheckOptions {
  /// Step is `rel_step * max(1, |theta|)`.
  double rel_step = 1e-5;
  /// Denominator floor for the relative error.
  double abs_floor = 1e-6;
  /// Elements checked per tensor; 0 checks all.
  std::size_t samples_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double analytic_at_max = 0.0;
  double numeric_at_max = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error() const;
  bool passed(double tol) const { return max_rel_error() <= tol; }
  std::string summary() const;
};

/// Compares backward() of `loss` against central differences for each named
/// input. rel = |a - n| / max(|a|, |n|, abs_floor).
GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           const std::vector<std::pair<std::string, Tensor<double>>>& inputs,
                           const GradCheckOptions& opts = {});

}  // namespace bricks::ad
