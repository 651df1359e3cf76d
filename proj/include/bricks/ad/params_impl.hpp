#pragma once

#include "bricks/errors.hpp"

namespace bricks::ad {

template <class Real>
template <class Other>
void ParamSet<Real>::copy_from(const ParamSet<Other>& other) {
  if (other.entries().size() != entries_.size()) {
    throw ContractViolation("copy_from: parameter count mismatch");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries()[i];
    Entry& dst = entries_[i];
    if (src.name != dst.name || src.tensor.rows() != dst.tensor.rows() ||
        src.tensor.cols() != dst.tensor.cols()) {
      throw ContractViolation("copy_from: parameter '" + dst.name + "' does not match '" +
                              src.name + "'");
    }
    auto in = src.tensor.value();
    auto out = dst.tensor.value();
    for (std::size_t k = 0; k < out.size(); ++k) {
      out[k] = static_cast<Real>(in[k]);
    }
  }
}

}  // namespace bricks::ad
