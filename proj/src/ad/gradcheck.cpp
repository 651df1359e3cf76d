#include "bricks/ad/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "bricks/errors.hpp"

namespace bricks::ad {

double GradCheckReport::max_rel_error() const {
  double m = 0.0;
  for (const GradCheckEntry& e : entries) {
    m = std::max(m, e.max_rel_error);
  }
  return m;
}

std::string GradCheckReport::summary() const {
  std::ostringstream out;
  for (const GradCheckEntry& e : entries) {
    out << e.name << ": checked " << e.checked << ", max rel err " << e.max_rel_error
        << " (analytic " << e.analytic_at_max << ", numeric " << e.numeric_at_max << ")\n";
  }
  return out.str();
}

GradCheckReport grad_check(const std::function<Tensor<double>()>& loss,
                           const std::vector<std::pair<std::string, Tensor<double>>>& inputs,
                           const GradCheckOptions& opts) {
  for (const auto& [name, t] : inputs) {
    if (!t.requires_grad()) {
      throw ContractViolation("grad_check: input '" + name + "' does not require a gradient");
    }
    t.node()->grad.clear();
  }
  const Tensor<double> l = loss();
  backward(l);
  std::mt19937_64 rng(opts.seed);
  GradCheckReport report;
  for (const auto& [name, t] : inputs) {
    const std::vector<double> analytic = t.grad();
    std::vector<std::size_t> idx(t.numel());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (opts.samples_per_tensor > 0 && opts.samples_per_tensor < idx.size()) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opts.samples_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    GradCheckEntry e;
    e.name = name;
    std::vector<double>& v = t.node()->value;
    for (std::size_t i : idx) {
      const double orig = v[i];
      const double h = opts.rel_step * std::max(1.0, std::abs(orig));
      double plus = 0.0;
      double minus = 0.0;
      {
        NoGradGuard ng;
        v[i] = orig + h;
        plus = loss().item();
        v[i] = orig - h;
        minus = loss().item();
        v[i] = orig;
      }
      const double numeric = (plus - minus) / (2.0 * h);
      const double a = analytic[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      ++e.checked;
      if (rel > e.max_rel_error || !std::isfinite(rel)) {
        e.max_rel_error = std::isfinite(rel) ? rel : std::numeric_limits<double>::infinity();
        e.analytic_at_max = a;
        e.numeric_at_max = numeric;
      }
    }
    report.entries.push_back(e);
  }
  return report;
}

}  // namespace bricks::ad
