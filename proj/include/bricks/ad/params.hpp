#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "bricks/ad/tensor.hpp"

namespace bricks::ad {

/// Ordered, named parameter table of one model.
template <class Real>
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor<Real> tensor;
  };

  /// Glorot-uniform weights.
  Tensor<Real> weight(const std::string& name, int fan_in, int fan_out, std::mt19937_64& rng);
  /// Bias row; zero unless `bias_scale` > 0, then uniform in +-bias_scale.
  Tensor<Real> bias(const std::string& name, int width, std::mt19937_64& rng, double bias_scale);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor<Real>> tensors() const;
  std::size_t scalar_count() const;
  void zero_grad();
  const Tensor<Real>& at(const std::string& name) const;

  /// Copies values from another set with identical names and shapes.
  template <class Other>
  void copy_from(const ParamSet<Other>& other);

 private:
  Tensor<Real> add(const std::string& name, int rows, int cols, std::vector<Real> values);
  std::vector<Entry> entries_;
};

// Checkpoint: ASCII manifest followed by a little-endian float32 payload.
//
//   BBCKPT1
//   meta <key> <value>            (any number)
//   param <name> <rows> <cols> <byte offset>
//   payload <bytes>
//   <raw bytes>
struct Checkpoint {
  struct Param {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::vector<float> values;
  };
  std::map<std::string, std::string> meta;
  std::vector<Param> params;
};

template <class Real>
Checkpoint to_checkpoint(const ParamSet<Real>& params, std::map<std::string, std::string> meta);
/// Throws ContractViolation on a name or shape mismatch.
template <class Real>
void load_into(const Checkpoint& ckpt, ParamSet<Real>& params);

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::filesystem::path& path);

extern template class ParamSet<float>;
extern template class ParamSet<double>;

}  // namespace bricks::ad

#include "bricks/ad/params_impl.hpp"
