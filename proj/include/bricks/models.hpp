#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bricks/action_space.hpp"
#include "bricks/ad/params.hpp"
#include "bricks/ad/tensor.hpp"
#include "bricks/assembly.hpp"
#include "bricks/environment.hpp"
#include "bricks/geometry.hpp"
#include "bricks/targets.hpp"

namespace bricks {

/// Width of the CNN feature of one 14x14 view.
inline constexpr int kViewFeatureDim = 64;

/// Gnn passes messages along edges; Mlp updates every node on its own.
enum class ModelArch { Gnn, Mlp };

std::string_view to_string(ModelArch arch);
ModelArch parse_model_arch(std::string_view name);

struct ModelConfig {
  int hidden_dim = 192;
  int gnn_layers = 2;
  /// Width of the padded pivot head; must cover every episode's budget.
  int n_max = 45;
  int n_off = 92;
  int views = 3;
  /// Brick coordinates are multiplied by this before the embedding MLPs.
  double coord_scale = 0.25;
  ModelArch arch = ModelArch::Gnn;

  /// Hidden 64 and one view for MNIST; N_max 70 for ModelNet.
  static ModelConfig for_task(TaskMode mode, OffsetSetId offsets);

  /// Throws ConfigError.
  void validate() const;
  int z_dim() const { return views * kViewFeatureDim; }

  std::map<std::string, std::string> to_meta() const;
  /// Reads the keys written by to_meta; throws ConfigError on missing or
  /// malformed values.
  static ModelConfig from_meta(const std::map<std::string, std::string>& meta);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Disjoint union of assembly graphs. Edges are directed; the message of
/// edge (src, dst) is aggregated at src.
struct GraphBatch {
  int graphs = 0;
  int nodes = 0;
  std::vector<NodeFeature> node_features;
  std::vector<EdgeFeature> edge_features;
  std::vector<int> src;
  std::vector<int> dst;
  std::vector<int> node_graph;
  /// Index of each node inside its own graph.
  std::vector<int> node_pos;
  /// First node of each graph.
  std::vector<int> graph_start;
  std::vector<int> graph_size;

  void add(const AssemblyGraph& g);
  /// Adds a graph from raw node features and directed edges (local indices);
  /// edge features are derived from the node features.
  void add_raw(const std::vector<NodeFeature>& nodes, const std::vector<std::pair<int, int>>& edges);
  int edges() const { return static_cast<int>(src.size()); }

  static GraphBatch of(const AssemblyGraph& g);
  static GraphBatch of(std::span<const AssemblyGraph* const> gs);
};

template <class Real>
struct Dense {
  ad::Tensor<Real> w;
  ad::Tensor<Real> b;
  bool relu = false;

  ad::Tensor<Real> operator()(const ad::Tensor<Real>& x) const;
};

template <class Real>
Dense<Real> make_dense(ad::ParamSet<Real>& ps, const std::string& name, int in, int out, bool relu,
                       std::mt19937_64& rng, double bias_scale);

/// One message-passing step on node states V (nodes x h) and edge states E
/// (edges x h): e' = edge([v_src, v_dst, e]), m = sum of e' at src,
/// v' = node([v, m]).
template <class Real>
struct GnLayer {
  Dense<Real> edge;
  Dense<Real> node;
};

template <class Real>
std::pair<ad::Tensor<Real>, ad::Tensor<Real>> gn_layer(const GnLayer<Real>& layer,
                                                        const ad::Tensor<Real>& v,
                                                        const ad::Tensor<Real>& e,
                                                        const GraphBatch& batch);

/// Raw node (or edge) features as a (rows x 4) constant; coordinates scaled,
/// the direction bit left as is.
template <class Real>
ad::Tensor<Real> feature_tensor(const std::vector<std::array<int, 4>>& feats, double coord_scale);

/// Shared-weight CNN applied to each 14x14 view; per-view features are
/// concatenated in view order.
template <class Real>
class TargetEncoder {
 public:
  TargetEncoder() = default;
  TargetEncoder(ad::ParamSet<Real>& ps, int views, std::mt19937_64& rng, double bias_scale);

  /// (images x kViewFeatureDim) features of individual views.
  ad::Tensor<Real> encode_views(std::span<const BinaryImage* const> images) const;
  /// (targets x views * kViewFeatureDim). Throws ContractViolation on a
  /// wrong view count or size.
  ad::Tensor<Real> encode(std::span<const TargetInfo* const> targets) const;

 private:
  struct Conv {
    ad::Tensor<Real> w;
    ad::Tensor<Real> b;
    bool relu = false;
    bool pool = false;  // pool, then relu
  };
  int views_ = 0;
  std::vector<Conv> convs_;
  Dense<Real> fc_;
};

/// Policy and value network: shared embedding, two GN stacks (pivot and
/// offset), per-node pivot scorer, offset head on the chosen pivot, value
/// head on pooled node states.
template <class Real>
class PolicyValueNet {
 public:
  struct Output {
    /// (graphs x n_max); padding entries hold 0 and must be masked.
    ad::Tensor<Real> pivot_logits;
    /// (nodes x hidden) offset-stack node states.
    ad::Tensor<Real> node_offset_state;
    /// (graphs x z_dim), kept for the offset head.
    ad::Tensor<Real> z;
    /// (graphs x 1).
    ad::Tensor<Real> value;
  };

  PolicyValueNet(const ModelConfig& cfg, std::uint64_t seed, double bias_scale = 0.0);

  const ModelConfig& config() const { return cfg_; }
  ad::ParamSet<Real>& params() { return params_; }
  const ad::ParamSet<Real>& params() const { return params_; }

  ad::Tensor<Real> encode_targets(std::span<const TargetInfo* const> targets) const;
  /// `z` holds one row per graph. Throws ContractViolation when a graph has
  /// more than n_max nodes.
  Output forward(const GraphBatch& batch, const ad::Tensor<Real>& z) const;
  /// (k x n_off) offset logits for the given global node indices.
  ad::Tensor<Real> offset_logits(const Output& out, const GraphBatch& batch,
                                 const std::vector<int>& nodes) const;

 private:
  ModelConfig cfg_;
  ad::ParamSet<Real> params_;
  TargetEncoder<Real> encoder_;
  std::vector<Dense<Real>> embed_v_;
  std::vector<Dense<Real>> embed_e_;
  std::vector<GnLayer<Real>> piv_layers_;
  std::vector<GnLayer<Real>> off_layers_;
  Dense<Real> pivot_head_;
  Dense<Real> offset_head_;
  Dense<Real> value_head_;
};

/// Action-validity network: the same graph pipeline without the target
/// feature. Outputs are logits; sigmoid gives validity confidences.
template <class Real>
class ValidityNet {
 public:
  struct Output {
    ad::Tensor<Real> pivot_logits;   // nodes x 1
    ad::Tensor<Real> offset_logits;  // nodes x n_off
  };

  ValidityNet(const ModelConfig& cfg, std::uint64_t seed, double bias_scale = 0.0);

  const ModelConfig& config() const { return cfg_; }
  ad::ParamSet<Real>& params() { return params_; }
  const ad::ParamSet<Real>& params() const { return params_; }

  Output forward(const GraphBatch& batch) const;
  /// Sigmoid confidences for one graph: pivot (t) and row-major offsets
  /// (t x n_off).
  std::pair<std::vector<double>, std::vector<double>> confidences(const AssemblyGraph& g) const;
  /// Entries at or above `threshold` are valid; a pivot with no valid offset
  /// is invalid.
  ActionMasks predict(const AssemblyGraph& g, double threshold) const;

 private:
  ModelConfig cfg_;
  ad::ParamSet<Real> params_;
  std::vector<Dense<Real>> embed_v_;
  std::vector<Dense<Real>> embed_e_;
  std::vector<GnLayer<Real>> piv_layers_;
  std::vector<GnLayer<Real>> off_layers_;
  Dense<Real> pivot_head_;
  Dense<Real> offset_head_;
};

/// Environment mask source backed by a trained validity network.
class AvnMaskPredictor : public MaskPredictor {
 public:
  explicit AvnMaskPredictor(std::shared_ptr<const ValidityNet<float>> net) : net_(std::move(net)) {}
  ActionMasks predict_masks(const AssemblyGraph& graph, double threshold) const override;

 private:
  std::shared_ptr<const ValidityNet<float>> net_;
};

/// Checkpoint with the model config and a "kind" tag in its metadata.
template <class Real>
ad::Checkpoint model_checkpoint(const ModelConfig& cfg, std::string_view kind,
                                const ad::ParamSet<Real>& params);
/// Model config of a checkpoint; throws ConfigError when `kind` differs.
ModelConfig checkpoint_config(const ad::Checkpoint& ckpt, std::string_view kind);

extern template class TargetEncoder<float>;
extern template class TargetEncoder<double>;
extern template class PolicyValueNet<float>;
extern template class PolicyValueNet<double>;
extern template class ValidityNet<float>;
extern template class ValidityNet<double>;

}  // namespace bricks
