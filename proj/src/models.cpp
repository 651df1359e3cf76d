#include "bricks/models.hpp"

#include <charconv>
#include <cmath>

#include "bricks/ad/ops.hpp"
#include "bricks/errors.hpp"

namespace bricks {

using ad::Tensor;

std::string_view to_string(ModelArch arch) { return arch == ModelArch::Gnn ? "gnn" : "mlp"; }

ModelArch parse_model_arch(std::string_view name) {
  if (name == "gnn") {
    return ModelArch::Gnn;
  }
  if (name == "mlp") {
    return ModelArch::Mlp;
  }
  throw ConfigError("unknown model architecture '" + std::string(name) + "' (gnn|mlp)");
}

ModelConfig ModelConfig::for_task(TaskMode mode, OffsetSetId offsets) {
  ModelConfig c;
  c.n_off = static_cast<int>(offset_set(offsets).size());
  switch (mode) {
    case TaskMode::Mnist:
      c.hidden_dim = 64;
      c.views = 1;
      c.n_max = 45;
      break;
    case TaskMode::ModelNet:
      c.n_max = 70;
      break;
    case TaskMode::RandomAssembly:
      break;
  }
  return c;
}

void ModelConfig::validate() const {
  if (hidden_dim <= 0) {
    throw ConfigError("hidden_dim must be positive");
  }
  if (gnn_layers < 0) {
    throw ConfigError("gnn_layers must be non-negative");
  }
  if (n_max <= 0 || n_off <= 0) {
    throw ConfigError("n_max and n_off must be positive");
  }
  if (views != 1 && views != 3) {
    throw ConfigError("views must be 1 or 3");
  }
  if (!(coord_scale > 0.0) || !std::isfinite(coord_scale)) {
    throw ConfigError("coord_scale must be positive");
  }
}

std::map<std::string, std::string> ModelConfig::to_meta() const {
  char scale[32];
  auto res = std::to_chars(scale, scale + sizeof scale, coord_scale);
  return {{"hidden_dim", std::to_string(hidden_dim)},
          {"gnn_layers", std::to_string(gnn_layers)},
          {"n_max", std::to_string(n_max)},
          {"n_off", std::to_string(n_off)},
          {"views", std::to_string(views)},
          {"coord_scale", std::string(scale, res.ptr)},
          {"arch", std::string(to_string(arch))}};
}

namespace {

const std::string& meta_value(const std::map<std::string, std::string>& meta, const std::string& k) {
  auto it = meta.find(k);
  if (it == meta.end()) {
    throw ConfigError("model metadata lacks '" + k + "'");
  }
  return it->second;
}

int meta_int(const std::map<std::string, std::string>& meta, const std::string& k) {
  const std::string& s = meta_value(meta, k);
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("model metadata '" + k + "' is not an integer: " + s);
  }
  return v;
}

}  // namespace

ModelConfig ModelConfig::from_meta(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  c.hidden_dim = meta_int(meta, "hidden_dim");
  c.gnn_layers = meta_int(meta, "gnn_layers");
  c.n_max = meta_int(meta, "n_max");
  c.n_off = meta_int(meta, "n_off");
  c.views = meta_int(meta, "views");
  const std::string& s = meta_value(meta, "coord_scale");
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), c.coord_scale);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw ConfigError("model metadata 'coord_scale' is not a number: " + s);
  }
  c.arch = parse_model_arch(meta_value(meta, "arch"));
  c.validate();
  return c;
}

void GraphBatch::add(const AssemblyGraph& g) {
  const int base = nodes;
  graph_start.push_back(base);
  graph_size.push_back(static_cast<int>(g.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    node_features.push_back(g.node_feature(i));
    node_graph.push_back(graphs);
    node_pos.push_back(static_cast<int>(i));
  }
  for (const auto& [i, j] : g.edges()) {
    src.push_back(base + i);
    dst.push_back(base + j);
    edge_features.push_back(g.edge_feature(i, j));
  }
  nodes += static_cast<int>(g.size());
  ++graphs;
}

void GraphBatch::add_raw(const std::vector<NodeFeature>& feats,
                         const std::vector<std::pair<int, int>>& edge_list) {
  const int base = nodes;
  const int n = static_cast<int>(feats.size());
  graph_start.push_back(base);
  graph_size.push_back(n);
  for (int i = 0; i < n; ++i) {
    node_features.push_back(feats[static_cast<std::size_t>(i)]);
    node_graph.push_back(graphs);
    node_pos.push_back(i);
  }
  for (const auto& [i, j] : edge_list) {
    if (i < 0 || j < 0 || i >= n || j >= n) {
      throw ContractViolation("GraphBatch::add_raw: edge index out of range");
    }
    const NodeFeature& a = feats[static_cast<std::size_t>(i)];
    const NodeFeature& b = feats[static_cast<std::size_t>(j)];
    src.push_back(base + i);
    dst.push_back(base + j);
    edge_features.push_back({a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] ^ b[3]});
  }
  nodes += n;
  ++graphs;
}

GraphBatch GraphBatch::of(const AssemblyGraph& g) {
  GraphBatch b;
  b.add(g);
  return b;
}

GraphBatch GraphBatch::of(std::span<const AssemblyGraph* const> gs) {
  GraphBatch b;
  for (const AssemblyGraph* g : gs) {
    b.add(*g);
  }
  return b;
}

template <class Real>
Tensor<Real> Dense<Real>::operator()(const Tensor<Real>& x) const {
  Tensor<Real> y = ad::linear(x, w, b);
  return relu ? ad::relu(y) : y;
}

template <class Real>
Dense<Real> make_dense(ad::ParamSet<Real>& ps, const std::string& name, int in, int out, bool relu,
                       std::mt19937_64& rng, double bias_scale) {
  Dense<Real> d;
  d.w = ps.weight(name + "/w", in, out, rng);
  d.b = ps.bias(name + "/b", out, rng, bias_scale);
  d.relu = relu;
  return d;
}

template <class Real>
std::pair<Tensor<Real>, Tensor<Real>> gn_layer(const GnLayer<Real>& layer, const Tensor<Real>& v,
                                                const Tensor<Real>& e, const GraphBatch& batch) {
  const Tensor<Real> vs = ad::gather_rows(v, batch.src);
  const Tensor<Real> vd = ad::gather_rows(v, batch.dst);
  const Tensor<Real> e2 = layer.edge(ad::concat_cols<Real>({vs, vd, e}));
  const Tensor<Real> m = ad::segment_sum(e2, batch.src, batch.nodes);
  const Tensor<Real> v2 = layer.node(ad::concat_cols<Real>({v, m}));
  return {v2, e2};
}

template <class Real>
Tensor<Real> feature_tensor(const std::vector<std::array<int, 4>>& feats, double coord_scale) {
  std::vector<Real> v;
  v.reserve(feats.size() * 4);
  for (const auto& f : feats) {
    for (int k = 0; k < 3; ++k) {
      v.push_back(static_cast<Real>(f[static_cast<std::size_t>(k)] * coord_scale));
    }
    v.push_back(static_cast<Real>(f[3]));
  }
  return Tensor<Real>::constant(static_cast<int>(feats.size()), 4, std::move(v));
}

namespace {

template <class Real>
Tensor<Real> apply_mlp(const std::vector<Dense<Real>>& mlp, Tensor<Real> x) {
  for (const Dense<Real>& d : mlp) {
    x = d(x);
  }
  return x;
}

// Embedding MLP: FC+ReLU, FC+ReLU, FC linear.
template <class Real>
std::vector<Dense<Real>> make_embedding(ad::ParamSet<Real>& ps, const std::string& name, int in,
                                        int hidden, std::mt19937_64& rng, double bias_scale) {
  return {make_dense(ps, name + "/0", in, hidden, true, rng, bias_scale),
          make_dense(ps, name + "/1", hidden, hidden, true, rng, bias_scale),
          make_dense(ps, name + "/2", hidden, hidden, false, rng, bias_scale)};
}

// GN stack, or for the Mlp architecture per-node layers with the edge
// update left empty.
template <class Real>
std::vector<GnLayer<Real>> make_stack(ad::ParamSet<Real>& ps, const std::string& name,
                                      const ModelConfig& cfg, std::mt19937_64& rng,
                                      double bias_scale) {
  const int h = cfg.hidden_dim;
  std::vector<GnLayer<Real>> layers;
  for (int l = 0; l < cfg.gnn_layers; ++l) {
    const std::string p = name + "/" + std::to_string(l);
    GnLayer<Real> layer;
    if (cfg.arch == ModelArch::Gnn) {
      layer.edge = make_dense(ps, p + "/edge", 3 * h, h, true, rng, bias_scale);
      layer.node = make_dense(ps, p + "/node", 2 * h, h, true, rng, bias_scale);
    } else {
      layer.node = make_dense(ps, p + "/node", h, h, true, rng, bias_scale);
    }
    layers.push_back(std::move(layer));
  }
  return layers;
}

template <class Real>
Tensor<Real> run_stack(const std::vector<GnLayer<Real>>& layers, ModelArch arch, Tensor<Real> v,
                       Tensor<Real> e, const GraphBatch& batch) {
  for (const GnLayer<Real>& layer : layers) {
    if (arch == ModelArch::Gnn) {
      std::tie(v, e) = gn_layer(layer, v, e, batch);
    } else {
      v = layer.node(v);
    }
  }
  return v;
}

void check_batch(const GraphBatch& batch, const ModelConfig& cfg) {
  if (batch.graphs == 0) {
    throw ContractViolation("model forward: empty batch");
  }
  for (int s : batch.graph_size) {
    if (s == 0) {
      throw ContractViolation("model forward: empty graph");
    }
    if (s > cfg.n_max) {
      throw ContractViolation("model forward: graph of " + std::to_string(s) +
                              " bricks exceeds n_max " + std::to_string(cfg.n_max));
    }
  }
}

}  // namespace

template <class Real>
TargetEncoder<Real>::TargetEncoder(ad::ParamSet<Real>& ps, int views, std::mt19937_64& rng,
                                   double bias_scale)
    : views_(views) {
  struct Spec {
    int in;
    int out;
    bool relu;
    bool pool;
  };
  // 14x14x1 -> 7x7x32 -> 4x4x64 -> 64.
  const Spec specs[] = {{1, 32, false, true},   {32, 32, true, false}, {32, 32, true, false},
                        {32, 32, true, false},  {32, 32, false, false}, {32, 64, false, true},
                        {64, 64, true, false},  {64, 64, true, false}, {64, 64, true, false},
                        {64, 64, true, false}};
  int i = 0;
  for (const Spec& s : specs) {
    const std::string name = "cnn/conv" + std::to_string(i++);
    Conv c;
    c.w = ps.weight(name + "/w", 9 * s.in, s.out, rng);
    c.b = ps.bias(name + "/b", s.out, rng, bias_scale);
    c.relu = s.relu;
    c.pool = s.pool;
    convs_.push_back(std::move(c));
  }
  fc_ = make_dense(ps, "cnn/fc", 16 * 64, kViewFeatureDim, false, rng, bias_scale);
}

template <class Real>
Tensor<Real> TargetEncoder<Real>::encode_views(std::span<const BinaryImage* const> images) const {
  const int n = static_cast<int>(images.size());
  std::vector<Real> px;
  px.reserve(static_cast<std::size_t>(n) * kViewSize * kViewSize);
  for (const BinaryImage* im : images) {
    if (im->rows != kViewSize || im->cols != kViewSize) {
      throw ContractViolation("encode_views: view of " + std::to_string(im->rows) + "x" +
                              std::to_string(im->cols) + ", expected 14x14");
    }
    for (std::uint8_t p : im->pixels) {
      px.push_back(p != 0 ? Real(1) : Real(0));
    }
  }
  Tensor<Real> x = Tensor<Real>::constant(n * kViewSize * kViewSize, 1, std::move(px));
  int side = kViewSize;
  for (const Conv& c : convs_) {
    x = ad::conv2d(x, n, side, side, c.w, c.b);
    if (c.pool) {
      x = ad::maxpool2d(x, n, side, side);
      side = ad::pooled_size(side);
      x = ad::relu(x);
    } else if (c.relu) {
      x = ad::relu(x);
    }
  }
  x = ad::reshape(x, n, side * side * 64);
  return fc_(x);
}

template <class Real>
Tensor<Real> TargetEncoder<Real>::encode(std::span<const TargetInfo* const> targets) const {
  std::vector<const BinaryImage*> images;
  for (const TargetInfo* t : targets) {
    if (static_cast<int>(t->views.size()) != views_) {
      throw ContractViolation("encode: target '" + t->id + "' has " +
                              std::to_string(t->views.size()) + " views, expected " +
                              std::to_string(views_));
    }
    for (const BinaryImage& im : t->views) {
      images.push_back(&im);
    }
  }
  const Tensor<Real> f = encode_views(images);
  return ad::reshape(f, static_cast<int>(targets.size()), views_ * kViewFeatureDim);
}

template <class Real>
PolicyValueNet<Real>::PolicyValueNet(const ModelConfig& cfg, std::uint64_t seed,
                                     double bias_scale)
    : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const int h = cfg_.hidden_dim;
  const int z = cfg_.z_dim();
  encoder_ = TargetEncoder<Real>(params_, cfg_.views, rng, bias_scale);
  embed_v_ = make_embedding(params_, "embed_v", 4 + z, h, rng, bias_scale);
  if (cfg_.arch == ModelArch::Gnn) {
    embed_e_ = make_embedding(params_, "embed_e", 4 + z, h, rng, bias_scale);
  }
  piv_layers_ = make_stack(params_, "gn_piv", cfg_, rng, bias_scale);
  off_layers_ = make_stack(params_, "gn_off", cfg_, rng, bias_scale);
  pivot_head_ = make_dense(params_, "head_piv", h + z, 1, false, rng, bias_scale);
  offset_head_ = make_dense(params_, "head_off", h + z, cfg_.n_off, false, rng, bias_scale);
  value_head_ = make_dense(params_, "head_val", 2 * h + z, 1, false, rng, bias_scale);
}

template <class Real>
Tensor<Real> PolicyValueNet<Real>::encode_targets(std::span<const TargetInfo* const> targets) const {
  return encoder_.encode(targets);
}

template <class Real>
typename PolicyValueNet<Real>::Output PolicyValueNet<Real>::forward(const GraphBatch& batch,
                                                                    const Tensor<Real>& z) const {
  check_batch(batch, cfg_);
  if (z.rows() != batch.graphs || z.cols() != cfg_.z_dim()) {
    throw ContractViolation("policy forward: target feature of shape " + z.shape_string() +
                            " for " + std::to_string(batch.graphs) + " graphs");
  }
  const Tensor<Real> z_node = ad::gather_rows(z, batch.node_graph);
  const Tensor<Real> v0 = apply_mlp(
      embed_v_, ad::concat_cols<Real>({feature_tensor<Real>(batch.node_features, cfg_.coord_scale),
                                       z_node}));
  Tensor<Real> e0;
  if (cfg_.arch == ModelArch::Gnn) {
    std::vector<int> edge_graph(batch.src.size());
    for (std::size_t k = 0; k < batch.src.size(); ++k) {
      edge_graph[k] = batch.node_graph[static_cast<std::size_t>(batch.src[k])];
    }
    e0 = apply_mlp(embed_e_, ad::concat_cols<Real>(
                                 {feature_tensor<Real>(batch.edge_features, cfg_.coord_scale),
                                  ad::gather_rows(z, edge_graph)}));
  }
  const Tensor<Real> v_piv = run_stack(piv_layers_, cfg_.arch, v0, e0, batch);
  const Tensor<Real> v_off = run_stack(off_layers_, cfg_.arch, v0, e0, batch);

  Output out;
  const Tensor<Real> node_scores = pivot_head_(ad::concat_cols<Real>({v_piv, z_node}));
  out.pivot_logits = ad::scatter_padded(node_scores, batch.node_graph, batch.node_pos, batch.graphs,
                                        cfg_.n_max, Real(0));
  out.node_offset_state = v_off;
  out.z = z;
  out.value = value_head_(ad::concat_cols<Real>({ad::segment_mean(v_piv, batch.node_graph, batch.graphs),
                                                 ad::segment_mean(v_off, batch.node_graph, batch.graphs),
                                                 z}));
  return out;
}

template <class Real>
Tensor<Real> PolicyValueNet<Real>::offset_logits(const Output& out, const GraphBatch& batch,
                                                 const std::vector<int>& nodes) const {
  std::vector<int> graphs(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k] < 0 || nodes[k] >= batch.nodes) {
      throw ContractViolation("offset_logits: node index out of range");
    }
    graphs[k] = batch.node_graph[static_cast<std::size_t>(nodes[k])];
  }
  return offset_head_(ad::concat_cols<Real>(
      {ad::gather_rows(out.node_offset_state, nodes), ad::gather_rows(out.z, graphs)}));
}

template <class Real>
ValidityNet<Real>::ValidityNet(const ModelConfig& cfg, std::uint64_t seed, double bias_scale)
    : cfg_(cfg) {
  cfg_.validate();
  std::mt19937_64 rng(seed);
  const int h = cfg_.hidden_dim;
  embed_v_ = make_embedding(params_, "embed_v", 4, h, rng, bias_scale);
  if (cfg_.arch == ModelArch::Gnn) {
    embed_e_ = make_embedding(params_, "embed_e", 4, h, rng, bias_scale);
  }
  piv_layers_ = make_stack(params_, "gn_piv", cfg_, rng, bias_scale);
  off_layers_ = make_stack(params_, "gn_off", cfg_, rng, bias_scale);
  pivot_head_ = make_dense(params_, "head_piv", h, 1, false, rng, bias_scale);
  offset_head_ = make_dense(params_, "head_off", h, cfg_.n_off, false, rng, bias_scale);
}

template <class Real>
typename ValidityNet<Real>::Output ValidityNet<Real>::forward(const GraphBatch& batch) const {
  if (batch.graphs == 0) {
    throw ContractViolation("validity forward: empty batch");
  }
  const Tensor<Real> v0 =
      apply_mlp(embed_v_, feature_tensor<Real>(batch.node_features, cfg_.coord_scale));
  Tensor<Real> e0;
  if (cfg_.arch == ModelArch::Gnn) {
    e0 = apply_mlp(embed_e_, feature_tensor<Real>(batch.edge_features, cfg_.coord_scale));
  }
  const Tensor<Real> v_piv = run_stack(piv_layers_, cfg_.arch, v0, e0, batch);
  const Tensor<Real> v_off = run_stack(off_layers_, cfg_.arch, v0, e0, batch);
  return {pivot_head_(v_piv), offset_head_(v_off)};
}

template <class Real>
std::pair<std::vector<double>, std::vector<double>> ValidityNet<Real>::confidences(
    const AssemblyGraph& g) const {
  ad::NoGradGuard no_grad;
  const Output out = forward(GraphBatch::of(g));
  auto sig = [](Real x) { return 1.0 / (1.0 + std::exp(-static_cast<double>(x))); };
  std::vector<double> piv;
  std::vector<double> off;
  for (Real x : out.pivot_logits.value()) {
    piv.push_back(sig(x));
  }
  for (Real x : out.offset_logits.value()) {
    off.push_back(sig(x));
  }
  return {std::move(piv), std::move(off)};
}

template <class Real>
ActionMasks ValidityNet<Real>::predict(const AssemblyGraph& g, double threshold) const {
  const auto [piv, off] = confidences(g);
  const int t = static_cast<int>(g.size());
  ActionMasks m(t, cfg_.n_off);
  for (int i = 0; i < t; ++i) {
    bool any = false;
    for (int k = 0; k < cfg_.n_off; ++k) {
      const bool ok = off[static_cast<std::size_t>(i * cfg_.n_off + k)] >= threshold;
      m.set_offset(i, k, ok);
      any = any || ok;
    }
    const bool pivot_ok = any && piv[static_cast<std::size_t>(i)] >= threshold;
    m.pivot_valid[static_cast<std::size_t>(i)] = pivot_ok ? 1 : 0;
    if (!pivot_ok) {
      for (int k = 0; k < cfg_.n_off; ++k) {
        m.set_offset(i, k, false);
      }
    }
  }
  return m;
}

ActionMasks AvnMaskPredictor::predict_masks(const AssemblyGraph& graph, double threshold) const {
  return net_->predict(graph, threshold);
}

template <class Real>
ad::Checkpoint model_checkpoint(const ModelConfig& cfg, std::string_view kind,
                                const ad::ParamSet<Real>& params) {
  auto meta = cfg.to_meta();
  meta["kind"] = std::string(kind);
  return ad::to_checkpoint(params, std::move(meta));
}

ModelConfig checkpoint_config(const ad::Checkpoint& ckpt, std::string_view kind) {
  auto it = ckpt.meta.find("kind");
  if (it == ckpt.meta.end() || it->second != kind) {
    throw ConfigError("checkpoint is not a '" + std::string(kind) + "' model");
  }
  return ModelConfig::from_meta(ckpt.meta);
}

#define BRICKS_MODELS_INSTANTIATE(R)                                                            \
  template struct Dense<R>;                                                                     \
  template Dense<R> make_dense(ad::ParamSet<R>&, const std::string&, int, int, bool,            \
                               std::mt19937_64&, double);                                       \
  template std::pair<Tensor<R>, Tensor<R>> gn_layer(const GnLayer<R>&, const Tensor<R>&,        \
                                                    const Tensor<R>&, const GraphBatch&);       \
  template Tensor<R> feature_tensor(const std::vector<std::array<int, 4>>&, double);            \
  template class TargetEncoder<R>;                                                              \
  template class PolicyValueNet<R>;                                                             \
  template class ValidityNet<R>;                                                                \
  template ad::Checkpoint model_checkpoint(const ModelConfig&, std::string_view,                \
                                           const ad::ParamSet<R>&);

BRICKS_MODELS_INSTANTIATE(float)
BRICKS_MODELS_INSTANTIATE(double)

}  // namespace bricks
