#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bricks/ad/ops.hpp"
#include "bricks/errors.hpp"
#include "bricks/training.hpp"

namespace bricks {

using ad::Tensor;

ValidityDataset make_validity_dataset(std::mt19937_64& rng, int count, int min_size, int max_size,
                                      OffsetSetId offsets, const Bounds& bounds, std::string split) {
  if (count < 0 || min_size < 1 || max_size < min_size) {
    throw ConfigError("validity dataset needs count >= 0 and 1 <= min_size <= max_size");
  }
  ValidityDataset d;
  d.split = std::move(split);
  d.min_size = min_size;
  d.max_size = max_size;
  d.offset_set = offsets;
  d.bounds = bounds;
  const OffsetSet& offs = offset_set(offsets);
  std::uniform_int_distribution<int> size(min_size, max_size);
  d.records.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int n = size(rng);
    RandomConstruction c = random_construction(rng, n, offs, bounds);
    ActionMasks labels = compute_masks(c.graph, offs, bounds);
    d.records.push_back({std::move(c.graph), std::move(labels)});
  }
  return d;
}

template <class Real>
Tensor<Real> avn_loss(const ValidityNet<Real>& net, const GraphBatch& batch,
                      std::span<const ValidityRecord* const> records) {
  const int n_off = net.config().n_off;
  std::vector<Real> py;
  std::vector<Real> oy;
  py.reserve(static_cast<std::size_t>(batch.nodes));
  oy.reserve(static_cast<std::size_t>(batch.nodes) * static_cast<std::size_t>(n_off));
  for (const ValidityRecord* r : records) {
    if (r->labels.num_offsets != n_off) {
      throw ContractViolation("avn_loss: labels have " + std::to_string(r->labels.num_offsets) +
                              " offsets, network has " + std::to_string(n_off));
    }
    for (std::uint8_t b : r->labels.pivot_valid) {
      py.push_back(b ? Real(1) : Real(0));
    }
    for (std::uint8_t b : r->labels.offset_valid) {
      oy.push_back(b ? Real(1) : Real(0));
    }
  }
  if (static_cast<int>(py.size()) != batch.nodes) {
    throw ContractViolation("avn_loss: labels do not match the batch");
  }
  const auto out = net.forward(batch);
  const Tensor<Real> lp = ad::bce_with_logits(out.pivot_logits, Tensor<Real>::constant(batch.nodes, 1, py));
  const Tensor<Real> lo =
      ad::bce_with_logits(out.offset_logits, Tensor<Real>::constant(batch.nodes, n_off, oy));
  return ad::scale(ad::add(lp, lo), Real(0.5));
}

template Tensor<float> avn_loss(const ValidityNet<float>&, const GraphBatch&,
                                std::span<const ValidityRecord* const>);
template Tensor<double> avn_loss(const ValidityNet<double>&, const GraphBatch&,
                                 std::span<const ValidityRecord* const>);

namespace {

GraphBatch batch_of(std::span<const ValidityRecord* const> recs) {
  GraphBatch b;
  for (const ValidityRecord* r : recs) {
    b.add(r->graph);
  }
  return b;
}

}  // namespace

std::vector<double> train_avn(ValidityNet<float>& net, const ValidityDataset& data,
                              const AvnTrainConfig& cfg,
                              const std::function<void(int, double)>& progress) {
  if (data.records.empty()) {
    throw ContractViolation("train_avn: empty dataset");
  }
  if (cfg.epochs < 0 || cfg.batch_graphs < 1) {
    throw ConfigError("train_avn: epochs must be >= 0 and batch_graphs >= 1");
  }
  ad::Adam<float> opt(net.params().tensors(), cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> curve;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_graphs)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_graphs));
      std::vector<const ValidityRecord*> recs;
      for (std::size_t k = start; k < end; ++k) {
        recs.push_back(&data.records[order[k]]);
      }
      const Tensor<float> loss = avn_loss(net, batch_of(recs), recs);
      const double l = loss.item();
      if (!std::isfinite(l)) {
        throw NumericalError("train_avn: non-finite loss at epoch " + std::to_string(epoch) +
                             ", records " + std::to_string(start) + ".." + std::to_string(end));
      }
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      total += l * static_cast<double>(recs.size());
      seen += recs.size();
    }
    curve.push_back(total / static_cast<double>(seen));
    if (progress) {
      progress(epoch, curve.back());
    }
  }
  return curve;
}

double avn_dataset_loss(const ValidityNet<float>& net, const ValidityDataset& data) {
  if (data.records.empty()) {
    throw ContractViolation("avn_dataset_loss: empty dataset");
  }
  ad::NoGradGuard no_grad;
  double total = 0.0;
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < data.records.size(); start += chunk) {
    const std::size_t end = std::min(data.records.size(), start + chunk);
    std::vector<const ValidityRecord*> recs;
    for (std::size_t k = start; k < end; ++k) {
      recs.push_back(&data.records[k]);
    }
    total += static_cast<double>(avn_loss(net, batch_of(recs), recs).item()) *
             static_cast<double>(recs.size());
  }
  return total / static_cast<double>(data.records.size());
}

BinaryMetrics binary_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             double threshold) {
  if (scores.size() != labels.size()) {
    throw ContractViolation("binary_metrics: " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(labels.size()) + " labels");
  }
  BinaryMetrics m;
  std::size_t tp_at = 0;
  std::size_t fp_at = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pos = labels[i] != 0;
    (pos ? m.positives : m.negatives)++;
    if (scores[i] >= threshold) {
      (pos ? tp_at : fp_at)++;
    }
  }
  // No predicted positives gives precision 0; no positives gives recall 0.
  m.precision = tp_at + fp_at > 0 ? static_cast<double>(tp_at) / static_cast<double>(tp_at + fp_at) : 0.0;
  m.recall = m.positives > 0 ? static_cast<double>(tp_at) / static_cast<double>(m.positives) : 0.0;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double P = static_cast<double>(m.positives);
  const double N = static_cast<double>(m.negatives);
  m.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0, 1.0});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double s = scores[order[k]];
    while (k < order.size() && scores[order[k]] == s) {
      (labels[order[k]] ? tp : fp)++;
      ++k;
    }
    CurvePoint p;
    p.threshold = s;
    p.fpr = N > 0 ? static_cast<double>(fp) / N : 0.0;
    p.tpr = P > 0 ? static_cast<double>(tp) / P : 0.0;
    p.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.curve.push_back(p);
  }
  if (m.positives == 0 || m.negatives == 0) {
    m.roc_auc = std::numeric_limits<double>::quiet_NaN();
  } else {
    double auc = 0.0;
    for (std::size_t i = 1; i < m.curve.size(); ++i) {
      auc += (m.curve[i].fpr - m.curve[i - 1].fpr) * (m.curve[i].tpr + m.curve[i - 1].tpr) / 2.0;
    }
    m.roc_auc = auc;
  }
  if (m.positives == 0) {
    m.pr_auc = std::numeric_limits<double>::quiet_NaN();
  } else {
    double auc = 0.0;
    for (std::size_t i = 1; i < m.curve.size(); ++i) {
      auc += (m.curve[i].tpr - m.curve[i - 1].tpr) *
             (m.curve[i].precision + m.curve[i - 1].precision) / 2.0;
    }
    m.pr_auc = auc;
  }
  return m;
}

AvnMetrics eval_avn(const ValidityNet<float>& net, const ValidityDataset& data, double threshold) {
  std::vector<double> ps;
  std::vector<std::uint8_t> pl;
  std::vector<double> os;
  std::vector<std::uint8_t> ol;
  for (const ValidityRecord& r : data.records) {
    const auto [piv, off] = net.confidences(r.graph);
    ps.insert(ps.end(), piv.begin(), piv.end());
    pl.insert(pl.end(), r.labels.pivot_valid.begin(), r.labels.pivot_valid.end());
    os.insert(os.end(), off.begin(), off.end());
    ol.insert(ol.end(), r.labels.offset_valid.begin(), r.labels.offset_valid.end());
  }
  return {binary_metrics(ps, pl, threshold), binary_metrics(os, ol, threshold)};
}

void write_curves_csv(std::ostream& out, const AvnMetrics& m) {
  out << "head,threshold,fpr,tpr,precision\n";
  for (const auto& [name, bm] : {std::pair{"pivot", &m.pivot}, std::pair{"offset", &m.offset}}) {
    for (const CurvePoint& p : bm->curve) {
      out << name << ',' << p.threshold << ',' << p.fpr << ',' << p.tpr << ',' << p.precision << '\n';
    }
  }
}

}  // namespace bricks
