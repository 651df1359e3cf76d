#include "bricks/planners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

struct Node {
  ConstructionState state;
  IouTracker tracker;
  double ret = 0.0;
  std::vector<BrickAction> actions;
};

struct Candidate {
  BrickAction action;
  BrickPose pose;
  double reward = 0.0;
};

struct Planner {
  std::shared_ptr<const TargetInfo> target;
  EnvConfig cfg;
  const OffsetSet* offsets;

  Planner(std::shared_ptr<const TargetInfo> t, const EnvConfig& c)
      : target(std::move(t)), cfg(c), offsets(&offset_set(c.offset_set)) {
    cfg.validate();
    if (!cfg.mask_source.is_oracle()) {
      throw ConfigError("volume-oracle planners require oracle masks");
    }
    if (!target || !target->exact_volume) {
      throw ContractViolation("planner target has no exact volume");
    }
    if (target->exact_volume->dims() != cfg.bounds.dims()) {
      throw ContractViolation("planner target grid does not match the environment bounds");
    }
  }

  // Mirrors Environment::reset.
  Node root() const {
    Node n{init_state(target, brick_budget(*target)), IouTracker(*target->exact_volume), 0.0, {}};
    const Footprint cells = grid_footprint(n.state.graph.node(0), cfg.bounds);
    n.tracker.add_cells(cells);
    return n;
  }

  Candidate evaluate(const Node& n, const BrickAction& a) const {
    Candidate c;
    c.action = a;
    c.pose = action_pose(n.state.graph, a, *offsets);
    IouTracker t = n.tracker;
    const Footprint cells = grid_footprint(c.pose, cfg.bounds);
    c.reward = gated_reward(t.add_cells(cells), kCellsPerBrick, cfg.reward);
    return c;
  }

  /// Oracle-valid actions of `n` in (pivot, offset) order; empty once the
  /// episode would have ended.
  std::vector<Candidate> candidates(const Node& n) const {
    std::vector<Candidate> out;
    if (n.state.bricks_placed >= n.state.budget) {
      return out;
    }
    const ActionMasks m = compute_masks(n.state.graph, *offsets, cfg.bounds);
    for (int p = 0; p < m.num_pivots; ++p) {
      if (!m.pivot(p)) {
        continue;
      }
      for (int k = 0; k < m.num_offsets; ++k) {
        if (m.offset(p, k)) {
          out.push_back(evaluate(n, {p, k}));
        }
      }
    }
    return out;
  }

  bool finished(const Node& n) const {
    return n.state.bricks_placed >= n.state.budget ||
           !compute_masks(n.state.graph, *offsets, cfg.bounds).any_valid();
  }

  Node child(const Node& n, const Candidate& c) const {
    Node out{transition(n.state, c.action, *offsets, cfg.bounds), n.tracker, n.ret + c.reward,
             n.actions};
    const Footprint cells = grid_footprint(c.pose, cfg.bounds);
    out.tracker.add_cells(cells);
    out.actions.push_back(c.action);
    return out;
  }

  EpisodeRecord execute(const std::vector<BrickAction>& actions, std::uint64_t seed) const {
    Environment env(cfg);
    EpisodeRecorder rec(env, target, seed);
    for (const BrickAction& a : actions) {
      if (env.done()) {
        throw ContractViolation("planner produced actions past the end of the episode");
      }
      rec.step(a);
    }
    if (!env.done()) {
      throw ContractViolation("planner stopped before the episode ended");
    }
    return rec.take();
  }
};

std::size_t argmax_first(const std::vector<Candidate>& cands) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < cands.size(); ++i) {
    if (cands[i].reward > cands[best].reward) {
      best = i;
    }
  }
  return best;
}

}  // namespace

EpisodeRecord random_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                          std::uint64_t seed) {
  const Planner pl(std::move(target), cfg);
  std::mt19937_64 rng(seed);
  Node n = pl.root();
  while (!pl.finished(n)) {
    const ActionMasks m = compute_masks(n.state.graph, *pl.offsets, pl.cfg.bounds);
    n = pl.child(n, pl.evaluate(n, sample_uniform_valid(m, rng)));
  }
  return pl.execute(n.actions, seed);
}

EpisodeRecord greedy_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                          std::uint64_t seed) {
  const Planner pl(std::move(target), cfg);
  Node n = pl.root();
  for (;;) {
    const std::vector<Candidate> cands = pl.candidates(n);
    if (cands.empty()) {
      break;
    }
    n = pl.child(n, cands[argmax_first(cands)]);
  }
  return pl.execute(n.actions, seed);
}

EpisodeRecord beam_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg, int width,
                        std::uint64_t seed) {
  if (width < 1) {
    throw ConfigError("beam width must be >= 1, got " + std::to_string(width));
  }
  const Planner pl(std::move(target), cfg);
  struct Beam {
    Node node;
    bool done = false;
  };
  struct Entry {
    double score;
    std::size_t parent;
    // Index into the parent's candidates; npos keeps a finished beam.
    std::size_t cand;
  };
  constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Beam> beams{{pl.root(), false}};
  for (;;) {
    std::vector<std::vector<Candidate>> cands(beams.size());
    std::vector<Entry> pool;
    bool expanded = false;
    for (std::size_t i = 0; i < beams.size(); ++i) {
      if (!beams[i].done) {
        cands[i] = pl.candidates(beams[i].node);
        beams[i].done = cands[i].empty();
      }
      if (beams[i].done) {
        pool.push_back({beams[i].node.ret, i, npos});
        continue;
      }
      expanded = true;
      for (std::size_t k = 0; k < cands[i].size(); ++k) {
        pool.push_back({beams[i].node.ret + cands[i][k].reward, i, k});
      }
    }
    if (!expanded) {
      break;
    }
    // Stable: equal scores keep parent order, then (pivot, offset) order.
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Entry& a, const Entry& b) { return a.score > b.score; });
    pool.resize(std::min(pool.size(), static_cast<std::size_t>(width)));
    std::vector<Beam> next;
    next.reserve(pool.size());
    for (const Entry& e : pool) {
      if (e.cand == npos) {
        next.push_back(beams[e.parent]);
      } else {
        next.push_back({pl.child(beams[e.parent].node, cands[e.parent][e.cand]), false});
      }
    }
    beams = std::move(next);
  }
  return pl.execute(beams.front().node.actions, seed);
}

PoseFeature pose_feature(const BrickPose& pose) {
  return {static_cast<double>(pose.anchor.x), static_cast<double>(pose.anchor.y),
          static_cast<double>(pose.anchor.z), static_cast<double>(pose.dir)};
}

double matern52(const PoseFeature& a, const PoseFeature& b, const GpConfig& cfg) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d2 += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const double s = std::sqrt(5.0 * d2) / cfg.length_scale;
  return cfg.signal_variance * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

namespace {

// In-place lower Cholesky factor of a row-major SPD matrix; false if a pivot
// is not positive.
bool cholesky(std::vector<double>& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) {
      d -= a[j * n + k] * a[j * n + k];
    }
    if (!(d > 0.0)) {
      return false;
    }
    const double l = std::sqrt(d);
    a[j * n + j] = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) {
        s -= a[i * n + k] * a[j * n + k];
      }
      a[i * n + j] = s / l;
    }
    for (std::size_t k = j + 1; k < n; ++k) {
      a[j * n + k] = 0.0;
    }
  }
  return true;
}

// Solves L x = b.
std::vector<double> forward_solve(const std::vector<double>& l, std::size_t n, std::vector<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      b[i] -= l[i * n + k] * b[k];
    }
    b[i] /= l[i * n + i];
  }
  return b;
}

// Solves L^T x = b.
std::vector<double> backward_solve(const std::vector<double>& l, std::size_t n, std::vector<double> b) {
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) {
      b[i] -= l[k * n + i] * b[k];
    }
    b[i] /= l[i * n + i];
  }
  return b;
}

}  // namespace

GpModel::GpModel(std::vector<PoseFeature> inputs, std::vector<double> targets, GpConfig cfg)
    : cfg_(cfg), inputs_(std::move(inputs)) {
  if (inputs_.empty()) {
    throw ContractViolation("GP needs at least one training point");
  }
  if (inputs_.size() != targets.size()) {
    throw ContractViolation("GP: " + std::to_string(inputs_.size()) + " inputs for " +
                            std::to_string(targets.size()) + " targets");
  }
  if (!(cfg_.length_scale > 0.0 && cfg_.signal_variance > 0.0 && cfg_.jitter > 0.0 &&
        cfg_.max_jitter >= cfg_.jitter)) {
    throw ConfigError("GP needs positive length scale, signal variance and jitter <= max_jitter");
  }
  const std::size_t n = inputs_.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      k[i * n + j] = matern52(inputs_[i], inputs_[j], cfg_);
    }
  }
  for (double jit = cfg_.jitter; jit <= cfg_.max_jitter * (1.0 + 1e-9); jit *= 10.0) {
    std::vector<double> a = k;
    for (std::size_t i = 0; i < n; ++i) {
      a[i * n + i] += jit;
    }
    if (cholesky(a, n)) {
      jitter_ = jit;
      chol_ = std::move(a);
      alpha_ = backward_solve(chol_, n, forward_solve(chol_, n, std::move(targets)));
      return;
    }
  }
  throw NumericalError("GP kernel matrix is not positive definite with jitter up to " +
                       std::to_string(cfg_.max_jitter));
}

GpPosterior GpModel::posterior(const PoseFeature& x) const {
  const std::size_t n = inputs_.size();
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) {
    ks[i] = matern52(inputs_[i], x, cfg_);
  }
  GpPosterior p;
  p.mean = std::inner_product(ks.begin(), ks.end(), alpha_.begin(), 0.0);
  const std::vector<double> v = forward_solve(chol_, n, std::move(ks));
  p.variance = std::max(0.0, cfg_.signal_variance - std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  return p;
}

double expected_improvement(double mean, double variance, double best) {
  const double gain = mean - best;
  const double sd = std::sqrt(std::max(0.0, variance));
  if (sd <= 0.0) {
    return std::max(0.0, gain);
  }
  const double z = gain / sd;
  const double cdf = 0.5 * std::erfc(-z / std::sqrt(2.0));
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
  return std::max(0.0, gain * cdf + sd * pdf);
}

EpisodeRecord bo_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                      const BoConfig& bo, std::uint64_t seed) {
  if (bo.init_points < 1 || bo.budget_per_step < 0) {
    throw ConfigError("bo_plan needs init_points >= 1 and budget_per_step >= 0");
  }
  const Planner pl(std::move(target), cfg);
  std::mt19937_64 rng(seed);
  Node n = pl.root();
  for (;;) {
    const std::vector<Candidate> all = pl.candidates(n);
    if (all.empty()) {
      break;
    }
    // Actions reaching the same pose are one candidate; the lowest
    // (pivot, offset) represents it.
    std::vector<Candidate> cands;
    std::map<BrickPose, bool> seen;
    for (const Candidate& c : all) {
      if (seen.emplace(c.pose, true).second) {
        cands.push_back(c);
      }
    }
    const std::size_t m = cands.size();
    std::vector<std::uint8_t> scored(m, 0);
    if (m <= static_cast<std::size_t>(bo.init_points)) {
      std::fill(scored.begin(), scored.end(), 1);
    } else {
      std::vector<std::size_t> idx(m);
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::shuffle(idx.begin(), idx.end(), rng);
      for (int i = 0; i < bo.init_points; ++i) {
        scored[idx[static_cast<std::size_t>(i)]] = 1;
      }
      for (int it = 0; it < bo.budget_per_step; ++it) {
        std::vector<PoseFeature> xs;
        std::vector<double> ys;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < m; ++i) {
          if (scored[i]) {
            xs.push_back(pose_feature(cands[i].pose));
            ys.push_back(cands[i].reward);
            best = std::max(best, cands[i].reward);
          }
        }
        if (xs.size() == m) {
          break;
        }
        const GpModel gp(std::move(xs), std::move(ys), bo.gp);
        std::size_t pick = m;
        double pick_ei = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
          if (scored[i]) {
            continue;
          }
          const GpPosterior post = gp.posterior(pose_feature(cands[i].pose));
          const double ei = expected_improvement(post.mean, post.variance, best);
          if (ei > pick_ei) {
            pick_ei = ei;
            pick = i;
          }
        }
        scored[pick] = 1;
      }
    }
    std::size_t commit = m;
    for (std::size_t i = 0; i < m; ++i) {
      if (scored[i] && (commit == m || cands[i].reward > cands[commit].reward)) {
        commit = i;
      }
    }
    n = pl.child(n, cands[commit]);
  }
  return pl.execute(n.actions, seed);
}

}  // namespace bricks
