#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include "bricks/ad/ops.hpp"
#include "bricks/errors.hpp"
#include "bricks/training.hpp"

namespace bricks {

using ad::Tensor;

Gae compute_gae(std::span<const double> rewards, std::span<const double> values,
                std::span<const std::uint8_t> dones, double last_value, double gamma,
                double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw ContractViolation("compute_gae: rewards, values and dones differ in length");
  }
  Gae g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = last_value;
  for (std::size_t k = n; k-- > 0;) {
    const double live = dones[k] ? 0.0 : 1.0;
    const double delta = rewards[k] + gamma * next_value * live - values[k];
    next_adv = delta + gamma * lambda * live * next_adv;
    g.advantages[k] = next_adv;
    g.returns[k] = next_adv + values[k];
    next_value = values[k];
  }
  return g;
}

double clipped_objective(double ratio, double advantage, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * advantage, clipped * advantage);
}

PpoConfig PpoConfig::for_task(TaskMode mode) {
  PpoConfig c;
  if (mode == TaskMode::Mnist) {
    c.gamma = 0.5;
    c.total_timesteps = 300'000;
  }
  return c;
}

void PpoConfig::validate() const {
  if (!(clip_eps > 0.0)) {
    throw ConfigError("clip_eps must be positive");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1)");
  }
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("lambda must lie in [0, 1]");
  }
  if (epochs < 1 || minibatches < 1 || rollout_length < 1 || num_envs < 1) {
    throw ConfigError("epochs, minibatches, rollout_length and num_envs must be positive");
  }
  if (!(learning_rate > 0.0) || grad_clip < 0.0 || entropy_coef < 0.0 || value_coef < 0.0) {
    throw ConfigError("learning_rate must be positive; coefficients non-negative");
  }
  if (eval_every < 0 || eval_episodes < 0) {
    throw ConfigError("eval settings must be non-negative");
  }
  if (total_timesteps < static_cast<long>(num_envs) * rollout_length) {
    throw ConfigError("total_timesteps must cover at least one rollout of num_envs x rollout_length steps");
  }
}

namespace {

// A decision as seen by the network: state, masks and the action taken.
struct Decision {
  const AssemblyGraph* graph;
  const TargetInfo* target;
  const ad::Mask* pivot_mask;
  const ad::Mask* offset_mask;
  BrickAction action;
};

template <class Real>
PolicyEval<Real> evaluate_decisions(const PolicyValueNet<Real>& net,
                                    const std::vector<Decision>& ds) {
  GraphBatch batch;
  std::map<const TargetInfo*, int> target_row;
  std::vector<const TargetInfo*> unique;
  std::vector<int> graph_target;
  ad::Mask pmask;
  ad::Mask omask;
  std::vector<int> pivots;
  std::vector<int> offsets;
  std::vector<int> nodes;
  for (const Decision& d : ds) {
    auto [it, fresh] = target_row.emplace(d.target, static_cast<int>(unique.size()));
    if (fresh) {
      unique.push_back(d.target);
    }
    graph_target.push_back(it->second);
    nodes.push_back(batch.nodes + d.action.pivot);
    batch.add(*d.graph);
    pmask.insert(pmask.end(), d.pivot_mask->begin(), d.pivot_mask->end());
    omask.insert(omask.end(), d.offset_mask->begin(), d.offset_mask->end());
    pivots.push_back(d.action.pivot);
    offsets.push_back(d.action.offset);
  }
  const Tensor<Real> z = ad::gather_rows(net.encode_targets(unique), graph_target);
  const auto out = net.forward(batch, z);
  const Tensor<Real> lp = ad::masked_log_softmax(out.pivot_logits, pmask);
  const Tensor<Real> lo = ad::masked_log_softmax(net.offset_logits(out, batch, nodes), omask);
  return {ad::add(ad::pick(lp, pivots), ad::pick(lo, offsets)),
          ad::add(ad::masked_entropy(lp, pmask), ad::masked_entropy(lo, omask)), out.value};
}

Decision decision_of(const RolloutSample& s) {
  return {&s.graph, s.target.get(), &s.pivot_mask, &s.offset_mask, s.action};
}

ad::Mask padded_pivot_mask(const ActionMasks& m, int n_max) {
  ad::Mask out(static_cast<std::size_t>(n_max), 0);
  std::copy(m.pivot_valid.begin(), m.pivot_valid.end(), out.begin());
  return out;
}

ad::Mask offset_mask_row(const ActionMasks& m, int pivot) {
  const auto row = m.offset_row(pivot);
  return ad::Mask(row.begin(), row.end());
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Masked argmax; ties go to the lowest index.
int masked_argmax(std::span<const double> scores, std::span<const std::uint8_t> mask) {
  int best = -1;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && (best < 0 || scores[i] > scores[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) {
    throw NoValidAction();
  }
  return best;
}

std::vector<double> row_of(const Tensor<float>& t, int r, int count) {
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = t.at(r, k);
  }
  return out;
}

// Forward pass over one state per environment, no tape.
struct BatchedForward {
  GraphBatch batch;
  PolicyValueNet<float>::Output out;
};

BatchedForward forward_states(const PolicyValueNet<float>& net,
                              const std::vector<const AssemblyGraph*>& graphs,
                              const std::vector<std::vector<float>>& z_rows) {
  BatchedForward f;
  for (const AssemblyGraph* g : graphs) {
    f.batch.add(*g);
  }
  std::vector<float> z;
  for (const auto& row : z_rows) {
    z.insert(z.end(), row.begin(), row.end());
  }
  const int zd = net.config().z_dim();
  f.out = net.forward(f.batch, Tensor<float>::constant(static_cast<int>(z_rows.size()), zd, std::move(z)));
  return f;
}

std::vector<float> encode_one(const PolicyValueNet<float>& net, const TargetInfo& t) {
  const TargetInfo* p[] = {&t};
  const Tensor<float> z = net.encode_targets(p);
  return std::vector<float>(z.value().begin(), z.value().end());
}

}  // namespace

template <class Real>
PolicyEval<Real> evaluate_samples(const PolicyValueNet<Real>& net,
                                  std::span<const RolloutSample* const> samples) {
  std::vector<Decision> ds;
  ds.reserve(samples.size());
  for (const RolloutSample* s : samples) {
    ds.push_back(decision_of(*s));
  }
  return evaluate_decisions(net, ds);
}

template PolicyEval<float> evaluate_samples(const PolicyValueNet<float>&,
                                            std::span<const RolloutSample* const>);
template PolicyEval<double> evaluate_samples(const PolicyValueNet<double>&,
                                             std::span<const RolloutSample* const>);

PpoStats ppo_update(std::vector<RolloutSample>& samples, PolicyValueNet<float>& net,
                    ad::Adam<float>& opt, const PpoConfig& cfg, std::mt19937_64& rng) {
  if (samples.empty()) {
    throw ContractViolation("ppo_update: empty batch");
  }
  double mu = 0.0;
  for (const RolloutSample& s : samples) {
    mu += s.advantage;
  }
  mu /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const RolloutSample& s : samples) {
    var += (s.advantage - mu) * (s.advantage - mu);
  }
  const double sd = std::sqrt(var / static_cast<double>(samples.size()));
  std::vector<double> adv(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    adv[i] = (samples[i].advantage - mu) / (sd + 1e-8);
  }

  const std::size_t n = samples.size();
  const std::size_t mb = std::max<std::size_t>(1, (n + static_cast<std::size_t>(cfg.minibatches) - 1) /
                                                       static_cast<std::size_t>(cfg.minibatches));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  PpoStats stats;
  int updates = 0;
  const float eps = static_cast<float>(cfg.clip_eps);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t end = std::min(n, start + mb);
      const int k = static_cast<int>(end - start);
      std::vector<const RolloutSample*> ptrs;
      std::vector<float> old_lp;
      std::vector<float> a;
      std::vector<float> ret;
      for (std::size_t i = start; i < end; ++i) {
        const RolloutSample& s = samples[order[i]];
        ptrs.push_back(&s);
        old_lp.push_back(static_cast<float>(s.log_prob));
        a.push_back(static_cast<float>(adv[order[i]]));
        ret.push_back(static_cast<float>(s.ret));
      }
      const PolicyEval<float> ev = evaluate_samples(net, ptrs);
      const Tensor<float> A = Tensor<float>::constant(k, 1, a);
      const Tensor<float> ratio =
          ad::exp(ad::sub(ev.log_prob, Tensor<float>::constant(k, 1, old_lp)));
      const Tensor<float> surr1 = ad::mul(ratio, A);
      const Tensor<float> surr2 = ad::mul(ad::clamp(ratio, 1.0f - eps, 1.0f + eps), A);
      const Tensor<float> policy_loss = ad::scale(ad::mean(ad::minimum(surr1, surr2)), -1.0f);
      const Tensor<float> value_loss = ad::mse(ev.value, Tensor<float>::constant(k, 1, ret));
      const Tensor<float> entropy = ad::mean(ev.entropy);
      const Tensor<float> loss =
          ad::sub(ad::add(policy_loss, ad::scale(value_loss, static_cast<float>(cfg.value_coef))),
                  ad::scale(entropy, static_cast<float>(cfg.entropy_coef)));
      if (!std::isfinite(loss.item())) {
        throw NumericalError("ppo_update: non-finite loss (policy " +
                             std::to_string(policy_loss.item()) + ", value " +
                             std::to_string(value_loss.item()) + ")");
      }
      opt.zero_grad();
      ad::backward(loss);
      opt.step();

      double kl = 0.0;
      double clipped = 0.0;
      for (int i = 0; i < k; ++i) {
        kl += old_lp[static_cast<std::size_t>(i)] - ev.log_prob.at(i, 0);
        clipped += std::abs(ratio.at(i, 0) - 1.0f) > eps ? 1.0 : 0.0;
      }
      stats.policy_loss += policy_loss.item();
      stats.value_loss += value_loss.item();
      stats.entropy += entropy.item();
      stats.approx_kl += kl / k;
      stats.clip_fraction += clipped / k;
      ++updates;
    }
  }
  stats.policy_loss /= updates;
  stats.value_loss /= updates;
  stats.entropy /= updates;
  stats.approx_kl /= updates;
  stats.clip_fraction /= updates;
  return stats;
}

BrickAction NetworkPolicy::act(const Observation& obs, std::mt19937_64& rng) {
  ad::NoGradGuard no_grad;
  const ModelConfig& cfg = net_->config();
  const std::vector<float> z = encode_one(*net_, *obs.target);
  const BatchedForward f = forward_states(*net_, {&obs.graph}, {z});
  const int t = static_cast<int>(obs.graph.size());
  const std::vector<double> piv = row_of(f.out.pivot_logits, 0, t);
  auto offset_scores = [&](int pivot) {
    return row_of(net_->offset_logits(f.out, f.batch, {pivot}), 0, cfg.n_off);
  };
  if (!greedy_) {
    return masked_sample(piv, offset_scores, obs.masks, rng).action;
  }
  const int pivot = masked_argmax(piv, obs.masks.pivot_valid);
  const int offset = masked_argmax(offset_scores(pivot), obs.masks.offset_row(pivot));
  return {pivot, offset};
}

PolicyScore evaluate_policy(Policy& policy, const EnvConfig& env_cfg,
                            const std::vector<std::shared_ptr<const TargetInfo>>& targets,
                            std::uint64_t seed) {
  PolicyScore s;
  Environment env(env_cfg);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::mt19937_64 rng(seed + i);
    s.records.push_back(run_episode(policy, env, targets[i], seed + i, rng));
    s.mean_iou += s.records.back().final_iou;
    s.mean_return += s.records.back().total_reward();
  }
  if (!targets.empty()) {
    s.mean_iou /= static_cast<double>(targets.size());
    s.mean_return /= static_cast<double>(targets.size());
  }
  return s;
}

PpoResult train_ppo(PolicyValueNet<float>& net, const EnvConfig& env_cfg,
                    const std::vector<std::shared_ptr<const TargetInfo>>& train,
                    const std::vector<std::shared_ptr<const TargetInfo>>& test,
                    const PpoConfig& cfg, std::uint64_t seed,
                    const std::function<void(const PpoIteration&)>& progress) {
  cfg.validate();
  env_cfg.validate();
  if (train.empty()) {
    throw ConfigError("train_ppo: no training targets");
  }
  const ModelConfig& mcfg = net.config();
  const int E = cfg.num_envs;
  ad::Adam<float> opt(net.params().tensors(),
                      ad::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.grad_clip});
  std::mt19937_64 update_rng(seed);
  std::vector<std::mt19937_64> env_rng;
  std::vector<Environment> envs;
  for (int e = 0; e < E; ++e) {
    env_rng.emplace_back(seed * 1000003ULL + static_cast<std::uint64_t>(e) + 1);
    envs.emplace_back(env_cfg);
  }
  std::vector<std::vector<float>> z(static_cast<std::size_t>(E));
  std::vector<double> ep_return(static_cast<std::size_t>(E), 0.0);
  std::uint64_t episode_counter = 0;

  PpoResult result;
  std::vector<double> iter_returns;
  std::vector<double> iter_ious;
  auto finish_episode = [&](int e) {
    iter_returns.push_back(ep_return[static_cast<std::size_t>(e)]);
    iter_ious.push_back(envs[static_cast<std::size_t>(e)].current_iou());
    result.episode_ious.push_back(iter_ious.back());
    ep_return[static_cast<std::size_t>(e)] = 0.0;
  };
  // Starts episodes until one has a decision to make.
  auto start_episode = [&](int e) {
    auto& rng = env_rng[static_cast<std::size_t>(e)];
    std::uniform_int_distribution<std::size_t> pick(0, train.size() - 1);
    for (int tries = 0; tries < 1000; ++tries) {
      const auto& target = train[pick(rng)];
      envs[static_cast<std::size_t>(e)].reset(target, seed + (++episode_counter));
      if (!envs[static_cast<std::size_t>(e)].done()) {
        ad::NoGradGuard no_grad;
        z[static_cast<std::size_t>(e)] = encode_one(net, *target);
        return;
      }
      finish_episode(e);
    }
    throw ConfigError("train_ppo: training targets end before the first action");
  };
  for (int e = 0; e < E; ++e) {
    start_episode(e);
  }
  iter_returns.clear();
  iter_ious.clear();

  const long per_iter = static_cast<long>(E) * cfg.rollout_length;
  // Whole iterations only, so training never exceeds the timestep budget.
  const long iterations = cfg.total_timesteps / per_iter;
  long timesteps = 0;
  for (long it = 0; it < iterations; ++it) {
    std::vector<std::vector<RolloutSample>> traj(static_cast<std::size_t>(E));
    for (int step = 0; step < cfg.rollout_length; ++step) {
      std::vector<const AssemblyGraph*> graphs;
      for (const Environment& env : envs) {
        graphs.push_back(&env.observation().graph);
      }
      ad::NoGradGuard no_grad;
      const BatchedForward f = forward_states(net, graphs, z);
      for (int e = 0; e < E; ++e) {
        Environment& env = envs[static_cast<std::size_t>(e)];
        const Observation& obs = env.observation();
        const int t = static_cast<int>(obs.graph.size());
        const int base = f.batch.graph_start[static_cast<std::size_t>(e)];
        const std::vector<double> piv = row_of(f.out.pivot_logits, e, t);
        auto offset_scores = [&](int pivot) {
          return row_of(net.offset_logits(f.out, f.batch, {base + pivot}), 0, mcfg.n_off);
        };
        const SampledAction sa =
            masked_sample(piv, offset_scores, obs.masks, env_rng[static_cast<std::size_t>(e)]);
        RolloutSample s;
        s.graph = obs.graph;
        s.target = obs.target;
        s.pivot_mask = padded_pivot_mask(obs.masks, mcfg.n_max);
        s.offset_mask = offset_mask_row(obs.masks, sa.action.pivot);
        s.action = sa.action;
        s.log_prob = sa.log_prob;
        s.value = f.out.value.at(e, 0);
        const StepResult r = env.step(sa.action);
        s.reward = r.reward;
        s.done = r.done;
        ep_return[static_cast<std::size_t>(e)] += r.reward;
        traj[static_cast<std::size_t>(e)].push_back(std::move(s));
        if (r.done) {
          finish_episode(e);
          start_episode(e);
        }
      }
    }
    timesteps += per_iter;

    // Bootstrap values for unfinished trajectories.
    std::vector<double> last_values(static_cast<std::size_t>(E), 0.0);
    {
      std::vector<const AssemblyGraph*> graphs;
      for (const Environment& env : envs) {
        graphs.push_back(&env.observation().graph);
      }
      ad::NoGradGuard no_grad;
      const BatchedForward f = forward_states(net, graphs, z);
      for (int e = 0; e < E; ++e) {
        last_values[static_cast<std::size_t>(e)] = f.out.value.at(e, 0);
      }
    }
    std::vector<RolloutSample> batch;
    for (int e = 0; e < E; ++e) {
      auto& tr = traj[static_cast<std::size_t>(e)];
      std::vector<double> rew;
      std::vector<double> val;
      std::vector<std::uint8_t> done;
      for (const RolloutSample& s : tr) {
        rew.push_back(s.reward);
        val.push_back(s.value);
        done.push_back(s.done ? 1 : 0);
      }
      const Gae g = compute_gae(rew, val, done, last_values[static_cast<std::size_t>(e)], cfg.gamma,
                                cfg.lambda);
      for (std::size_t k = 0; k < tr.size(); ++k) {
        tr[k].advantage = g.advantages[k];
        tr[k].ret = g.returns[k];
        batch.push_back(std::move(tr[k]));
      }
    }
    PpoIteration row;
    row.iteration = static_cast<int>(it);
    row.stats = ppo_update(batch, net, opt, cfg, update_rng);
    row.timesteps = timesteps;
    row.episodes = static_cast<int>(iter_returns.size());
    row.train_return = mean_of(iter_returns);
    row.train_iou = mean_of(iter_ious);
    row.test_return = std::numeric_limits<double>::quiet_NaN();
    row.test_iou = std::numeric_limits<double>::quiet_NaN();
    if (cfg.eval_every > 0 && !test.empty() && (it + 1) % cfg.eval_every == 0) {
      // Non-owning handle: the network outlives the evaluation.
      std::shared_ptr<const PolicyValueNet<float>> handle(&net, [](const PolicyValueNet<float>*) {});
      NetworkPolicy greedy(handle, true);
      std::vector<std::shared_ptr<const TargetInfo>> subset;
      for (int i = 0; i < cfg.eval_episodes; ++i) {
        subset.push_back(test[static_cast<std::size_t>(i) % test.size()]);
      }
      const PolicyScore sc = evaluate_policy(greedy, env_cfg, subset, seed + 777);
      row.test_return = sc.mean_return;
      row.test_iou = sc.mean_iou;
    }
    iter_returns.clear();
    iter_ious.clear();
    result.curve.push_back(row);
    if (progress) {
      progress(row);
    }
  }
  return result;
}

void write_curve_csv(std::ostream& out, const std::vector<PpoIteration>& curve) {
  out << "iteration,timesteps,episodes,train_return,train_iou,test_return,test_iou,policy_loss,"
         "value_loss,entropy\n";
  for (const PpoIteration& r : curve) {
    out << r.iteration << ',' << r.timesteps << ',' << r.episodes << ',' << r.train_return << ','
        << r.train_iou << ',' << r.test_return << ',' << r.test_iou << ',' << r.stats.policy_loss
        << ',' << r.stats.value_loss << ',' << r.stats.entropy << '\n';
  }
}

std::vector<SlStep> teacher_forced_steps(const std::vector<GeneratedAssembly>& data,
                                         OffsetSetId offsets, const Bounds& bounds) {
  const OffsetSet& offs = offset_set(offsets);
  std::vector<SlStep> steps;
  for (const GeneratedAssembly& a : data) {
    auto target = std::make_shared<const TargetInfo>(a.target);
    AssemblyGraph g = AssemblyGraph::single(BrickPose{});
    for (const BrickAction& act : a.actions) {
      ActionMasks m = compute_masks(g, offs, bounds);
      if (!is_valid_action(g, act, offs, bounds)) {
        throw ContractViolation("teacher_forced_steps: recorded action is invalid");
      }
      AssemblyGraph next = g.with_brick(action_pose(g, act, offs));
      steps.push_back({std::move(g), target, std::move(m), act});
      g = std::move(next);
    }
  }
  return steps;
}

namespace {

std::vector<Decision> sl_decisions(const std::vector<SlStep>& steps, std::size_t begin,
                                   std::size_t end, const std::vector<std::size_t>& order,
                                   int n_max, std::vector<ad::Mask>& pivot_masks,
                                   std::vector<ad::Mask>& offset_masks) {
  std::vector<Decision> ds;
  pivot_masks.clear();
  offset_masks.clear();
  pivot_masks.reserve(end - begin);
  offset_masks.reserve(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const SlStep& s = steps[order[i]];
    pivot_masks.push_back(padded_pivot_mask(s.masks, n_max));
    offset_masks.push_back(offset_mask_row(s.masks, s.action.pivot));
    ds.push_back({&s.graph, s.target.get(), &pivot_masks.back(), &offset_masks.back(), s.action});
  }
  return ds;
}

}  // namespace

SlResult train_supervised(PolicyValueNet<float>& net, const std::vector<SlStep>& steps,
                          const SlConfig& cfg, const std::function<void(int, double)>& progress) {
  if (steps.empty()) {
    throw ContractViolation("train_supervised: no steps");
  }
  ad::Adam<float> opt(net.params().tensors(), cfg.adam);
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(steps.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  SlResult res;
  std::vector<ad::Mask> pm;
  std::vector<ad::Mask> om;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_steps)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_steps));
      const auto ds = sl_decisions(steps, start, end, order, net.config().n_max, pm, om);
      const PolicyEval<float> ev = evaluate_decisions(net, ds);
      const Tensor<float> loss = ad::scale(ad::mean(ev.log_prob), -1.0f);
      if (!std::isfinite(loss.item())) {
        throw NumericalError("train_supervised: non-finite loss at epoch " + std::to_string(epoch));
      }
      opt.zero_grad();
      ad::backward(loss);
      opt.step();
      total += loss.item() * static_cast<double>(end - start);
    }
    res.loss_curve.push_back(total / static_cast<double>(steps.size()));
    if (progress) {
      progress(epoch, res.loss_curve.back());
    }
  }
  res.accuracy = sl_accuracy(net, steps);
  return res;
}

double sl_accuracy(const PolicyValueNet<float>& net, const std::vector<SlStep>& steps) {
  if (steps.empty()) {
    return 0.0;
  }
  ad::NoGradGuard no_grad;
  const int n_off = net.config().n_off;
  std::size_t hits = 0;
  for (const SlStep& s : steps) {
    const std::vector<float> z = encode_one(net, *s.target);
    const BatchedForward f = forward_states(net, {&s.graph}, {z});
    const int t = static_cast<int>(s.graph.size());
    const int pivot = masked_argmax(row_of(f.out.pivot_logits, 0, t), s.masks.pivot_valid);
    if (pivot != s.action.pivot) {
      continue;
    }
    const int offset =
        masked_argmax(row_of(net.offset_logits(f.out, f.batch, {pivot}), 0, n_off),
                      s.masks.offset_row(pivot));
    hits += offset == s.action.offset ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(steps.size());
}

}  // namespace bricks
