#include "bricks/environment.hpp"

#include <cstring>
#include <string>
#include <utility>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

class Fnv1a {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void i64(std::int64_t v) { bytes(&v, sizeof v); }
  void f64(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    bytes(&bits, sizeof bits);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

void EnvConfig::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ConfigError("gamma must lie in [0, 1), got " + std::to_string(gamma));
  }
  if (!mask_source.is_oracle() && !(mask_source.threshold > 0.0 && mask_source.threshold < 1.0)) {
    throw ConfigError("mask threshold must lie in (0, 1), got " +
                      std::to_string(mask_source.threshold));
  }
  if (!(reward.gate_fraction >= 0.0 && reward.gate_fraction <= 1.0)) {
    throw ConfigError("gate_fraction must lie in [0, 1], got " +
                      std::to_string(reward.gate_fraction));
  }
  const Vec3i d = bounds.dims();
  if (d.x <= 0 || d.y <= 0 || d.z <= 0) {
    throw ConfigError("bounds must have positive extent");
  }
  if (!bounds.contains(BrickPose{})) {
    throw ConfigError("bounds must contain the origin brick");
  }
}

std::uint64_t EnvConfig::hash() const {
  Fnv1a h;
  h.i64(static_cast<std::int64_t>(offset_set));
  for (int v : {bounds.min.x, bounds.min.y, bounds.min.z, bounds.max.x, bounds.max.y, bounds.max.z}) {
    h.i64(v);
  }
  h.f64(reward.gate_fraction);
  h.i64(mask_source.is_oracle() ? 0 : 1);
  if (!mask_source.is_oracle()) {
    h.f64(mask_source.threshold);
  }
  h.f64(gamma);
  h.f64(invalid_action_reward);
  return h.value();
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::None: return "none";
    case Termination::BudgetExhausted: return "budget_exhausted";
    case Termination::InvalidAction: return "invalid_action";
    case Termination::NoValidAction: return "no_valid_action";
  }
  throw ContractViolation("unknown termination");
}

Termination parse_termination(std::string_view name) {
  for (Termination t : {Termination::None, Termination::BudgetExhausted,
                        Termination::InvalidAction, Termination::NoValidAction}) {
    if (to_string(t) == name) {
      return t;
    }
  }
  throw ConfigError("unknown termination '" + std::string(name) + "'");
}

double EpisodeRecord::total_reward() const {
  double s = 0.0;
  for (const EpisodeStep& st : steps) {
    s += st.reward;
  }
  return s;
}

bool operator==(const EpisodeRecord& a, const EpisodeRecord& b) {
  auto header_eq = [](const EpisodeHeader& x, const EpisodeHeader& y) {
    return x.target_id == y.target_id && x.seed == y.seed && x.config_hash == y.config_hash &&
           x.offset_set == y.offset_set && x.bounds == y.bounds && x.budget == y.budget;
  };
  auto step_eq = [](const EpisodeStep& x, const EpisodeStep& y) {
    return x.t == y.t && x.action == y.action && x.pose == y.pose && x.reward == y.reward &&
           x.masked_count == y.masked_count;
  };
  if (!header_eq(a.header, b.header) || a.steps.size() != b.steps.size() ||
      a.final_iou != b.final_iou || a.termination != b.termination) {
    return false;
  }
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (!step_eq(a.steps[i], b.steps[i])) {
      return false;
    }
  }
  return true;
}

Environment::Environment(EnvConfig cfg) : cfg_(std::move(cfg)), offsets_(&offset_set(cfg_.offset_set)) {
  cfg_.validate();
}

ActionMasks Environment::masks_for(const AssemblyGraph& graph) const {
  if (cfg_.mask_source.is_oracle()) {
    return compute_masks(graph, *offsets_, cfg_.bounds);
  }
  ActionMasks m = cfg_.mask_source.predictor->predict_masks(graph, cfg_.mask_source.threshold);
  if (m.num_pivots != static_cast<int>(graph.size()) ||
      m.num_offsets != static_cast<int>(offsets_->size())) {
    throw ContractViolation("mask predictor returned masks of the wrong shape");
  }
  return m;
}

Observation Environment::make_observation() const {
  Observation o;
  o.graph = state_.graph;
  o.target = target_;
  o.masks = masks_for(state_.graph);
  o.bricks_placed = state_.bricks_placed;
  o.budget = state_.budget;
  return o;
}

Observation Environment::reset(std::shared_ptr<const TargetInfo> target, std::uint64_t seed) {
  if (!target) {
    throw ContractViolation("reset: null target");
  }
  if (!target->exact_volume || target->exact_volume->volume() == 0) {
    throw EmptyTarget("target '" + target->id + "' has no occupied cells");
  }
  if (target->exact_volume->dims() != cfg_.bounds.dims()) {
    throw ContractViolation("reset: target grid does not match the environment bounds");
  }
  target_ = std::move(target);
  seed_ = seed;
  state_ = init_state(target_, brick_budget(*target_));
  tracker_.emplace(*target_->exact_volume);
  const Footprint cells = grid_footprint(state_.graph.node(0), cfg_.bounds);
  tracker_->add_cells(cells);
  obs_ = make_observation();
  termination_ = Termination::None;
  done_ = false;
  if (state_.bricks_placed >= state_.budget) {
    done_ = true;
    termination_ = Termination::BudgetExhausted;
  } else if (!obs_.masks.any_valid()) {
    done_ = true;
    termination_ = Termination::NoValidAction;
  }
  return obs_;
}

double Environment::current_iou() const { return tracker_ ? tracker_->iou() : 0.0; }

StepResult Environment::step(const BrickAction& action) {
  if (done_) {
    throw ContractViolation("step called on a finished episode");
  }
  if (action.pivot < 0 || action.pivot >= static_cast<int>(state_.graph.size()) ||
      action.offset < 0 || action.offset >= static_cast<int>(offsets_->size())) {
    throw ContractViolation("step: action index out of range");
  }
  StepResult r;
  r.info.masked_count = obs_.masks.offset_valid.size() - obs_.masks.valid_count();
  r.info.pose = action_pose(state_.graph, action, *offsets_);

  // The oracle has the final word even when a learned predictor built the masks.
  if (!is_valid_action(state_.graph, action, *offsets_, cfg_.bounds)) {
    done_ = true;
    termination_ = Termination::InvalidAction;
    r.reward = cfg_.invalid_action_reward;
    r.done = true;
    r.info.termination = termination_;
    r.info.final_iou = current_iou();
    r.observation = obs_;
    return r;
  }

  state_ = transition(state_, action, *offsets_, cfg_.bounds);
  const Footprint cells = grid_footprint(r.info.pose, cfg_.bounds);
  const IouTracker::Step s = tracker_->add_cells(cells);
  r.reward = gated_reward(s, kCellsPerBrick, cfg_.reward);
  obs_ = make_observation();
  if (state_.bricks_placed >= state_.budget) {
    done_ = true;
    termination_ = Termination::BudgetExhausted;
  } else if (!obs_.masks.any_valid()) {
    done_ = true;
    termination_ = Termination::NoValidAction;
  }
  r.done = done_;
  r.info.termination = termination_;
  r.info.final_iou = current_iou();
  r.observation = obs_;
  return r;
}

BrickAction RandomValidPolicy::act(const Observation& obs, std::mt19937_64& rng) {
  return sample_uniform_valid(obs.masks, rng);
}

EpisodeRecorder::EpisodeRecorder(Environment& env, std::shared_ptr<const TargetInfo> target,
                                 std::uint64_t seed)
    : env_(&env) {
  rec_.header.target_id = target ? target->id : std::string();
  rec_.header.seed = seed;
  rec_.header.config_hash = env.config().hash();
  rec_.header.offset_set = env.config().offset_set;
  rec_.header.bounds = env.config().bounds;
  env.reset(std::move(target), seed);
  rec_.header.budget = env.state().budget;
  if (env.done()) {
    finish(env.termination());
  }
}

bool EpisodeRecorder::step(const BrickAction& action) {
  const StepResult r = env_->step(action);
  EpisodeStep st;
  st.t = static_cast<int>(rec_.steps.size());
  st.action = action;
  st.pose = r.info.pose;
  st.reward = r.reward;
  st.masked_count = r.info.masked_count;
  rec_.steps.push_back(st);
  if (r.done) {
    finish(r.info.termination);
  }
  return r.done;
}

void EpisodeRecorder::finish(Termination why) {
  rec_.termination = why;
  rec_.final_iou = env_->current_iou();
}

EpisodeRecord EpisodeRecorder::take() { return std::move(rec_); }

EpisodeRecord run_episode(Policy& policy, Environment& env, std::shared_ptr<const TargetInfo> target,
                          std::uint64_t seed, std::mt19937_64& rng) {
  EpisodeRecorder rec(env, std::move(target), seed);
  while (!env.done()) {
    BrickAction a;
    try {
      a = policy.act(env.observation(), rng);
    } catch (const NoValidAction&) {
      rec.finish(Termination::NoValidAction);
      break;
    }
    rec.step(a);
  }
  return rec.take();
}

EpisodeRecord replay_episode(const EpisodeRecord& record, std::shared_ptr<const TargetInfo> target,
                             const EnvConfig& cfg) {
  Environment env(cfg);
  EpisodeRecorder rec(env, std::move(target), record.header.seed);
  for (const EpisodeStep& st : record.steps) {
    if (env.done()) {
      throw ContractViolation("replay: record has steps past the end of the episode");
    }
    rec.step(st.action);
  }
  if (!env.done()) {
    // Record ended early, e.g. a policy that found no valid action.
    rec.finish(record.termination);
  }
  return rec.take();
}

}  // namespace bricks
