#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/action_space.hpp"
#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"
#include "bricks/reward.hpp"
#include "bricks/targets.hpp"
#include "bricks/voxel.hpp"

namespace bricks {

/// Learned stand-in for the validity oracle.
class MaskPredictor {
 public:
  virtual ~MaskPredictor() = default;
  /// Validity masks thresholded at `threshold`.
  virtual ActionMasks predict_masks(const AssemblyGraph& graph, double threshold) const = 0;
};

struct MaskSource {
  /// Null means the exact oracle.
  std::shared_ptr<const MaskPredictor> predictor;
  double threshold = 0.5;

  static MaskSource oracle() { return {}; }
  bool is_oracle() const { return predictor == nullptr; }
};

struct EnvConfig {
  OffsetSetId offset_set = OffsetSetId::Full;
  Bounds bounds = Bounds::cube32();
  RewardConfig reward;
  MaskSource mask_source;
  double gamma = 0.75;
  /// Reward for an executed action the oracle rejects.
  double invalid_action_reward = 0.0;

  /// Checks the documented invariants; throws ConfigError.
  void validate() const;
  /// Stable 64-bit hash of the settings that affect an episode.
  std::uint64_t hash() const;
};

enum class Termination { None, BudgetExhausted, InvalidAction, NoValidAction };

std::string_view to_string(Termination t);
Termination parse_termination(std::string_view name);

struct Observation {
  AssemblyGraph graph;
  std::shared_ptr<const TargetInfo> target;
  ActionMasks masks;
  int bricks_placed = 0;
  int budget = 0;
};

struct StepInfo {
  Termination termination = Termination::None;
  double final_iou = 0.0;
  std::size_t masked_count = 0;
  BrickPose pose;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
  StepInfo info;
};

struct EpisodeStep {
  int t = 0;
  BrickAction action;
  BrickPose pose;
  double reward = 0.0;
  std::size_t masked_count = 0;
};

struct EpisodeHeader {
  std::string target_id;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  OffsetSetId offset_set = OffsetSetId::Full;
  Bounds bounds = Bounds::cube32();
  int budget = 0;
};

struct EpisodeRecord {
  EpisodeHeader header;
  std::vector<EpisodeStep> steps;
  double final_iou = 0.0;
  Termination termination = Termination::None;

  double total_reward() const;
  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&);
};

/// Episodic construction MDP over one target at a time.
class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  /// Starts a new episode from the single origin brick.
  Observation reset(std::shared_ptr<const TargetInfo> target, std::uint64_t seed);
  /// Applies one action; throws ContractViolation after the episode ended.
  StepResult step(const BrickAction& action);

  const EnvConfig& config() const { return cfg_; }
  const OffsetSet& offsets() const { return *offsets_; }
  const ConstructionState& state() const { return state_; }
  const Observation& observation() const { return obs_; }
  bool done() const { return done_; }
  Termination termination() const { return termination_; }
  double current_iou() const;
  std::uint64_t seed() const { return seed_; }

 private:
  ActionMasks masks_for(const AssemblyGraph& graph) const;
  Observation make_observation() const;

  EnvConfig cfg_;
  const OffsetSet* offsets_;
  ConstructionState state_;
  Observation obs_;
  std::optional<IouTracker> tracker_;
  std::shared_ptr<const TargetInfo> target_;
  std::uint64_t seed_ = 0;
  bool done_ = true;
  Termination termination_ = Termination::None;
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual BrickAction act(const Observation& obs, std::mt19937_64& rng) = 0;
};

/// Uniform over the observation's valid actions.
class RandomValidPolicy : public Policy {
 public:
  BrickAction act(const Observation& obs, std::mt19937_64& rng) override;
};

/// Runs reset/step until done. A policy that finds no valid action ends the
/// episode with Termination::NoValidAction.
EpisodeRecord run_episode(Policy& policy, Environment& env,
                          std::shared_ptr<const TargetInfo> target, std::uint64_t seed,
                          std::mt19937_64& rng);

/// Re-executes the record's actions through a fresh environment.
EpisodeRecord replay_episode(const EpisodeRecord& record, std::shared_ptr<const TargetInfo> target,
                             const EnvConfig& cfg);

/// Builds the step/termination bookkeeping shared by run_episode and planners.
class EpisodeRecorder {
 public:
  EpisodeRecorder(Environment& env, std::shared_ptr<const TargetInfo> target, std::uint64_t seed);
  /// Returns true when the episode finished.
  bool step(const BrickAction& action);
  void finish(Termination why);
  EpisodeRecord take();
  Environment& env() { return *env_; }

 private:
  Environment* env_;
  EpisodeRecord rec_;
};

}  // namespace bricks
