#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/geometry.hpp"
#include "bricks/models.hpp"
#include "bricks/targets.hpp"
#include "bricks/training.hpp"

namespace bricks {

/// Settings shared by the training and evaluation commands. Defaults are the
/// full-scale training settings; `for_task` sets the
/// task-dependent defaults (gamma 0.5 and 300k timesteps for MNIST).
struct RunConfig {
  TaskMode task = TaskMode::RandomAssembly;
  OffsetSetId offset_set = OffsetSetId::RandomAssembly;
  /// "cube32" or "mnist".
  std::string bounds = "cube32";
  std::uint64_t seed = 0;

  // PPO.
  double grad_clip = 0.5;
  double entropy_coef = 0.01;
  int rollout_length = 512;
  long total_timesteps = 500'000;
  int num_envs = 8;
  double learning_rate = 1e-4;
  double gamma = 0.75;
  double lambda = 0.9;
  int epochs = 6;
  int minibatches = 32;
  double value_coef = 1.0;
  // PPO clipping and held-out evaluation.
  double clip_eps = 0.2;
  int eval_every = 1;
  int eval_episodes = 8;

  // Model.
  int hidden_dim = 192;
  int gnn_layers = 2;
  int n_max = 45;
  ModelArch arch = ModelArch::Gnn;

  // Environment.
  double gate_fraction = 0.5;
  double invalid_action_reward = 0.0;
  /// "oracle" or "avn"; "avn" needs avn_checkpoint.
  std::string mask_source = "oracle";
  std::string avn_checkpoint;
  double avn_threshold = 0.5;

  // Validity network pretraining.
  int avn_epochs = 5;
  int avn_batch_graphs = 32;
  double avn_learning_rate = 1e-4;

  // Supervised baseline.
  int sl_epochs = 50;
  int sl_batch_steps = 64;
  double sl_learning_rate = 1e-4;

  static RunConfig for_task(TaskMode task);

  /// Sets one field from its text form. Throws ConfigError for an unknown
  /// key or a malformed value.
  void set(std::string_view key, std::string_view value);
  /// Keys in documentation order.
  static const std::vector<std::string>& keys();
  /// Text form of one field.
  std::string get(std::string_view key) const;

  Bounds bounds_value() const;
  PpoConfig ppo() const;
  ModelConfig model() const;
  /// Mask source from mask_source/avn_checkpoint (loads the checkpoint).
  EnvConfig env() const;
  AvnTrainConfig avn_training() const;
  SlConfig sl_training() const;

  /// Throws ConfigError.
  void validate() const;
};

/// Checkpoint kinds written by the training commands.
inline constexpr std::string_view kAvnKind = "avn";
inline constexpr std::string_view kPolicyKind = "policy";

std::shared_ptr<ValidityNet<float>> load_avn(const std::filesystem::path& path);
std::shared_ptr<PolicyValueNet<float>> load_policy(const std::filesystem::path& path);

/// `key = value` lines; `#` starts a comment; blank lines are skipped. A
/// `task` key, wherever it appears, first resets the task defaults. Throws
/// ConfigError naming the line.
RunConfig parse_run_config(std::istream& in, RunConfig base = {});
RunConfig load_run_config(const std::filesystem::path& path, RunConfig base = {});
/// Every key in documentation order; parse_run_config reads it back.
void write_run_config(std::ostream& out, const RunConfig& cfg);

}  // namespace bricks
