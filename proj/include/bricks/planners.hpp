#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include "bricks/environment.hpp"

namespace bricks {

// Volume-oracle planners: they read the target's exact volume and always use
// oracle masks, so the EnvConfig must have an oracle mask source. Each
// returns the record of its chosen action sequence executed through a fresh
// Environment, so replay_episode reproduces it exactly.

/// Uniform over oracle-valid actions at every step.
EpisodeRecord random_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                          std::uint64_t seed);

/// Maximises the one-step gated reward; ties go to the lowest (pivot, offset).
EpisodeRecord greedy_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                          std::uint64_t seed = 0);

/// Keeps the `width` partial sequences with the highest cumulative gated
/// return, expanding until every kept sequence has ended. Ties keep the
/// earlier parent and then the lower (pivot, offset), so width 1 reproduces
/// greedy_plan.
EpisodeRecord beam_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg, int width,
                        std::uint64_t seed = 0);

using PoseFeature = std::array<double, 4>;

/// Real (x, y, z, dir) vector of a pose.
PoseFeature pose_feature(const BrickPose& pose);

struct GpConfig {
  double length_scale = 2.0;
  double signal_variance = 1.0;
  double jitter = 1e-8;
  /// Jitter grows by x10 per failed factorisation up to this value.
  double max_jitter = 1e-4;
};

/// Matern 5/2 covariance of two feature vectors.
double matern52(const PoseFeature& a, const PoseFeature& b, const GpConfig& cfg);

struct GpPosterior {
  double mean = 0.0;
  double variance = 0.0;
};

/// Zero-mean GP regression with fixed hyperparameters.
class GpModel {
 public:
  /// Factorises K + jitter I. Throws ContractViolation without training
  /// points and NumericalError when no jitter up to max_jitter makes the
  /// matrix positive definite.
  GpModel(std::vector<PoseFeature> inputs, std::vector<double> targets, GpConfig cfg = {});

  /// Variance is clamped at 0.
  GpPosterior posterior(const PoseFeature& x) const;
  double jitter_used() const { return jitter_; }
  std::size_t size() const { return inputs_.size(); }

 private:
  GpConfig cfg_;
  std::vector<PoseFeature> inputs_;
  double jitter_ = 0.0;
  std::vector<double> chol_;   // lower triangle, row-major n x n
  std::vector<double> alpha_;  // (K + jitter I)^-1 y
};

/// Closed-form expected improvement over `best` for maximisation; never
/// negative. With zero variance it is max(mean - best, 0).
double expected_improvement(double mean, double variance, double best);

struct BoConfig {
  int init_points = 5;
  int budget_per_step = 10;
  GpConfig gp;
};

/// Per step: candidates are the distinct poses reachable by oracle-valid
/// actions. init_points random candidates are scored by their true gated
/// reward, then budget_per_step EI-argmax candidates under a GP fitted to
/// the scores so far; the best scored candidate is committed. With at most
/// init_points candidates all are scored and the GP loop is skipped.
EpisodeRecord bo_plan(std::shared_ptr<const TargetInfo> target, const EnvConfig& cfg,
                      const BoConfig& bo, std::uint64_t seed);

}  // namespace bricks
