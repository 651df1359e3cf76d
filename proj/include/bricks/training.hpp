#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bricks/action_space.hpp"
#include "bricks/ad/ops.hpp"
#include "bricks/ad/optim.hpp"
#include "bricks/assembly.hpp"
#include "bricks/environment.hpp"
#include "bricks/models.hpp"
#include "bricks/targets.hpp"

namespace bricks {

// ---------------------------------------------------------------------------
// Validity network pretraining

struct ValidityRecord {
  AssemblyGraph graph;
  /// Oracle masks of `graph`.
  ActionMasks labels;
};

struct ValidityDataset {
  std::string split = "train";
  int min_size = 1;
  int max_size = 1;
  OffsetSetId offset_set = OffsetSetId::Full;
  Bounds bounds = Bounds::cube32();
  std::vector<ValidityRecord> records;
};

/// `count` random constructions, each grown to a uniform size in
/// [min_size, max_size], labelled by the oracle.
ValidityDataset make_validity_dataset(std::mt19937_64& rng, int count, int min_size, int max_size,
                                      OffsetSetId offsets, const Bounds& bounds,
                                      std::string split = "train");

struct AvnTrainConfig {
  int epochs = 5;
  int batch_graphs = 32;
  ad::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8, 0.5};
  std::uint64_t seed = 0;
};

/// Mean BCE over pivot and offset outputs, equally weighted.
template <class Real>
ad::Tensor<Real> avn_loss(const ValidityNet<Real>& net, const GraphBatch& batch,
                          std::span<const ValidityRecord* const> records);

/// Mean training loss per epoch. Throws NumericalError on a non-finite loss.
std::vector<double> train_avn(ValidityNet<float>& net, const ValidityDataset& data,
                              const AvnTrainConfig& cfg,
                              const std::function<void(int epoch, double loss)>& progress = {});

/// Mean avn_loss over a dataset without updating parameters.
double avn_dataset_loss(const ValidityNet<float>& net, const ValidityDataset& data);

struct CurvePoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;  // recall
  double precision = 1.0;
};

/// Scores of a binary classifier with "valid" as the positive class.
struct BinaryMetrics {
  std::size_t positives = 0;
  std::size_t negatives = 0;
  double precision = 0.0;
  double recall = 0.0;
  double roc_auc = 0.0;
  double pr_auc = 0.0;
  /// One point per distinct score, thresholds descending; ROC starts at
  /// (0, 0) and ends at (1, 1).
  std::vector<CurvePoint> curve;
};

/// Precision and recall at `threshold` (score >= threshold predicts
/// positive); curves sweep every distinct score, tied scores form a single
/// step, and the areas use the trapezoid rule.
BinaryMetrics binary_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                             double threshold);

struct AvnMetrics {
  BinaryMetrics pivot;
  BinaryMetrics offset;
};

AvnMetrics eval_avn(const ValidityNet<float>& net, const ValidityDataset& data,
                    double threshold = 0.5);

/// Columns: head,threshold,fpr,tpr,precision.
void write_curves_csv(std::ostream& out, const AvnMetrics& m);

// ---------------------------------------------------------------------------
// Policy optimisation

struct Gae {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// delta_t = r_t + gamma V_{t+1} (1 - done_t) - V_t and
/// A_t = delta_t + gamma lambda (1 - done_t) A_{t+1}, with V_T = last_value.
Gae compute_gae(std::span<const double> rewards, std::span<const double> values,
                std::span<const std::uint8_t> dones, double last_value, double gamma,
                double lambda);

/// min(r A, clip(r, 1 - eps, 1 + eps) A).
double clipped_objective(double ratio, double advantage, double eps);

struct PpoConfig {
  double gamma = 0.75;
  double lambda = 0.9;
  double clip_eps = 0.2;
  int epochs = 6;
  int minibatches = 32;
  int rollout_length = 512;
  int num_envs = 8;
  double entropy_coef = 0.01;
  double value_coef = 1.0;
  double learning_rate = 1e-4;
  double grad_clip = 0.5;
  /// Budget; training runs total_timesteps / (num_envs x rollout_length)
  /// whole iterations.
  long total_timesteps = 500'000;
  /// Iterations between held-out evaluations; 0 disables them.
  int eval_every = 1;
  int eval_episodes = 8;

  /// Defaults of the task: MNIST uses gamma 0.5 and 300k timesteps.
  static PpoConfig for_task(TaskMode mode);
  /// Throws ConfigError.
  void validate() const;
};

/// One recorded decision.
struct RolloutSample {
  AssemblyGraph graph;
  std::shared_ptr<const TargetInfo> target;
  ad::Mask pivot_mask;   // n_max entries
  ad::Mask offset_mask;  // n_off entries for the chosen pivot
  BrickAction action;
  double log_prob = 0.0;
  double value = 0.0;
  double reward = 0.0;
  bool done = false;
  double advantage = 0.0;
  double ret = 0.0;
};

struct PpoStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

/// Log-probs, entropies and values of `samples` under the current network;
/// (k x 1) each.
template <class Real>
struct PolicyEval {
  ad::Tensor<Real> log_prob;
  ad::Tensor<Real> entropy;
  ad::Tensor<Real> value;
};

template <class Real>
PolicyEval<Real> evaluate_samples(const PolicyValueNet<Real>& net,
                                  std::span<const RolloutSample* const> samples);

/// Epochs x minibatches of clipped-surrogate updates. Advantages are first
/// normalised over the whole batch (mean 0, std 1).
PpoStats ppo_update(std::vector<RolloutSample>& samples, PolicyValueNet<float>& net,
                    ad::Adam<float>& opt, const PpoConfig& cfg, std::mt19937_64& rng);

/// Acts with a policy network: samples from the masked distribution or takes
/// its mode.
class NetworkPolicy : public Policy {
 public:
  NetworkPolicy(std::shared_ptr<const PolicyValueNet<float>> net, bool greedy)
      : net_(std::move(net)), greedy_(greedy) {}
  BrickAction act(const Observation& obs, std::mt19937_64& rng) override;

 private:
  std::shared_ptr<const PolicyValueNet<float>> net_;
  bool greedy_;
};

struct PpoIteration {
  int iteration = 0;
  long timesteps = 0;
  int episodes = 0;
  double train_return = 0.0;
  double train_iou = 0.0;
  double test_return = 0.0;
  double test_iou = 0.0;
  PpoStats stats;
};

struct PpoResult {
  std::vector<PpoIteration> curve;
  /// Final IoU of every finished training episode, in completion order.
  std::vector<double> episode_ious;
};

/// Synchronous PPO: num_envs environments step in lockstep for
/// rollout_length steps, then GAE and ppo_update. Targets are drawn
/// uniformly (per environment rng) from `train`; `test` is evaluated with
/// greedy actions. Deterministic for a fixed seed.
PpoResult train_ppo(PolicyValueNet<float>& net, const EnvConfig& env_cfg,
                    const std::vector<std::shared_ptr<const TargetInfo>>& train,
                    const std::vector<std::shared_ptr<const TargetInfo>>& test,
                    const PpoConfig& cfg, std::uint64_t seed,
                    const std::function<void(const PpoIteration&)>& progress = {});

/// Columns: iteration,timesteps,episodes,train_return,train_iou,test_return,test_iou,
/// policy_loss,value_loss,entropy.
void write_curve_csv(std::ostream& out, const std::vector<PpoIteration>& curve);

/// Mean final IoU and return of `policy` over `targets`, one episode each.
struct PolicyScore {
  double mean_iou = 0.0;
  double mean_return = 0.0;
  std::vector<EpisodeRecord> records;
};
PolicyScore evaluate_policy(Policy& policy, const EnvConfig& env_cfg,
                            const std::vector<std::shared_ptr<const TargetInfo>>& targets,
                            std::uint64_t seed);

// ---------------------------------------------------------------------------
// Supervised baseline

struct SlConfig {
  int epochs = 50;
  int batch_steps = 64;
  ad::AdamConfig adam{1e-4, 0.9, 0.999, 1e-8, 0.5};
  std::uint64_t seed = 0;
};

/// One teacher-forced step: the partial graph and the action that the
/// generating sequence took next.
struct SlStep {
  AssemblyGraph graph;
  std::shared_ptr<const TargetInfo> target;
  ActionMasks masks;
  BrickAction action;
};

std::vector<SlStep> teacher_forced_steps(const std::vector<GeneratedAssembly>& data,
                                         OffsetSetId offsets, const Bounds& bounds);

struct SlResult {
  std::vector<double> loss_curve;
  double accuracy = 0.0;
};

/// Cross-entropy on the pivot and offset heads; the value head is unused.
SlResult train_supervised(PolicyValueNet<float>& net, const std::vector<SlStep>& steps,
                          const SlConfig& cfg,
                          const std::function<void(int epoch, double loss)>& progress = {});

/// Fraction of steps whose masked argmax pivot and offset both match.
double sl_accuracy(const PolicyValueNet<float>& net, const std::vector<SlStep>& steps);

}  // namespace bricks
