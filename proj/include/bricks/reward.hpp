#pragma once

#include <cstddef>
#include <span>

#include "bricks/geometry.hpp"
#include "bricks/voxel.hpp"

namespace bricks {

struct RewardConfig {
  /// Fraction of the new brick's cells that must lie on the target for the
  /// step to be rewarded.
  double gate_fraction = 0.5;
};

/// |a ∩ b| / |a ∪ b|; 0 when both are empty. Dimensions must match.
double iou(const VoxelGrid& a, const VoxelGrid& b);

/// iou(cur, target) - iou(prev, target).
double delta_iou(const VoxelGrid& prev, const VoxelGrid& cur, const VoxelGrid& target);

/// delta_iou when at least gate_fraction of `new_brick_cells` (grid
/// coordinates) are target cells, otherwise 0.
double step_reward(const VoxelGrid& prev, const VoxelGrid& cur,
                   std::span<const Vec3i> new_brick_cells, const VoxelGrid& target,
                   const RewardConfig& cfg);

/// Running |C ∩ T| and |C ∪ T| for an append-only construction.
class IouTracker {
 public:
  explicit IouTracker(const VoxelGrid& target);

  struct Step {
    double iou_before = 0.0;
    double iou_after = 0.0;
    int cells_on_target = 0;
  };

  /// Adds cells that are not yet occupied (grid coordinates). Cells outside
  /// the target grid count toward the union only.
  Step add_cells(std::span<const Vec3i> cells);

  double iou() const;
  std::size_t intersection() const { return intersection_; }
  std::size_t union_size() const { return union_; }

 private:
  const VoxelGrid* target_;
  std::size_t intersection_ = 0;
  std::size_t union_ = 0;
};

/// Gated reward from an IouTracker step.
double gated_reward(const IouTracker::Step& step, int brick_cells, const RewardConfig& cfg);

}  // namespace bricks
