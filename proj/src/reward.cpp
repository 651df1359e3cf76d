#include "bricks/reward.hpp"

#include <string>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

void require_same_dims(const VoxelGrid& a, const VoxelGrid& b, const char* where) {
  if (a.dims() != b.dims()) {
    const Vec3i da = a.dims();
    const Vec3i db = b.dims();
    throw ContractViolation(std::string(where) + ": grid dims " + std::to_string(da.x) + "x" +
                            std::to_string(da.y) + "x" + std::to_string(da.z) + " vs " +
                            std::to_string(db.x) + "x" + std::to_string(db.y) + "x" +
                            std::to_string(db.z));
  }
}

double ratio(std::size_t inter, std::size_t uni) {
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

bool gate_passes(int on_target, int brick_cells, const RewardConfig& cfg) {
  return static_cast<double>(on_target) >= cfg.gate_fraction * static_cast<double>(brick_cells);
}

}  // namespace

double iou(const VoxelGrid& a, const VoxelGrid& b) {
  require_same_dims(a, b, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  const auto ba = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ba.size(); ++i) {
    inter += static_cast<std::size_t>(ba[i] & bb[i]);
    uni += static_cast<std::size_t>(ba[i] | bb[i]);
  }
  return ratio(inter, uni);
}

double delta_iou(const VoxelGrid& prev, const VoxelGrid& cur, const VoxelGrid& target) {
  require_same_dims(prev, target, "delta_iou");
  require_same_dims(cur, target, "delta_iou");
  return iou(cur, target) - iou(prev, target);
}

double step_reward(const VoxelGrid& prev, const VoxelGrid& cur,
                   std::span<const Vec3i> new_brick_cells, const VoxelGrid& target,
                   const RewardConfig& cfg) {
  int on_target = 0;
  for (const Vec3i& c : new_brick_cells) {
    on_target += target.get_or_empty(c) ? 1 : 0;
  }
  if (!gate_passes(on_target, static_cast<int>(new_brick_cells.size()), cfg)) {
    return 0.0;
  }
  return delta_iou(prev, cur, target);
}

IouTracker::IouTracker(const VoxelGrid& target) : target_(&target), union_(target.volume()) {}

IouTracker::Step IouTracker::add_cells(std::span<const Vec3i> cells) {
  Step s;
  s.iou_before = iou();
  for (const Vec3i& c : cells) {
    if (target_->get_or_empty(c)) {
      ++intersection_;
      ++s.cells_on_target;
    } else {
      ++union_;
    }
  }
  s.iou_after = iou();
  return s;
}

double IouTracker::iou() const { return ratio(intersection_, union_); }

double gated_reward(const IouTracker::Step& step, int brick_cells, const RewardConfig& cfg) {
  if (!gate_passes(step.cells_on_target, brick_cells, cfg)) {
    return 0.0;
  }
  return step.iou_after - step.iou_before;
}

}  // namespace bricks
