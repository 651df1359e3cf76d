#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "bricks/geometry.hpp"

namespace bricks {

struct TargetInfo;

/// Node feature (x, y, z, dir) of one brick.
using NodeFeature = std::array<int, 4>;
/// Edge feature (x_i - x_j, y_i - y_j, z_i - z_j, dir_i xor dir_j).
using EdgeFeature = std::array<int, 4>;

/// Assembled bricks as a graph: node index is assembly order, an edge joins
/// every pair of bricks in stud contact and is stored in both directions.
class AssemblyGraph {
 public:
  AssemblyGraph() = default;

  static AssemblyGraph single(const BrickPose& pose);

  /// Appends a brick and links it to every existing brick it touches.
  /// Overlap and bounds are the caller's responsibility.
  AssemblyGraph with_brick(const BrickPose& pose) const;

  std::size_t size() const { return nodes_.size(); }
  bool empty() const { return nodes_.empty(); }
  const BrickPose& node(std::size_t i) const { return nodes_.at(i); }
  const std::vector<BrickPose>& nodes() const { return nodes_; }

  /// Neighbours of node i in ascending index order.
  const std::vector<int>& neighbors(std::size_t i) const { return adjacency_.at(i); }

  /// All directed edges (i, j), sorted.
  std::vector<std::pair<int, int>> edges() const;
  std::size_t directed_edge_count() const;
  bool has_edge(int i, int j) const;

  NodeFeature node_feature(std::size_t i) const;
  /// Throws ContractViolation when (i, j) is not an edge.
  EdgeFeature edge_feature(int i, int j) const;

  friend bool operator==(const AssemblyGraph& a, const AssemblyGraph& b) {
    return a.nodes_ == b.nodes_ && a.adjacency_ == b.adjacency_;
  }

 private:
  std::vector<BrickPose> nodes_;
  std::vector<std::vector<int>> adjacency_;
};

/// Choice of pivot brick followed by an offset index into the active set.
struct BrickAction {
  int pivot = 0;
  int offset = 0;

  friend constexpr bool operator==(const BrickAction&, const BrickAction&) = default;
};

struct ConstructionState {
  AssemblyGraph graph;
  std::shared_ptr<const TargetInfo> target;
  int bricks_placed = 0;
  int budget = 0;
};

/// Raised by `transition` for an action whose brick overlaps an existing
/// brick or leaves the bounds.
class InvalidAction : public std::runtime_error {
 public:
  explicit InvalidAction(const BrickPose& pose);
  const BrickPose& pose() const noexcept { return pose_; }

 private:
  BrickPose pose_;
};

/// One brick at the origin with direction 0.
ConstructionState init_state(std::shared_ptr<const TargetInfo> target, int budget);

/// Brick pose produced by `action`; indices are checked.
BrickPose action_pose(const AssemblyGraph& graph, const BrickAction& action,
                      const OffsetSet& offsets);

ConstructionState transition(const ConstructionState& state, const BrickAction& action,
                             const OffsetSet& offsets, const Bounds& bounds);

/// Replays actions from the single origin brick; throws InvalidAction on the
/// first invalid one.
AssemblyGraph replay_actions(const std::vector<BrickAction>& actions, const OffsetSet& offsets,
                             const Bounds& bounds);

}  // namespace bricks
