#include "bricks/assembly.hpp"

#include <algorithm>
#include <string>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

std::string describe(const BrickPose& p) {
  return "(" + std::to_string(p.anchor.x) + "," + std::to_string(p.anchor.y) + "," +
         std::to_string(p.anchor.z) + "," + std::to_string(p.dir) + ")";
}

}  // namespace

AssemblyGraph AssemblyGraph::single(const BrickPose& pose) {
  AssemblyGraph g;
  g.nodes_.push_back(pose);
  g.adjacency_.emplace_back();
  return g;
}

AssemblyGraph AssemblyGraph::with_brick(const BrickPose& pose) const {
  AssemblyGraph g = *this;
  const int id = static_cast<int>(g.nodes_.size());
  std::vector<int> contacts;
  for (int i = 0; i < id; ++i) {
    if (connects(g.nodes_[static_cast<std::size_t>(i)], pose)) {
      contacts.push_back(i);
      g.adjacency_[static_cast<std::size_t>(i)].push_back(id);
    }
  }
  g.nodes_.push_back(pose);
  g.adjacency_.push_back(std::move(contacts));
  return g;
}

std::vector<std::pair<int, int>> AssemblyGraph::edges() const {
  std::vector<std::pair<int, int>> out;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (int j : adjacency_[i]) {
      out.emplace_back(static_cast<int>(i), j);
    }
  }
  return out;
}

std::size_t AssemblyGraph::directed_edge_count() const {
  std::size_t n = 0;
  for (const auto& adj : adjacency_) {
    n += adj.size();
  }
  return n;
}

bool AssemblyGraph::has_edge(int i, int j) const {
  if (i < 0 || j < 0 || static_cast<std::size_t>(i) >= size() ||
      static_cast<std::size_t>(j) >= size()) {
    return false;
  }
  const auto& adj = adjacency_[static_cast<std::size_t>(i)];
  return std::binary_search(adj.begin(), adj.end(), j);
}

NodeFeature AssemblyGraph::node_feature(std::size_t i) const {
  const BrickPose& p = nodes_.at(i);
  return {p.anchor.x, p.anchor.y, p.anchor.z, p.dir};
}

EdgeFeature AssemblyGraph::edge_feature(int i, int j) const {
  if (!has_edge(i, j)) {
    throw ContractViolation("edge_feature: (" + std::to_string(i) + "," + std::to_string(j) +
                            ") is not an edge");
  }
  const BrickPose& a = nodes_[static_cast<std::size_t>(i)];
  const BrickPose& b = nodes_[static_cast<std::size_t>(j)];
  const Vec3i d = a.anchor - b.anchor;
  return {d.x, d.y, d.z, a.dir ^ b.dir};
}

InvalidAction::InvalidAction(const BrickPose& pose)
    : std::runtime_error("invalid action: brick " + describe(pose) +
                         " overlaps an existing brick or leaves the bounds"),
      pose_(pose) {}

ConstructionState init_state(std::shared_ptr<const TargetInfo> target, int budget) {
  if (budget < 1) {
    throw ConfigError("brick budget must be at least 1, got " + std::to_string(budget));
  }
  ConstructionState s;
  s.graph = AssemblyGraph::single(BrickPose{});
  s.target = std::move(target);
  s.bricks_placed = 1;
  s.budget = budget;
  return s;
}

BrickPose action_pose(const AssemblyGraph& graph, const BrickAction& action,
                      const OffsetSet& offsets) {
  if (action.pivot < 0 || static_cast<std::size_t>(action.pivot) >= graph.size() ||
      action.offset < 0 || static_cast<std::size_t>(action.offset) >= offsets.size()) {
    throw ContractViolation("action (" + std::to_string(action.pivot) + "," +
                            std::to_string(action.offset) + ") out of range for " +
                            std::to_string(graph.size()) + " bricks and " +
                            std::to_string(offsets.size()) + " offsets");
  }
  return apply_offset(graph.node(static_cast<std::size_t>(action.pivot)),
                      offsets[static_cast<std::size_t>(action.offset)]);
}

ConstructionState transition(const ConstructionState& state, const BrickAction& action,
                             const OffsetSet& offsets, const Bounds& bounds) {
  if (state.bricks_placed >= state.budget) {
    throw ContractViolation("transition: brick budget already exhausted");
  }
  const BrickPose pose = action_pose(state.graph, action, offsets);
  if (!bounds.contains(pose)) {
    throw InvalidAction(pose);
  }
  for (const BrickPose& other : state.graph.nodes()) {
    if (overlaps(other, pose)) {
      throw InvalidAction(pose);
    }
  }
  ConstructionState next;
  next.graph = state.graph.with_brick(pose);
  next.target = state.target;
  next.bricks_placed = state.bricks_placed + 1;
  next.budget = state.budget;
  return next;
}

AssemblyGraph replay_actions(const std::vector<BrickAction>& actions, const OffsetSet& offsets,
                             const Bounds& bounds) {
  ConstructionState s = init_state(nullptr, static_cast<int>(actions.size()) + 1);
  for (const BrickAction& a : actions) {
    s = transition(s, a, offsets, bounds);
  }
  return s.graph;
}

}  // namespace bricks
