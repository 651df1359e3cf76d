#pragma once

#include <random>
#include <set>
#include <vector>

#include "bricks/action_space.hpp"
#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"

namespace bricks::testing {

/// Random oracle-valid construction of exactly `bricks` bricks (restarts on
/// dead ends).
inline AssemblyGraph random_graph(std::mt19937_64& rng, int bricks, const OffsetSet& offsets,
                                  const Bounds& bounds) {
  for (;;) {
    AssemblyGraph g = AssemblyGraph::single(BrickPose{});
    bool ok = true;
    while (static_cast<int>(g.size()) < bricks) {
      const ActionMasks m = compute_masks(g, offsets, bounds, MaskMode::Naive);
      if (!m.any_valid()) {
        ok = false;
        break;
      }
      const BrickAction a = sample_uniform_valid(m, rng);
      g = g.with_brick(action_pose(g, a, offsets));
    }
    if (ok) {
      return g;
    }
  }
}

/// Cell-set overlap check, independent of overlaps().
inline bool cells_collide(const BrickPose& a, const BrickPose& b) {
  const Footprint fa = footprint(a);
  const Footprint fb = footprint(b);
  const std::set<Vec3i> sa(fa.begin(), fa.end());
  for (const Vec3i& c : fb) {
    if (sa.count(c)) {
      return true;
    }
  }
  return false;
}

/// Breadth-first reachability from node 0 using brute-force contacts.
inline bool brute_connected(const std::vector<BrickPose>& nodes) {
  if (nodes.empty()) {
    return true;
  }
  std::vector<bool> seen(nodes.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      if (!seen[j] && connects(nodes[i], nodes[j])) {
        seen[j] = true;
        stack.push_back(j);
      }
    }
  }
  for (bool s : seen) {
    if (!s) {
      return false;
    }
  }
  return true;
}

}  // namespace bricks::testing
