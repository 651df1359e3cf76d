#include <doctest.h>

#include <random>

#include "bricks/assembly.hpp"
#include "bricks/errors.hpp"
#include "test_support.hpp"

using namespace bricks;

TEST_CASE("init_state places the origin brick") {
  const ConstructionState s = init_state(nullptr, 10);
  CHECK(s.graph.size() == 1);
  CHECK(s.graph.node(0) == BrickPose{});
  CHECK(s.graph.node_feature(0) == NodeFeature{0, 0, 0, 0});
  CHECK(s.graph.directed_edge_count() == 0);
  CHECK(s.bricks_placed == 1);
  CHECK(s.budget == 10);
  const ConstructionState one = init_state(nullptr, 1);
  CHECK(one.bricks_placed == one.budget);
  CHECK_THROWS_AS(init_state(nullptr, 0), ConfigError);
}

TEST_CASE("edge features follow the anchor difference and direction xor") {
  AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  g = g.with_brick(BrickPose{{2, 0, 1}, 1});
  REQUIRE(g.has_edge(0, 1));
  CHECK(g.edge_feature(0, 1) == EdgeFeature{-2, 0, -1, 1});
  const EdgeFeature back = g.edge_feature(1, 0);
  CHECK(back == EdgeFeature{2, 0, 1, 1});
  g = g.with_brick(BrickPose{{10, 10, 0}, 0});
  CHECK_THROWS_AS(g.edge_feature(0, 2), ContractViolation);
}

TEST_CASE("edge features are translation invariant") {
  std::mt19937_64 rng(7);
  const AssemblyGraph g = testing::random_graph(rng, 12, offset_set(OffsetSetId::Full),
                                                Bounds::cube32());
  const Vec3i t{3, -2, 5};
  AssemblyGraph moved = AssemblyGraph::single(BrickPose{g.node(0).anchor + t, g.node(0).dir});
  for (std::size_t i = 1; i < g.size(); ++i) {
    moved = moved.with_brick(BrickPose{g.node(i).anchor + t, g.node(i).dir});
  }
  REQUIRE(moved.edges() == g.edges());
  for (const auto& [i, j] : g.edges()) {
    CHECK(moved.edge_feature(i, j) == g.edge_feature(i, j));
  }
}

TEST_CASE("transition adds edges to every touching brick") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  ConstructionState s = init_state(nullptr, 10);
  int up = -1;
  for (std::size_t k = 0; k < full.size(); ++k) {
    if (full[k] == Offset{{0, 0, 1}, 0}) {
      up = static_cast<int>(k);
    }
  }
  REQUIRE(up >= 0);
  s = transition(s, BrickAction{0, up}, full, Bounds::cube32());
  CHECK(s.graph.size() == 2);
  CHECK(s.graph.directed_edge_count() == 2);
  CHECK(s.bricks_placed == 2);

  // A brick bridging two side-by-side bricks from above touches both.
  AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  g = g.with_brick(BrickPose{{4, 0, 0}, 0});
  g = g.with_brick(BrickPose{{2, 0, 1}, 0});
  CHECK(g.directed_edge_count() == 4);
  CHECK(g.has_edge(2, 0));
  CHECK(g.has_edge(2, 1));
  CHECK_FALSE(g.has_edge(0, 1));

  ConstructionState overlap = init_state(nullptr, 10);
  overlap = transition(overlap, BrickAction{0, up}, full, Bounds::cube32());
  CHECK_THROWS_AS(transition(overlap, BrickAction{0, up}, full, Bounds::cube32()), InvalidAction);
  try {
    transition(overlap, BrickAction{0, up}, full, Bounds::cube32());
  } catch (const InvalidAction& e) {
    CHECK(e.pose() == BrickPose{{0, 0, 1}, 0});
  }
}

TEST_CASE("transition rejects out-of-bounds and past-budget actions") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  int down = -1;
  for (std::size_t k = 0; k < full.size(); ++k) {
    if (full[k] == Offset{{0, 0, -1}, 0}) {
      down = static_cast<int>(k);
    }
  }
  const ConstructionState s = init_state(nullptr, 3);
  CHECK_THROWS_AS(transition(s, BrickAction{0, down}, full, Bounds::cube32()), InvalidAction);
  CHECK_THROWS_AS(transition(init_state(nullptr, 1), BrickAction{0, 0}, full, Bounds::cube32()),
                  ContractViolation);
  CHECK_THROWS_AS(transition(s, BrickAction{1, 0}, full, Bounds::cube32()), ContractViolation);
  CHECK_THROWS_AS(transition(s, BrickAction{0, 92}, full, Bounds::cube32()), ContractViolation);
}

TEST_CASE("random valid constructions keep the graph invariants") {
  std::mt19937_64 rng(11);
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly, OffsetSetId::ModelNet}) {
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 25);
      const AssemblyGraph g = testing::random_graph(rng, n, offset_set(id), Bounds::cube32());
      CHECK(g.size() == static_cast<std::size_t>(n));
      std::size_t edges = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
          if (i == j) {
            continue;
          }
          CHECK_FALSE(testing::cells_collide(g.node(i), g.node(j)));
          const bool c = connects(g.node(i), g.node(j));
          CHECK(g.has_edge(static_cast<int>(i), static_cast<int>(j)) == c);
          edges += c ? 1 : 0;
        }
      }
      CHECK(g.directed_edge_count() == edges);
      CHECK(testing::brute_connected(g.nodes()));
    }
  }
}

TEST_CASE("replaying actions reproduces the graph") {
  std::mt19937_64 rng(5);
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  ConstructionState s = init_state(nullptr, 20);
  std::vector<BrickAction> actions;
  while (s.bricks_placed < s.budget) {
    const ActionMasks m = compute_masks(s.graph, full, Bounds::cube32());
    const BrickAction a = sample_uniform_valid(m, rng);
    actions.push_back(a);
    s = transition(s, a, full, Bounds::cube32());
  }
  CHECK(replay_actions(actions, full, Bounds::cube32()) == s.graph);
}
