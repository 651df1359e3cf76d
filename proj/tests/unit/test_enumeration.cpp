#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "bricks/enumeration.hpp"
#include "bricks/errors.hpp"
#include "enum_oracles.hpp"
#include "test_support.hpp"

using namespace bricks;

namespace {

std::vector<BrickPose> rotated(std::vector<BrickPose> poses, int quarters, Vec3i shift) {
  for (BrickPose& p : poses) {
    for (int q = 0; q < quarters; ++q) {
      p = rotate_quarter(p);
    }
    p.anchor = p.anchor + shift;
  }
  return poses;
}

}  // namespace

TEST_CASE("single bricks share one key") {
  const CanonicalKey k = canonical_key(AssemblyGraph::single(BrickPose{}));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> c(-50, 50);
  for (int i = 0; i < 50; ++i) {
    const BrickPose p{{c(rng), c(rng), c(rng)}, i % 2};
    CHECK(canonical_key(AssemblyGraph::single(p)) == k);
  }
  CHECK(decode_key(k) == std::vector<BrickPose>{BrickPose{}});
}

TEST_CASE("keys are invariant under rotation, translation and node order") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> shift(-20, 20);
  const OffsetSet& offs = offset_set(OffsetSetId::Full);
  for (int trial = 0; trial < 200; ++trial) {
    const AssemblyGraph g = testing::random_graph(rng, 1 + trial % 12, offs, Bounds::cube32());
    const CanonicalKey k = canonical_key(g);
    for (int q = 0; q < 4; ++q) {
      CHECK(canonical_key(rotated(g.nodes(), q, {shift(rng), shift(rng), shift(rng)})) == k);
    }
    std::vector<BrickPose> shuffled = g.nodes();
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(canonical_key(shuffled) == k);
    // The decoded representative has the same key.
    CHECK(canonical_key(decode_key(k)) == k);
  }
}

TEST_CASE("keys separate exactly what the naive form separates") {
  std::mt19937_64 rng(12);
  const OffsetSet& offs = offset_set(OffsetSetId::Full);
  std::vector<std::vector<BrickPose>> gs;
  for (int i = 0; i < 300; ++i) {
    gs.push_back(testing::random_graph(rng, 3, offs, Bounds::cube32()).nodes());
  }
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (std::size_t j = i + 1; j < gs.size(); ++j) {
      CHECK((canonical_key(gs[i]) == canonical_key(gs[j])) == (testing::naive_form(gs[i]) == testing::naive_form(gs[j])));
    }
  }
}

TEST_CASE("a building and its half turn share a key, a mirror image need not") {
  const std::vector<BrickPose> l = {BrickPose{{0, 0, 0}, 0}, BrickPose{{3, 0, 1}, 1}};
  CHECK(canonical_key(l) == canonical_key(rotated(l, 2, {5, -3, 2})));
  // Mirror in x: the cross brick hangs off the other end, which a rotation
  // also reaches; a chiral three-brick shape does not.
  const std::vector<BrickPose> chiral = {BrickPose{{0, 0, 0}, 0}, BrickPose{{3, 0, 1}, 1},
                                         BrickPose{{3, 3, 0}, 0}};
  std::vector<BrickPose> mirror;
  for (const BrickPose& p : chiral) {
    mirror.push_back(BrickPose{{-(p.anchor.x + p.span_x() - 1), p.anchor.y, p.anchor.z}, p.dir});
  }
  CHECK(testing::naive_form(chiral) != testing::naive_form(mirror));
  CHECK(canonical_key(chiral) != canonical_key(mirror));
}

TEST_CASE("two-brick count agrees with Burnside") {
  const testing::BurnsideTwo b = testing::burnside_two();
  CHECK(b.placements == 46);
  CHECK(b.fixed == 2);
  const std::vector<LevelCount> levels = count_buildings(2);
  REQUIRE(levels.size() == 2);
  CHECK(levels[0].count == 1);
  CHECK(levels[1].count == static_cast<std::uint64_t>(b.orbits()));
  CHECK(levels[1].count == 24);
}

TEST_CASE("three-brick count matches the naive oracle") {
  const std::vector<LevelCount> levels = count_buildings(3);
  CHECK(levels[2].count == testing::naive_count(3));
  CHECK(levels[2].count == 1560);
}

TEST_CASE("four-brick regression value and worker independence") {
  const std::vector<LevelCount> one = count_buildings(4);
  CHECK(one.back().count == 119580);
  for (std::size_t i = 1; i < one.size(); ++i) {
    CHECK(one[i].count > one[i - 1].count);
  }
  EnumerationConfig par;
  par.jobs = 3;
  const std::vector<LevelCount> three = count_buildings(4, par);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(three[i].count == one[i].count);
    CHECK(three[i].extensions == one[i].extensions);
  }
}

TEST_CASE("memory guard reports the finished levels") {
  EnumerationConfig tight;
  tight.max_bytes = 100 * 1024;
  try {
    count_buildings(4, tight);
    FAIL("expected PartialResult");
  } catch (const PartialResult& e) {
    CHECK(e.level_reached() == 2);
    REQUIRE(e.levels().size() == 2);
    CHECK(e.levels()[1].count == 24);
  }
  CHECK_THROWS_AS(count_buildings(0), ConfigError);
}

TEST_CASE("level table csv") {
  std::ostringstream os;
  write_levels_csv(os, count_buildings(2));
  CHECK(os.str() == "bricks,count,extensions\n1,1,0\n2,24,92\n");
}
