#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "bricks/action_space.hpp"
#include "bricks/errors.hpp"
#include "test_support.hpp"

using namespace bricks;

namespace {

// Validity straight from the definition: footprint cells against every
// brick's cells, plus the bounds check on each cell.
bool definition_valid(const AssemblyGraph& g, int pivot, const Offset& off, const Bounds& b) {
  const BrickPose q = apply_offset(g.node(static_cast<std::size_t>(pivot)), off);
  for (const Vec3i& c : footprint(q)) {
    if (!b.contains(c)) {
      return false;
    }
  }
  for (const BrickPose& p : g.nodes()) {
    if (testing::cells_collide(p, q)) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("fresh state has every full offset valid") {
  const AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  const Bounds generous{{-20, -20, -5}, {20, 20, 5}};
  const ActionMasks m = compute_masks(g, offset_set(OffsetSetId::Full), generous);
  CHECK(m.valid_count() == 92);
  CHECK(m.pivot(0));
  // On the cube32 lattice the floor removes the downward half.
  CHECK(compute_masks(g, offset_set(OffsetSetId::Full), Bounds::cube32()).valid_count() == 46);
}

TEST_CASE("the offset recreating a stacked partner is invalid for each pivot") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  g = g.with_brick(BrickPose{{0, 0, 1}, 0});
  const Bounds generous{{-20, -20, -5}, {20, 20, 5}};
  for (MaskMode mode : {MaskMode::Naive, MaskMode::Accelerated}) {
    const ActionMasks m = compute_masks(g, full, generous, mode);
    for (std::size_t k = 0; k < full.size(); ++k) {
      if (full[k] == Offset{{0, 0, 1}, 0}) {
        CHECK_FALSE(m.offset(0, static_cast<int>(k)));
      }
      if (full[k] == Offset{{0, 0, -1}, 0}) {
        CHECK_FALSE(m.offset(1, static_cast<int>(k)));
      }
    }
  }
}

TEST_CASE("naive and accelerated masks agree with the definition") {
  std::mt19937_64 rng(3);
  const Bounds b = Bounds::cube32();
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly}) {
    const OffsetSet& offs = offset_set(id);
    for (int trial = 0; trial < 40; ++trial) {
      const int n = 1 + static_cast<int>(rng() % 30);
      const AssemblyGraph g = testing::random_graph(rng, n, offs, b);
      const ActionMasks naive = compute_masks(g, offs, b, MaskMode::Naive);
      const ActionMasks fast = compute_masks(g, offs, b, MaskMode::Accelerated);
      CHECK(naive == fast);
      for (int i = 0; i < naive.num_pivots; ++i) {
        bool any = false;
        for (int k = 0; k < naive.num_offsets; ++k) {
          const bool v = definition_valid(g, i, offs[static_cast<std::size_t>(k)], b);
          CHECK(naive.offset(i, k) == v);
          CHECK(is_valid_action(g, BrickAction{i, k}, offs, b) == v);
          any = any || v;
        }
        CHECK(naive.pivot(i) == any);
      }
    }
  }
}

TEST_CASE("is_valid_action rejects out-of-range indices") {
  const AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  CHECK_THROWS_AS(is_valid_action(g, BrickAction{1, 0}, full, Bounds::cube32()), ContractViolation);
  CHECK_THROWS_AS(is_valid_action(g, BrickAction{0, -1}, full, Bounds::cube32()),
                  ContractViolation);
}

TEST_CASE("occupancy hash behaves like a set") {
  OccupancyHash h(4);
  std::set<Vec3i> ref;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5000; ++i) {
    const Vec3i c{static_cast<int>(rng() % 200) - 100, static_cast<int>(rng() % 200) - 100,
                  static_cast<int>(rng() % 20) - 10};
    h.insert(c);
    ref.insert(c);
  }
  CHECK(h.size() == ref.size());
  for (int i = 0; i < 5000; ++i) {
    const Vec3i c{static_cast<int>(rng() % 200) - 100, static_cast<int>(rng() % 200) - 100,
                  static_cast<int>(rng() % 20) - 10};
    CHECK(h.contains(c) == (ref.count(c) == 1));
  }
}

TEST_CASE("masked distribution renormalises over survivors") {
  const std::vector<double> scores{0, 0, 0, 0};
  const std::vector<std::uint8_t> mask{1, 0, 1, 0};
  const auto p = masked_distribution(scores, mask);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == 0.0);
  CHECK(p[2] == doctest::Approx(0.5));
  CHECK(p[3] == 0.0);
  const auto big = masked_distribution(std::vector<double>{1000, -1000, 999},
                                       std::vector<std::uint8_t>{1, 1, 1});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] + big[1] + big[2] == doctest::Approx(1.0));
}

TEST_CASE("single valid action is chosen with log-prob 0") {
  ActionMasks m(3, 4);
  m.set_offset(2, 1, true);
  m.refresh_pivots();
  std::mt19937_64 rng(9);
  const std::vector<double> piv{5, -3, 0.25};
  for (int i = 0; i < 50; ++i) {
    const SampledAction s = masked_sample(
        piv, [](int) { return std::vector<double>{1, 2, 3, 4}; }, m, rng);
    CHECK(s.action == BrickAction{2, 1});
    CHECK(s.log_prob == doctest::Approx(0.0));
  }
  ActionMasks empty(2, 4);
  CHECK_THROWS_AS(masked_sample(
                      piv, [](int) { return std::vector<double>{1, 2, 3, 4}; }, empty, rng),
                  NoValidAction);
  CHECK_THROWS_AS(sample_uniform_valid(empty, rng), NoValidAction);
}

TEST_CASE("empirical masked-sample frequencies match within 3 sigma") {
  ActionMasks m(3, 3);
  m.set_offset(0, 0, true);
  m.set_offset(0, 2, true);
  m.set_offset(2, 1, true);
  m.set_offset(2, 2, true);
  m.refresh_pivots();
  const std::vector<double> piv{0.3, 2.0, -0.4};
  const std::vector<std::vector<double>> off{{0.1, 0.0, 1.2}, {0, 0, 0}, {-0.5, 0.5, 0.0}};
  const auto pp = masked_distribution(piv, m.pivot_valid);
  std::vector<double> expect(9, 0.0);
  for (int i = 0; i < 3; ++i) {
    const auto po = masked_distribution(off[static_cast<std::size_t>(i)], m.offset_row(i));
    for (int k = 0; k < 3; ++k) {
      expect[static_cast<std::size_t>(i * 3 + k)] =
          pp[static_cast<std::size_t>(i)] * po[static_cast<std::size_t>(k)];
    }
  }
  std::mt19937_64 rng(1234);
  const int draws = 100000;
  std::vector<int> hits(9, 0);
  for (int d = 0; d < draws; ++d) {
    const SampledAction s = masked_sample(
        piv, [&](int i) { return off[static_cast<std::size_t>(i)]; }, m, rng);
    REQUIRE(m.offset(s.action.pivot, s.action.offset));
    const double lp = std::log(expect[static_cast<std::size_t>(s.action.pivot * 3 + s.action.offset)]);
    if (d < 100) {
      CHECK(s.log_prob == doctest::Approx(lp).epsilon(1e-12));
    }
    ++hits[static_cast<std::size_t>(s.action.pivot * 3 + s.action.offset)];
  }
  for (std::size_t j = 0; j < 9; ++j) {
    const double p = expect[j];
    const double sigma = std::sqrt(draws * p * (1 - p));
    CHECK(std::abs(hits[j] - draws * p) <= 3 * sigma + 1e-9);
    if (p == 0.0) {
      CHECK(hits[j] == 0);
    }
  }
}

TEST_CASE("uniform valid sampling covers every valid pair evenly") {
  ActionMasks m(2, 3);
  m.set_offset(0, 1, true);
  m.set_offset(1, 0, true);
  m.set_offset(1, 2, true);
  m.refresh_pivots();
  std::mt19937_64 rng(77);
  std::vector<int> hits(6, 0);
  const int draws = 30000;
  for (int d = 0; d < draws; ++d) {
    const BrickAction a = sample_uniform_valid(m, rng);
    ++hits[static_cast<std::size_t>(a.pivot * 3 + a.offset)];
  }
  CHECK(hits[0] == 0);
  CHECK(hits[2] == 0);
  CHECK(hits[4] == 0);
  const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  for (int j : {1, 3, 5}) {
    CHECK(std::abs(hits[static_cast<std::size_t>(j)] - draws / 3.0) <= 3 * sigma);
  }
}
