#include <doctest.h>

#include <algorithm>
#include <set>
#include <tuple>

#include "bricks/errors.hpp"
#include "bricks/geometry.hpp"

using namespace bricks;

namespace {

// Stud columns of a pose computed cell by cell, independent of shared_studs().
std::set<std::pair<int, int>> columns(const BrickPose& p) {
  std::set<std::pair<int, int>> out;
  const int sx = p.dir == 0 ? 4 : 2;
  const int sy = p.dir == 0 ? 2 : 4;
  for (int x = 0; x < sx; ++x) {
    for (int y = 0; y < sy; ++y) {
      out.insert({p.anchor.x + x, p.anchor.y + y});
    }
  }
  return out;
}

int brute_shared(const BrickPose& a, const BrickPose& b) {
  const auto ca = columns(a);
  const auto cb = columns(b);
  int n = 0;
  for (const auto& c : ca) {
    n += static_cast<int>(cb.count(c));
  }
  return n;
}

bool brute_overlap(const BrickPose& a, const BrickPose& b) {
  return a.anchor.z == b.anchor.z && brute_shared(a, b) > 0;
}

bool brute_connect(const BrickPose& a, const BrickPose& b) {
  return std::abs(a.anchor.z - b.anchor.z) == 1 && brute_shared(a, b) > 0;
}

struct Counts {
  int total = 0;
  int up = 0;
  int down = 0;
  int parallel = 0;
  int perpendicular = 0;
};

// Offsets counted straight from the stud-overlap definition around a dir-0
// pivot at the origin.
Counts brute_offset_counts(int min_studs, bool up_only) {
  Counts c;
  const BrickPose pivot{};
  for (int dz : {-1, 1}) {
    if (up_only && dz < 0) {
      continue;
    }
    for (int dx = -6; dx <= 6; ++dx) {
      for (int dy = -6; dy <= 6; ++dy) {
        for (int dd = 0; dd < 2; ++dd) {
          const BrickPose q{{dx, dy, dz}, dd};
          if (brute_shared(pivot, q) >= min_studs) {
            ++c.total;
            (dz > 0 ? c.up : c.down)++;
            (dd == 0 ? c.parallel : c.perpendicular)++;
          }
        }
      }
    }
  }
  return c;
}

}  // namespace

TEST_CASE("footprint covers 8 cells with the documented spans") {
  const Footprint f0 = footprint(BrickPose{{0, 0, 0}, 0});
  std::set<Vec3i> s0(f0.begin(), f0.end());
  CHECK(s0.size() == 8);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 2; ++y) {
      CHECK(s0.count(Vec3i{x, y, 0}) == 1);
    }
  }
  const Footprint f1 = footprint(BrickPose{{0, 0, 0}, 1});
  std::set<Vec3i> s1(f1.begin(), f1.end());
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 4; ++y) {
      CHECK(s1.count(Vec3i{x, y, 0}) == 1);
    }
  }
  const Footprint ft = footprint(BrickPose{{2, -1, 5}, 0});
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(ft[i] == f0[i] + Vec3i{2, -1, 5});
  }
}

TEST_CASE("overlap and connect examples") {
  const BrickPose o{};
  CHECK(overlaps(o, o));
  CHECK_FALSE(overlaps(o, BrickPose{{4, 0, 0}, 0}));
  CHECK_FALSE(overlaps(o, BrickPose{{0, 0, 1}, 0}));
  CHECK(connects(o, BrickPose{{0, 0, 1}, 0}));
  CHECK(shared_studs(o, BrickPose{{0, 0, 1}, 0}) == 8);
  CHECK(connects(o, BrickPose{{3, 1, 1}, 0}));
  CHECK(shared_studs(o, BrickPose{{3, 1, 1}, 0}) == 1);
  CHECK_FALSE(connects(o, BrickPose{{4, 0, 1}, 0}));
}

TEST_CASE("predicates agree with cell-level brute force and are symmetric") {
  const BrickPose a{{0, 0, 0}, 0};
  const BrickPose a1{{1, -1, 0}, 1};
  for (const BrickPose& base : {a, a1}) {
    for (int x = -6; x <= 6; ++x) {
      for (int y = -6; y <= 6; ++y) {
        for (int z = -2; z <= 2; ++z) {
          for (int d = 0; d < 2; ++d) {
            const BrickPose b{{x, y, z}, d};
            CHECK(shared_studs(base, b) == brute_shared(base, b));
            CHECK(overlaps(base, b) == brute_overlap(base, b));
            CHECK(connects(base, b) == brute_connect(base, b));
            CHECK(overlaps(base, b) == overlaps(b, base));
            CHECK(connects(base, b) == connects(b, base));
          }
        }
      }
    }
  }
}

TEST_CASE("offset set cardinalities and splits") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  CHECK(full.size() == 92);
  const Counts fc = brute_offset_counts(1, false);
  CHECK(fc.total == 92);
  CHECK(fc.up == 46);
  CHECK(fc.down == 46);

  const OffsetSet& ra = offset_set(OffsetSetId::RandomAssembly);
  CHECK(ra.size() == 16);
  const Counts rc = brute_offset_counts(4, true);
  CHECK(rc.total == 16);
  CHECK(rc.parallel == 7);
  CHECK(rc.perpendicular == 9);
  int par = 0;
  for (const Offset& o : ra.offsets) {
    CHECK(o.delta.z == 1);
    par += o.ddir == 0 ? 1 : 0;
  }
  CHECK(par == 7);

  CHECK(offset_set(OffsetSetId::ModelNet).size() == 32);
  CHECK(brute_offset_counts(4, false).total == 32);

  const OffsetSet& mn = offset_set(OffsetSetId::Mnist);
  CHECK(mn.size() == 6);
  for (const Offset& o : mn.offsets) {
    CHECK(o.ddir == 0);
    CHECK(o.delta.x == 0);
    CHECK(std::abs(o.delta.y) <= 1);
    CHECK(std::abs(o.delta.z) == 1);
  }
}

TEST_CASE("offsets are sorted by (dz, dx, dy, ddir) and unique") {
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly, OffsetSetId::ModelNet,
                         OffsetSetId::Mnist}) {
    const OffsetSet& s = offset_set(id);
    for (std::size_t i = 1; i < s.size(); ++i) {
      const Offset& p = s[i - 1];
      const Offset& q = s[i];
      CHECK(std::make_tuple(p.delta.z, p.delta.x, p.delta.y, p.ddir) <
            std::make_tuple(q.delta.z, q.delta.x, q.delta.y, q.ddir));
    }
  }
}

TEST_CASE("every offset connects to pivots of both directions anywhere") {
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly, OffsetSetId::ModelNet,
                         OffsetSetId::Mnist}) {
    for (const BrickPose& pivot :
         {BrickPose{{0, 0, 0}, 0}, BrickPose{{0, 0, 0}, 1}, BrickPose{{5, 2, 3}, 1},
          BrickPose{{-3, 7, 2}, 0}}) {
      std::set<BrickPose> seen;
      for (const Offset& o : offset_set(id).offsets) {
        const BrickPose q = apply_offset(pivot, o);
        CHECK(connects(pivot, q));
        CHECK(q.dir == (pivot.dir ^ o.ddir));
        seen.insert(q);
      }
      CHECK(seen.size() == offset_set(id).size());
    }
  }
}

TEST_CASE("for a dir-1 pivot the full set still reaches every connecting pose") {
  const BrickPose pivot{{0, 0, 0}, 1};
  std::set<BrickPose> reach;
  for (const Offset& o : offset_set(OffsetSetId::Full).offsets) {
    reach.insert(apply_offset(pivot, o));
  }
  int connecting = 0;
  for (int x = -6; x <= 6; ++x) {
    for (int y = -6; y <= 6; ++y) {
      for (int z : {-1, 1}) {
        for (int d = 0; d < 2; ++d) {
          const BrickPose q{{x, y, z}, d};
          if (brute_connect(pivot, q)) {
            ++connecting;
            CHECK(reach.count(q) == 1);
          }
        }
      }
    }
  }
  CHECK(connecting == 92);
}

TEST_CASE("apply_offset examples") {
  CHECK(apply_offset(BrickPose{{0, 0, 0}, 0}, Offset{{1, -1, 1}, 1}) == BrickPose{{1, -1, 1}, 1});
  CHECK(apply_offset(BrickPose{{5, 2, 3}, 1}, Offset{{0, 0, -1}, 0}) == BrickPose{{5, 2, 2}, 1});
  const BrickPose q = apply_offset(BrickPose{}, Offset{{0, 0, 1}, 1});
  CHECK(q == BrickPose{{0, 0, 1}, 1});
  CHECK(connects(BrickPose{}, q));
}

TEST_CASE("full set is closed under z negation and half-turns about the pivot centre") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  std::set<Offset> s(full.offsets.begin(), full.offsets.end());
  for (const Offset& o : full.offsets) {
    CHECK(s.count(Offset{{o.delta.x, o.delta.y, -o.delta.z}, o.ddir}) == 1);
    // Half-turn about the dir-0 pivot centre (2, 1): a cell x maps to 3 - x,
    // so the new min corner is 4 - (dx + span_x).
    const int sx = o.ddir == 0 ? 4 : 2;
    const int sy = o.ddir == 0 ? 2 : 4;
    CHECK(s.count(Offset{{4 - (o.delta.x + sx), 2 - (o.delta.y + sy), o.delta.z}, o.ddir}) == 1);
  }
}

TEST_CASE("rotate_quarter maps cells by (x, y) -> (-y, x)") {
  for (const BrickPose& p : {BrickPose{{0, 0, 0}, 0}, BrickPose{{3, -2, 4}, 1}}) {
    const BrickPose r = rotate_quarter(p);
    std::set<Vec3i> expect;
    for (const Vec3i& c : footprint(p)) {
      expect.insert(Vec3i{-c.y, c.x, c.z});
    }
    const Footprint fr = footprint(r);
    CHECK(std::set<Vec3i>(fr.begin(), fr.end()) == expect);
    CHECK(rotate_quarter(rotate_quarter(rotate_quarter(rotate_quarter(p)))) == p);
  }
}

TEST_CASE("offset set names round-trip") {
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly, OffsetSetId::ModelNet,
                         OffsetSetId::Mnist}) {
    CHECK(parse_offset_set(to_string(id)) == id);
  }
  CHECK_THROWS_AS(parse_offset_set("bogus"), ConfigError);
}

TEST_CASE("named bounds") {
  const Bounds c = Bounds::cube32();
  CHECK(c.dims() == Vec3i{32, 32, 32});
  CHECK(c.contains(BrickPose{}));
  CHECK_FALSE(c.contains(BrickPose{{0, 0, -1}, 0}));
  const Bounds m = Bounds::mnist();
  CHECK(m.dims() == Vec3i{4, 14, 14});
  CHECK(m.contains(BrickPose{}));
}
