#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "bricks/geometry.hpp"
#include "test_support.hpp"

namespace bricks::testing {

using Cells = std::vector<Vec3i>;
using Shape = std::vector<Cells>;  // one sorted cell list per brick, sorted

// Cell-level quarter turn (x, y) -> (-y, x), independent of rotate_quarter.
inline Cells turn(const Cells& cs) {
  Cells out;
  for (const Vec3i& c : cs) {
    out.push_back({-c.y, c.x, c.z});
  }
  return out;
}

// Minimal shape over 4 turns after translating the minimal cell to zero.
inline Shape naive_form(const std::vector<BrickPose>& poses) {
  std::vector<Cells> bricks;
  for (const BrickPose& p : poses) {
    const Footprint f = footprint(p);
    bricks.emplace_back(f.begin(), f.end());
  }
  Shape best;
  for (int r = 0; r < 4; ++r) {
    Vec3i lo{1 << 20, 1 << 20, 1 << 20};
    for (const Cells& b : bricks) {
      for (const Vec3i& c : b) {
        lo = {std::min(lo.x, c.x), std::min(lo.y, c.y), std::min(lo.z, c.z)};
      }
    }
    Shape s;
    for (const Cells& b : bricks) {
      Cells t;
      for (const Vec3i& c : b) {
        t.push_back(c - lo);
      }
      std::sort(t.begin(), t.end());
      s.push_back(t);
    }
    std::sort(s.begin(), s.end());
    if (r == 0 || s < best) {
      best = s;
    }
    for (Cells& b : bricks) {
      b = turn(b);
    }
  }
  return best;
}

// Generate-all oracle: every placement sequence from the origin brick with
// cell-set collision tests, deduplicated by naive_form.
inline std::size_t naive_count(int n) {
  const OffsetSet& offs = offset_set(OffsetSetId::Full);
  std::set<Shape> level{naive_form({BrickPose{}})};
  std::vector<std::vector<BrickPose>> reps{{BrickPose{}}};
  for (int k = 2; k <= n; ++k) {
    std::set<Shape> next;
    std::vector<std::vector<BrickPose>> next_reps;
    for (const auto& poses : reps) {
      for (const BrickPose& pivot : poses) {
        for (const Offset& off : offs.offsets) {
          const BrickPose nb = apply_offset(pivot, off);
          const bool clash = std::any_of(poses.begin(), poses.end(), [&](const BrickPose& p) {
            return cells_collide(p, nb);
          });
          if (clash) {
            continue;
          }
          std::vector<BrickPose> g = poses;
          g.push_back(nb);
          if (next.insert(naive_form(g)).second) {
            next_reps.push_back(g);
          }
        }
      }
    }
    level = std::move(next);
    reps = std::move(next_reps);
  }
  return level.size();
}

struct BurnsideTwo {
  int placements = 0;
  int fixed = 0;
  /// Orbits of two-brick buildings: a building is determined by where the
  /// second brick sits on top of a dir-0 brick, up to the half turn that swaps
  /// the two bricks' roles.
  int orbits() const { return (placements + fixed) / 2; }
};

// Placements of a second brick on top of a dir-0 brick and those fixed by a
// half turn about the first brick's centre.
inline BurnsideTwo burnside_two() {
  BurnsideTwo b;
  for (const Offset& off : offset_set(OffsetSetId::Full).offsets) {
    if (off.delta.z != 1) {
      continue;
    }
    ++b.placements;
    const BrickPose top = apply_offset(BrickPose{}, off);
    // Half turn about (2, 1): cell (x, y) -> (3 - x, 1 - y).
    const BrickPose turned{{3 - (top.anchor.x + top.span_x() - 1), 1 - (top.anchor.y + top.span_y() - 1), 1},
                           top.dir};
    b.fixed += turned == top ? 1 : 0;
  }
  return b;
}

}  // namespace bricks::testing
