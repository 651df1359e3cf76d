#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bricks {

struct Vec3i {
  int x = 0;
  int y = 0;
  int z = 0;

  friend constexpr Vec3i operator+(Vec3i a, Vec3i b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3i operator-(Vec3i a, Vec3i b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr auto operator<=>(const Vec3i&, const Vec3i&) = default;
};

// Long side of the 2x4 brick in studs, short side, and height in levels.
inline constexpr int kBrickLong = 4;
inline constexpr int kBrickShort = 2;
inline constexpr int kCellsPerBrick = kBrickLong * kBrickShort;

/// Placement of one 2x4 brick.
///
/// `anchor` is the minimum corner of the footprint: x/y in stud units, z in
/// brick levels. `dir` 0 lays the long side along x, `dir` 1 along y.
struct BrickPose {
  Vec3i anchor;
  int dir = 0;

  constexpr int span_x() const { return dir == 0 ? kBrickLong : kBrickShort; }
  constexpr int span_y() const { return dir == 0 ? kBrickShort : kBrickLong; }

  friend constexpr auto operator<=>(const BrickPose&, const BrickPose&) = default;
};

using Footprint = std::array<Vec3i, kCellsPerBrick>;

/// The 8 lattice cells covered by `pose`, x fastest then y.
Footprint footprint(const BrickPose& pose);

/// Number of stud columns shared by the xy projections of two footprints.
int shared_studs(const BrickPose& a, const BrickPose& b);

bool overlaps(const BrickPose& a, const BrickPose& b);

/// Stud contact: adjacent levels and at least one shared stud column.
bool connects(const BrickPose& a, const BrickPose& b);

/// Rotation by +90 degrees about the vertical axis: cell (x, y) -> (-y, x).
BrickPose rotate_quarter(const BrickPose& pose);

/// Relative placement of a new brick, expressed in the frame of a dir-0 pivot.
struct Offset {
  Vec3i delta;
  int ddir = 0;

  friend constexpr auto operator<=>(const Offset&, const Offset&) = default;
};

/// Pose of the brick placed at `off` from `pivot`.
///
/// Offsets are stored for a dir-0 pivot. For a dir-1 pivot the x/y
/// components of the delta are swapped (the transpose maps a dir-0 footprint
/// onto a dir-1 footprint), so every offset connects to every pivot.
BrickPose apply_offset(const BrickPose& pivot, const Offset& off);

enum class OffsetSetId { Full, RandomAssembly, ModelNet, Mnist };

struct OffsetSet {
  OffsetSetId id = OffsetSetId::Full;
  std::vector<Offset> offsets;

  std::size_t size() const { return offsets.size(); }
  const Offset& operator[](std::size_t i) const { return offsets[i]; }
};

/// Builds the offset set from its defining predicate. Offsets are sorted by
/// (dz, dx, dy, ddir); action indices refer to this order.
OffsetSet enumerate_offsets(OffsetSetId id);

/// Cached instance of `enumerate_offsets(id)`.
const OffsetSet& offset_set(OffsetSetId id);

std::string_view to_string(OffsetSetId id);
OffsetSetId parse_offset_set(std::string_view name);

/// Half-open integer box [min, max) bounding the construction space.
struct Bounds {
  Vec3i min;
  Vec3i max;

  Vec3i dims() const { return max - min; }
  bool contains(const Vec3i& cell) const;
  bool contains(const BrickPose& pose) const;

  /// 32^3 lattice whose bottom-centre column holds the centre of the
  /// initial brick at the origin.
  static Bounds cube32();
  /// 4 (depth) x 14 x 14 lattice for single-image targets.
  static Bounds mnist();

  friend constexpr bool operator==(const Bounds&, const Bounds&) = default;
};

}  // namespace bricks
