#include "bricks/geometry.hpp"

#include <algorithm>
#include <tuple>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

int interval_overlap(int a_lo, int a_len, int b_lo, int b_len) {
  const int lo = std::max(a_lo, b_lo);
  const int hi = std::min(a_lo + a_len, b_lo + b_len);
  return std::max(0, hi - lo);
}

bool offset_order(const Offset& a, const Offset& b) {
  return std::tie(a.delta.z, a.delta.x, a.delta.y, a.ddir) <
         std::tie(b.delta.z, b.delta.x, b.delta.y, b.ddir);
}

}  // namespace

Footprint footprint(const BrickPose& pose) {
  Footprint cells{};
  std::size_t k = 0;
  for (int dy = 0; dy < pose.span_y(); ++dy) {
    for (int dx = 0; dx < pose.span_x(); ++dx) {
      cells[k++] = pose.anchor + Vec3i{dx, dy, 0};
    }
  }
  return cells;
}

int shared_studs(const BrickPose& a, const BrickPose& b) {
  return interval_overlap(a.anchor.x, a.span_x(), b.anchor.x, b.span_x()) *
         interval_overlap(a.anchor.y, a.span_y(), b.anchor.y, b.span_y());
}

bool overlaps(const BrickPose& a, const BrickPose& b) {
  return a.anchor.z == b.anchor.z && shared_studs(a, b) > 0;
}

bool connects(const BrickPose& a, const BrickPose& b) {
  const int dz = a.anchor.z - b.anchor.z;
  return (dz == 1 || dz == -1) && shared_studs(a, b) > 0;
}

BrickPose rotate_quarter(const BrickPose& pose) {
  // Cells (x, y) map to (-y, x); the new min-x corner comes from the old max-y row.
  return BrickPose{{-(pose.anchor.y + pose.span_y() - 1), pose.anchor.x, pose.anchor.z},
                   1 - pose.dir};
}

BrickPose apply_offset(const BrickPose& pivot, const Offset& off) {
  Vec3i delta = off.delta;
  if (pivot.dir == 1) {
    std::swap(delta.x, delta.y);
  }
  return BrickPose{pivot.anchor + delta, pivot.dir ^ off.ddir};
}

OffsetSet enumerate_offsets(OffsetSetId id) {
  const BrickPose pivot{};
  OffsetSet set;
  set.id = id;
  for (int dz : {-1, 1}) {
    for (int dx = -kBrickLong; dx <= kBrickLong; ++dx) {
      for (int dy = -kBrickLong; dy <= kBrickLong; ++dy) {
        for (int ddir : {0, 1}) {
          const Offset off{{dx, dy, dz}, ddir};
          const int studs = shared_studs(pivot, apply_offset(pivot, off));
          bool keep = false;
          switch (id) {
            case OffsetSetId::Full:
              keep = studs >= 1;
              break;
            case OffsetSetId::RandomAssembly:
              keep = dz == 1 && studs >= 4;
              break;
            case OffsetSetId::ModelNet:
              keep = studs >= 4;
              break;
            case OffsetSetId::Mnist:
              // Long axis (x for a dir-0 pivot) fixed, lateral shift within the 2-stud width.
              keep = ddir == 0 && dx == 0 && dy >= -1 && dy <= 1;
              break;
          }
          if (keep) {
            set.offsets.push_back(off);
          }
        }
      }
    }
  }
  std::sort(set.offsets.begin(), set.offsets.end(), offset_order);
  return set;
}

const OffsetSet& offset_set(OffsetSetId id) {
  static const std::array<OffsetSet, 4> cache = {
      enumerate_offsets(OffsetSetId::Full), enumerate_offsets(OffsetSetId::RandomAssembly),
      enumerate_offsets(OffsetSetId::ModelNet), enumerate_offsets(OffsetSetId::Mnist)};
  return cache[static_cast<std::size_t>(id)];
}

std::string_view to_string(OffsetSetId id) {
  switch (id) {
    case OffsetSetId::Full:
      return "full";
    case OffsetSetId::RandomAssembly:
      return "random-assembly";
    case OffsetSetId::ModelNet:
      return "modelnet";
    case OffsetSetId::Mnist:
      return "mnist";
  }
  return "unknown";
}

OffsetSetId parse_offset_set(std::string_view name) {
  for (OffsetSetId id : {OffsetSetId::Full, OffsetSetId::RandomAssembly, OffsetSetId::ModelNet,
                         OffsetSetId::Mnist}) {
    if (to_string(id) == name) {
      return id;
    }
  }
  throw ConfigError("unknown offset set '" + std::string(name) +
                    "' (expected full, random-assembly, modelnet or mnist)");
}

bool Bounds::contains(const Vec3i& cell) const {
  return cell.x >= min.x && cell.x < max.x && cell.y >= min.y && cell.y < max.y &&
         cell.z >= min.z && cell.z < max.z;
}

bool Bounds::contains(const BrickPose& pose) const {
  const Vec3i last = pose.anchor + Vec3i{pose.span_x() - 1, pose.span_y() - 1, 0};
  return contains(pose.anchor) && contains(last);
}

Bounds Bounds::cube32() {
  // Brick centre (2, 1) of the origin brick sits on the grid's xy centre (16, 16).
  return Bounds{{-14, -15, 0}, {18, 17, 32}};
}

Bounds Bounds::mnist() {
  // x is the depth axis (brick length), y the image column, z the image row.
  return Bounds{{0, -6, 0}, {4, 8, 14}};
}

}  // namespace bricks
