#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"

namespace bricks {

/// Dense binary occupancy over [0,nx) x [0,ny) x [0,nz); x varies fastest,
/// then y, then z.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(int nx, int ny, int nz);
  explicit VoxelGrid(Vec3i dims) : VoxelGrid(dims.x, dims.y, dims.z) {}

  Vec3i dims() const { return {nx_, ny_, nz_}; }
  std::size_t cell_count() const { return bits_.size(); }

  bool in_range(const Vec3i& c) const {
    return c.x >= 0 && c.x < nx_ && c.y >= 0 && c.y < ny_ && c.z >= 0 && c.z < nz_;
  }
  std::size_t index(const Vec3i& c) const {
    return static_cast<std::size_t>(c.x) +
           static_cast<std::size_t>(nx_) *
               (static_cast<std::size_t>(c.y) + static_cast<std::size_t>(ny_) * static_cast<std::size_t>(c.z));
  }
  bool get(const Vec3i& c) const { return bits_[index(c)] != 0; }
  /// Out-of-range cells read as empty.
  bool get_or_empty(const Vec3i& c) const { return in_range(c) && get(c); }
  void set(const Vec3i& c, bool v = true) { bits_[index(c)] = v ? 1 : 0; }

  /// Number of occupied cells.
  std::size_t volume() const;
  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  int nx_ = 0;
  int ny_ = 0;
  int nz_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Grid coordinates of a world cell under `bounds`.
inline Vec3i to_grid(const Vec3i& world, const Bounds& bounds) { return world - bounds.min; }

/// Union of all brick footprints on the lattice spanned by `bounds`. Throws
/// ContractViolation for a brick outside the bounds.
VoxelGrid voxelize(const AssemblyGraph& graph, const Bounds& bounds);

/// Grid cells of one brick's footprint under `bounds`.
Footprint grid_footprint(const BrickPose& pose, const Bounds& bounds);

/// Integer translation that moves the occupied cells to the bottom of the
/// grid (min z = 0) with the xy bounding-box centre on the grid's xy centre.
Vec3i bottom_center_shift(const VoxelGrid& grid);

/// Translates occupied cells; cells pushed outside the grid are dropped.
VoxelGrid translate(const VoxelGrid& grid, const Vec3i& shift);

VoxelGrid normalize_bottom_center(const VoxelGrid& grid);

// BBVOX1: "BBVOX1 nx ny nz\n" followed by nx*ny*nz '0'/'1' characters in
// cell order.
void write_voxel(std::ostream& out, const VoxelGrid& grid);
VoxelGrid read_voxel(std::istream& in);
void write_voxel(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid read_voxel(const std::filesystem::path& path);

}  // namespace bricks
