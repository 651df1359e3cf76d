#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"
#include "bricks/voxel.hpp"

namespace bricks {

inline constexpr int kViewSize = 14;

/// Row-major binary image; row 0 is the top row.
struct BinaryImage {
  int rows = kViewSize;
  int cols = kViewSize;
  std::vector<std::uint8_t> pixels = std::vector<std::uint8_t>(kViewSize * kViewSize, 0);

  BinaryImage() = default;
  BinaryImage(int r, int c)
      : rows(r), cols(c), pixels(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0) {}

  bool get(int r, int c) const {
    return pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
                  static_cast<std::size_t>(c)] != 0;
  }
  void set(int r, int c, bool v = true) {
    pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c)] = v ? 1 : 0;
  }
  std::size_t count() const;

  friend bool operator==(const BinaryImage&, const BinaryImage&) = default;
};

enum class TaskMode { Mnist, RandomAssembly, ModelNet };

std::string_view to_string(TaskMode mode);
TaskMode parse_task_mode(std::string_view name);

/// What the agent is told about a target, plus the environment-side volume.
struct TargetInfo {
  std::string id;
  TaskMode mode = TaskMode::RandomAssembly;
  std::vector<BinaryImage> views;
  /// Occupancy on the task lattice; the reward and the volume-oracle
  /// planners read it, the learned policy never does.
  std::optional<VoxelGrid> exact_volume;
  int budget = 1;
  /// Budget requested for ModelNet targets.
  std::optional<int> configured_budget;
  /// Some view content did not fit the 14x14 crop.
  bool clipped = false;
};

struct ViewSet {
  std::array<BinaryImage, 3> views;  // front (along +y), right (along +x), top (along -z)
  /// Grid coordinate of the first crop column/row on each axis.
  Vec3i crop_start;
  bool clipped = false;
};

/// Orthographic OR-projections cropped to 14x14.
///
/// Each crop window is centred on the occupied bounding box along its two
/// axes and clamped to the grid: start = clamp(floor((lo + hi + 1) / 2) - 7,
/// 0, n - 14). Front: rows z (top first), columns x. Right: rows z, columns y.
/// Top: rows y (largest first), columns x.
ViewSet project_views(const VoxelGrid& grid);

/// Threshold at 128 (>= is on), then 2x2 max-pool a 28x28 image to 14x14.
BinaryImage downsample_mnist(std::span<const std::uint8_t> image28);

/// ceil(1.1 * on_pixels) in integer arithmetic.
int mnist_budget(std::size_t on_pixels);

/// Extrudes the pooled digit to depth 4 along x on the Bounds::mnist()
/// lattice, bottom-centre normalised. Throws EmptyTarget for a blank image.
TargetInfo mnist_to_target(std::span<const std::uint8_t> image28, std::string id = "mnist");

/// Side view of a 4x14x14 volume: OR along x, rows z (top first), columns y.
BinaryImage mnist_view(const VoxelGrid& grid);

/// Target from a pre-voxelised grid (e.g. a ModelNet object).
TargetInfo volume_target(const VoxelGrid& grid, TaskMode mode, std::optional<int> configured_budget,
                         std::string id);

int brick_budget(const TargetInfo& target);

struct GeneratorStats {
  std::size_t generated = 0;
  std::size_t dead_ends = 0;
};

struct RandomConstruction {
  AssemblyGraph graph;
  std::vector<BrickAction> actions;
};

/// Grows an assembly from the origin brick to `bricks` bricks, each step a
/// uniform draw over oracle-valid (pivot, offset) pairs. A dead end restarts
/// from scratch and is counted in `stats`.
RandomConstruction random_construction(std::mt19937_64& rng, int bricks, const OffsetSet& offsets,
                                       const Bounds& bounds, GeneratorStats* stats = nullptr);

struct GeneratedAssembly {
  AssemblyGraph graph;
  std::vector<BrickAction> actions;
  TargetInfo target;
};

/// Random assembly with a uniformly drawn brick count in [min_bricks,
/// max_bricks], voxelised on `bounds` and bottom-centre normalised.
GeneratedAssembly gen_random_assembly(std::mt19937_64& rng, int min_bricks, int max_bricks,
                                      const OffsetSet& offsets, const Bounds& bounds,
                                      GeneratorStats* stats = nullptr, std::string id = "assembly");

// Plain PBM-style bitmap ("P1"), 1 = occupied.
void write_pgm(std::ostream& out, const BinaryImage& image);
BinaryImage read_pgm(std::istream& in);
void write_pgm(const std::filesystem::path& path, const BinaryImage& image);
BinaryImage read_pgm(const std::filesystem::path& path);

struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;

  std::span<const std::uint8_t> image(int i) const {
    const std::size_t n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    return {pixels.data() + static_cast<std::size_t>(i) * n, n};
  }
};

/// IDX ubyte image file (magic 0x00000803), big-endian dimensions.
IdxImages read_idx_images(std::istream& in);
IdxImages read_idx_images(const std::filesystem::path& path);
/// IDX ubyte label file (magic 0x00000801).
std::vector<std::uint8_t> read_idx_labels(std::istream& in);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

}  // namespace bricks
