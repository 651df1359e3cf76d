#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"

namespace bricks {

/// Building identity up to translation and quarter turns about the vertical
/// axis. Three bytes per brick: x, y, then z * 2 + dir, all after moving the
/// minimal anchor to the origin; poses sorted; minimal over the 4 rotations.
using CanonicalKey = std::string;

/// Throws ContractViolation if the translated building spans more than 256
/// studs or 128 levels.
CanonicalKey canonical_key(std::span<const BrickPose> poses);
CanonicalKey canonical_key(const AssemblyGraph& graph);

/// Poses of the canonical representative.
std::vector<BrickPose> decode_key(const CanonicalKey& key);

struct LevelCount {
  int bricks = 0;
  std::uint64_t count = 0;
  /// Valid (pivot, offset) extensions examined to reach this level.
  std::uint64_t extensions = 0;
};

struct EnumerationConfig {
  OffsetSetId offsets = OffsetSetId::Full;
  /// Estimated bytes of the dedup set and frontier that may be held at once.
  std::size_t max_bytes = std::size_t{2} << 30;
  int jobs = 1;
};

/// The memory guard stopped the count; `levels` holds the finished levels.
class PartialResult : public std::runtime_error {
 public:
  PartialResult(std::vector<LevelCount> levels, int level_reached);
  const std::vector<LevelCount>& levels() const noexcept { return levels_; }
  int level_reached() const noexcept { return level_reached_; }

 private:
  std::vector<LevelCount> levels_;
  int level_reached_;
};

/// Distinct n-brick buildings reachable from one brick by repeated valid
/// (pivot, offset) extensions, counted level by level with canonical-key
/// deduplication. Space is unbounded. Levels 1..n are returned. Counts do not
/// depend on `jobs`.
std::vector<LevelCount> count_buildings(
    int n, const EnumerationConfig& cfg = {},
    const std::function<void(const LevelCount&)>& progress = {});

/// Columns: bricks,count,extensions.
void write_levels_csv(std::ostream& out, const std::vector<LevelCount>& levels);

}  // namespace bricks
