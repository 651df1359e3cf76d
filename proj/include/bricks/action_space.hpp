#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"

namespace bricks {

/// Validity bits: one per pivot, one per (pivot, offset).
struct ActionMasks {
  int num_pivots = 0;
  int num_offsets = 0;
  std::vector<std::uint8_t> pivot_valid;
  std::vector<std::uint8_t> offset_valid;  // row-major num_pivots x num_offsets

  ActionMasks() = default;
  ActionMasks(int pivots, int offsets);

  bool pivot(int i) const { return pivot_valid[static_cast<std::size_t>(i)] != 0; }
  bool offset(int i, int k) const {
    return offset_valid[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_offsets) +
                        static_cast<std::size_t>(k)] != 0;
  }
  void set_offset(int i, int k, bool v) {
    offset_valid[static_cast<std::size_t>(i) * static_cast<std::size_t>(num_offsets) +
                 static_cast<std::size_t>(k)] = v ? 1 : 0;
  }
  std::span<const std::uint8_t> offset_row(int i) const {
    return {offset_valid.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(num_offsets),
            static_cast<std::size_t>(num_offsets)};
  }

  /// Recomputes pivot_valid as the OR of each offset row.
  void refresh_pivots();
  std::size_t valid_count() const;
  bool any_valid() const;

  friend bool operator==(const ActionMasks&, const ActionMasks&) = default;
};

enum class MaskMode {
  Naive,        // every candidate against every brick, by footprint cell sets
  Accelerated,  // candidates probe a hash of occupied cells
};

/// Open-addressing set of occupied lattice cells.
class OccupancyHash {
 public:
  explicit OccupancyHash(std::size_t expected_cells = 64);

  void insert(const Vec3i& cell);
  bool contains(const Vec3i& cell) const;
  std::size_t size() const { return size_; }

 private:
  static std::uint64_t pack(const Vec3i& c);
  std::size_t slot_for(std::uint64_t key) const;
  void grow();

  std::vector<std::uint64_t> keys_;
  std::size_t size_ = 0;
  std::size_t mask_ = 0;
};

ActionMasks compute_masks(const AssemblyGraph& graph, const OffsetSet& offsets,
                          const Bounds& bounds, MaskMode mode = MaskMode::Accelerated);

bool is_valid_action(const AssemblyGraph& graph, const BrickAction& action,
                     const OffsetSet& offsets, const Bounds& bounds);

/// Softmax over `scores` restricted to entries with mask != 0; masked
/// entries get probability exactly 0.
std::vector<double> masked_distribution(std::span<const double> scores,
                                        std::span<const std::uint8_t> mask);

struct SampledAction {
  BrickAction action;
  double log_prob = 0.0;
};

/// Samples a pivot from masked `pivot_scores` (only the first
/// masks.num_pivots entries are used), then an offset from the masked scores
/// returned by `offset_scores` for that pivot. Throws NoValidAction when no
/// pivot is valid.
SampledAction masked_sample(std::span<const double> pivot_scores,
                            const std::function<std::vector<double>(int)>& offset_scores,
                            const ActionMasks& masks, std::mt19937_64& rng);

/// Index drawn from a discrete distribution using one uniform variate.
int sample_index(std::span<const double> probs, std::mt19937_64& rng);

/// Uniform draw over all valid (pivot, offset) pairs.
BrickAction sample_uniform_valid(const ActionMasks& masks, std::mt19937_64& rng);

}  // namespace bricks
