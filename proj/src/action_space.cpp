#include "bricks/action_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

constexpr std::uint64_t kEmptySlot = std::numeric_limits<std::uint64_t>::max();

std::uint64_t mix(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

bool footprints_intersect(const Footprint& a, const Footprint& b) {
  for (const Vec3i& ca : a) {
    for (const Vec3i& cb : b) {
      if (ca == cb) {
        return true;
      }
    }
  }
  return false;
}

ActionMasks naive_masks(const AssemblyGraph& graph, const OffsetSet& offsets,
                        const Bounds& bounds) {
  const int t = static_cast<int>(graph.size());
  const int n_off = static_cast<int>(offsets.size());
  ActionMasks masks(t, n_off);
  std::vector<Footprint> placed;
  placed.reserve(graph.size());
  for (const BrickPose& p : graph.nodes()) {
    placed.push_back(footprint(p));
  }
  for (int i = 0; i < t; ++i) {
    for (int k = 0; k < n_off; ++k) {
      const BrickPose cand = apply_offset(graph.node(static_cast<std::size_t>(i)),
                                          offsets[static_cast<std::size_t>(k)]);
      if (!bounds.contains(cand)) {
        continue;
      }
      const Footprint cells = footprint(cand);
      bool free = true;
      for (const Footprint& other : placed) {
        if (footprints_intersect(cells, other)) {
          free = false;
          break;
        }
      }
      masks.set_offset(i, k, free);
    }
  }
  masks.refresh_pivots();
  return masks;
}

ActionMasks accelerated_masks(const AssemblyGraph& graph, const OffsetSet& offsets,
                              const Bounds& bounds) {
  const int t = static_cast<int>(graph.size());
  const int n_off = static_cast<int>(offsets.size());
  ActionMasks masks(t, n_off);
  OccupancyHash occupied(graph.size() * kCellsPerBrick);
  for (const BrickPose& p : graph.nodes()) {
    for (const Vec3i& c : footprint(p)) {
      occupied.insert(c);
    }
  }
  for (int i = 0; i < t; ++i) {
    for (int k = 0; k < n_off; ++k) {
      const BrickPose cand = apply_offset(graph.node(static_cast<std::size_t>(i)),
                                          offsets[static_cast<std::size_t>(k)]);
      if (!bounds.contains(cand)) {
        continue;
      }
      bool free = true;
      for (const Vec3i& c : footprint(cand)) {
        if (occupied.contains(c)) {
          free = false;
          break;
        }
      }
      masks.set_offset(i, k, free);
    }
  }
  masks.refresh_pivots();
  return masks;
}

}  // namespace

ActionMasks::ActionMasks(int pivots, int offsets)
    : num_pivots(pivots),
      num_offsets(offsets),
      pivot_valid(static_cast<std::size_t>(pivots), 0),
      offset_valid(static_cast<std::size_t>(pivots) * static_cast<std::size_t>(offsets), 0) {}

void ActionMasks::refresh_pivots() {
  for (int i = 0; i < num_pivots; ++i) {
    const auto row = offset_row(i);
    pivot_valid[static_cast<std::size_t>(i)] =
        std::any_of(row.begin(), row.end(), [](std::uint8_t v) { return v != 0; }) ? 1 : 0;
  }
}

std::size_t ActionMasks::valid_count() const {
  return static_cast<std::size_t>(std::count(offset_valid.begin(), offset_valid.end(), 1));
}

bool ActionMasks::any_valid() const {
  return std::any_of(pivot_valid.begin(), pivot_valid.end(), [](std::uint8_t v) { return v != 0; });
}

OccupancyHash::OccupancyHash(std::size_t expected_cells) {
  std::size_t cap = 16;
  while (cap < expected_cells * 2) {
    cap <<= 1;
  }
  keys_.assign(cap, kEmptySlot);
  mask_ = cap - 1;
}

std::uint64_t OccupancyHash::pack(const Vec3i& c) {
  constexpr std::int64_t kBias = 1 << 20;
  const auto part = [](int v) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(v) + kBias) & 0x1fffffULL;
  };
  return (part(c.x) << 42) | (part(c.y) << 21) | part(c.z);
}

std::size_t OccupancyHash::slot_for(std::uint64_t key) const {
  std::size_t slot = static_cast<std::size_t>(mix(key)) & mask_;
  while (keys_[slot] != kEmptySlot && keys_[slot] != key) {
    slot = (slot + 1) & mask_;
  }
  return slot;
}

void OccupancyHash::grow() {
  std::vector<std::uint64_t> old = std::move(keys_);
  keys_.assign(old.size() * 2, kEmptySlot);
  mask_ = keys_.size() - 1;
  for (std::uint64_t k : old) {
    if (k != kEmptySlot) {
      keys_[slot_for(k)] = k;
    }
  }
}

void OccupancyHash::insert(const Vec3i& cell) {
  if ((size_ + 1) * 2 > keys_.size()) {
    grow();
  }
  const std::uint64_t key = pack(cell);
  const std::size_t slot = slot_for(key);
  if (keys_[slot] == kEmptySlot) {
    keys_[slot] = key;
    ++size_;
  }
}

bool OccupancyHash::contains(const Vec3i& cell) const {
  const std::uint64_t key = pack(cell);
  return keys_[slot_for(key)] == key;
}

ActionMasks compute_masks(const AssemblyGraph& graph, const OffsetSet& offsets,
                          const Bounds& bounds, MaskMode mode) {
  return mode == MaskMode::Naive ? naive_masks(graph, offsets, bounds)
                                 : accelerated_masks(graph, offsets, bounds);
}

bool is_valid_action(const AssemblyGraph& graph, const BrickAction& action,
                     const OffsetSet& offsets, const Bounds& bounds) {
  const BrickPose cand = action_pose(graph, action, offsets);
  if (!bounds.contains(cand)) {
    return false;
  }
  return std::none_of(graph.nodes().begin(), graph.nodes().end(),
                      [&](const BrickPose& p) { return overlaps(p, cand); });
}

std::vector<double> masked_distribution(std::span<const double> scores,
                                        std::span<const std::uint8_t> mask) {
  if (scores.size() < mask.size()) {
    throw ContractViolation("masked_distribution: " + std::to_string(scores.size()) +
                            " scores for a mask of " + std::to_string(mask.size()));
  }
  std::vector<double> probs(mask.size(), 0.0);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      best = std::max(best, scores[i]);
    }
  }
  if (!std::isfinite(best)) {
    return probs;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) {
      probs[i] = std::exp(scores[i] - best);
      total += probs[i];
    }
  }
  for (double& p : probs) {
    p /= total;
  }
  return probs;
}

int sample_index(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) {
      continue;
    }
    last_positive = static_cast<int>(i);
    acc += probs[i];
    if (u < acc) {
      return last_positive;
    }
  }
  if (last_positive < 0) {
    throw NoValidAction();
  }
  return last_positive;
}

SampledAction masked_sample(std::span<const double> pivot_scores,
                            const std::function<std::vector<double>(int)>& offset_scores,
                            const ActionMasks& masks, std::mt19937_64& rng) {
  if (!masks.any_valid()) {
    throw NoValidAction();
  }
  const std::vector<double> pivot_probs = masked_distribution(pivot_scores, masks.pivot_valid);
  const int pivot = sample_index(pivot_probs, rng);
  const std::vector<double> scores = offset_scores(pivot);
  const std::vector<double> off_probs = masked_distribution(scores, masks.offset_row(pivot));
  const int offset = sample_index(off_probs, rng);
  SampledAction out;
  out.action = {pivot, offset};
  out.log_prob = std::log(pivot_probs[static_cast<std::size_t>(pivot)]) +
                 std::log(off_probs[static_cast<std::size_t>(offset)]);
  return out;
}

BrickAction sample_uniform_valid(const ActionMasks& masks, std::mt19937_64& rng) {
  const std::size_t total = masks.valid_count();
  if (total == 0) {
    throw NoValidAction();
  }
  std::uniform_int_distribution<std::size_t> pick(0, total - 1);
  std::size_t target = pick(rng);
  for (int i = 0; i < masks.num_pivots; ++i) {
    for (int k = 0; k < masks.num_offsets; ++k) {
      if (masks.offset(i, k)) {
        if (target == 0) {
          return {i, k};
        }
        --target;
      }
    }
  }
  throw NoValidAction();
}

}  // namespace bricks
