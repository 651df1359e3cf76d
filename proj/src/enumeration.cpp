#include "bricks/enumeration.hpp"

#include <algorithm>
#include <climits>
#include <ostream>
#include <string>
#include <thread>
#include <unordered_set>
#include <utility>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

constexpr std::size_t kBytesPerBrick = 3;
// Rough cost of one key in an unordered_set<std::string>: node, hash,
// bucket pointer and the string object itself.
constexpr std::size_t kSetEntryOverhead = 72;

CanonicalKey encode_rotation(std::vector<BrickPose>& poses) {
  Vec3i lo{INT_MAX, INT_MAX, INT_MAX};
  for (const BrickPose& p : poses) {
    lo.x = std::min(lo.x, p.anchor.x);
    lo.y = std::min(lo.y, p.anchor.y);
    lo.z = std::min(lo.z, p.anchor.z);
  }
  for (BrickPose& p : poses) {
    p.anchor = p.anchor - lo;
  }
  std::sort(poses.begin(), poses.end());
  CanonicalKey key;
  key.reserve(poses.size() * kBytesPerBrick);
  for (const BrickPose& p : poses) {
    if (p.anchor.x > 255 || p.anchor.y > 255 || p.anchor.z > 127) {
      throw ContractViolation("canonical_key: building too large to encode");
    }
    key.push_back(static_cast<char>(p.anchor.x));
    key.push_back(static_cast<char>(p.anchor.y));
    key.push_back(static_cast<char>(p.anchor.z * 2 + p.dir));
  }
  return key;
}

}  // namespace

CanonicalKey canonical_key(std::span<const BrickPose> poses) {
  std::vector<BrickPose> cur(poses.begin(), poses.end());
  CanonicalKey best;
  for (int r = 0; r < 4; ++r) {
    std::vector<BrickPose> work = cur;
    CanonicalKey k = encode_rotation(work);
    if (r == 0 || k < best) {
      best = std::move(k);
    }
    for (BrickPose& p : cur) {
      p = rotate_quarter(p);
    }
  }
  return best;
}

CanonicalKey canonical_key(const AssemblyGraph& graph) { return canonical_key(graph.nodes()); }

std::vector<BrickPose> decode_key(const CanonicalKey& key) {
  if (key.size() % kBytesPerBrick != 0) {
    throw ContractViolation("canonical key length " + std::to_string(key.size()) +
                     " is not a multiple of 3");
  }
  std::vector<BrickPose> out;
  for (std::size_t i = 0; i < key.size(); i += kBytesPerBrick) {
    const auto x = static_cast<unsigned char>(key[i]);
    const auto y = static_cast<unsigned char>(key[i + 1]);
    const auto zd = static_cast<unsigned char>(key[i + 2]);
    out.push_back(BrickPose{{x, y, zd / 2}, zd % 2});
  }
  return out;
}

PartialResult::PartialResult(std::vector<LevelCount> levels, int level_reached)
    : std::runtime_error("memory guard stopped enumeration after level " +
                         std::to_string(level_reached)),
      levels_(std::move(levels)),
      level_reached_(level_reached) {}

namespace {

using KeySet = std::unordered_set<CanonicalKey>;

// Adds the keys of every one-brick extension of `frontier[begin, end)` to
// `out`; returns the number of valid extensions.
std::uint64_t expand(const std::vector<CanonicalKey>& frontier, std::size_t begin, std::size_t end,
                     const OffsetSet& offsets, KeySet& out) {
  std::uint64_t ext = 0;
  std::vector<BrickPose> grown;
  for (std::size_t f = begin; f < end; ++f) {
    const std::vector<BrickPose> poses = decode_key(frontier[f]);
    for (const BrickPose& pivot : poses) {
      for (const Offset& off : offsets.offsets) {
        const BrickPose nb = apply_offset(pivot, off);
        const bool clash = std::any_of(poses.begin(), poses.end(),
                                       [&](const BrickPose& p) { return overlaps(p, nb); });
        if (clash) {
          continue;
        }
        ++ext;
        grown = poses;
        grown.push_back(nb);
        out.insert(canonical_key(grown));
      }
    }
  }
  return ext;
}

std::size_t estimate_bytes(std::size_t keys, int bricks) {
  return keys * (kSetEntryOverhead + kBytesPerBrick * static_cast<std::size_t>(bricks));
}

}  // namespace

std::vector<LevelCount> count_buildings(int n, const EnumerationConfig& cfg,
                                        const std::function<void(const LevelCount&)>& progress) {
  if (n < 1) {
    throw ConfigError("count_buildings needs n >= 1, got " + std::to_string(n));
  }
  if (cfg.jobs < 1) {
    throw ConfigError("count_buildings needs jobs >= 1");
  }
  const OffsetSet& offsets = offset_set(cfg.offsets);
  const BrickPose origin{};
  std::vector<CanonicalKey> frontier{canonical_key(std::span<const BrickPose>(&origin, 1))};
  std::vector<LevelCount> levels{{1, 1, 0}};
  if (progress) {
    progress(levels.back());
  }
  for (int level = 2; level <= n; ++level) {
    const std::size_t frontier_bytes = estimate_bytes(frontier.size(), level - 1);
    KeySet next;
    std::uint64_t ext = 0;
    auto check_guard = [&](const KeySet& s) {
      if (frontier_bytes + estimate_bytes(s.size(), level) > cfg.max_bytes) {
        throw PartialResult(levels, level - 1);
      }
    };
    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs),
                                                   std::max<std::size_t>(frontier.size(), 1));
    // The guard is checked between chunks of the frontier.
    const std::size_t chunk = std::max<std::size_t>(1, 4096 / jobs) * jobs;
    for (std::size_t start = 0; start < frontier.size(); start += chunk) {
      const std::size_t stop = std::min(frontier.size(), start + chunk);
      if (jobs == 1) {
        ext += expand(frontier, start, stop, offsets, next);
      } else {
        std::vector<KeySet> local(jobs);
        std::vector<std::uint64_t> local_ext(jobs, 0);
        std::vector<std::thread> workers;
        const std::size_t per = (stop - start + jobs - 1) / jobs;
        for (std::size_t j = 0; j < jobs; ++j) {
          const std::size_t b = std::min(stop, start + j * per);
          const std::size_t e = std::min(stop, b + per);
          workers.emplace_back([&, j, b, e] { local_ext[j] = expand(frontier, b, e, offsets, local[j]); });
        }
        for (std::thread& w : workers) {
          w.join();
        }
        for (std::size_t j = 0; j < jobs; ++j) {
          ext += local_ext[j];
          next.merge(local[j]);
        }
      }
      check_guard(next);
    }
    frontier.clear();
    frontier.shrink_to_fit();
    frontier.reserve(next.size());
    while (!next.empty()) {
      frontier.push_back(std::move(next.extract(next.begin()).value()));
    }
    levels.push_back({level, frontier.size(), ext});
    if (progress) {
      progress(levels.back());
    }
  }
  return levels;
}

void write_levels_csv(std::ostream& out, const std::vector<LevelCount>& levels) {
  out << "bricks,count,extensions\n";
  for (const LevelCount& l : levels) {
    out << l.bricks << ',' << l.count << ',' << l.extensions << '\n';
  }
}

}  // namespace bricks
