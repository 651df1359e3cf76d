#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bricks/assembly.hpp"
#include "bricks/geometry.hpp"
#include "bricks/targets.hpp"
#include "bricks/training.hpp"

namespace bricks {

/// One line of a target list. File names are relative to the list's
/// directory. `poses` and `actions` are present for generated assemblies.
struct TargetRecord {
  std::string id;
  TaskMode mode = TaskMode::RandomAssembly;
  OffsetSetId offset_set = OffsetSetId::RandomAssembly;
  Bounds bounds = Bounds::cube32();
  std::vector<BrickPose> poses;
  std::vector<BrickAction> actions;
  std::vector<std::string> views;
  std::string volume;
  int budget = 1;
  std::optional<int> configured_budget;

  friend bool operator==(const TargetRecord&, const TargetRecord&) = default;
};

/// Writes `<id>.vox` (BBVOX1) and `<id>_view<i>.pgm` into `dir` and returns
/// the record naming them.
TargetRecord write_target_files(const std::filesystem::path& dir, const TargetInfo& target,
                                OffsetSetId offsets, const Bounds& bounds);

// JSON lines: {"id", "mode", "offset_set", "bounds": [[min], [max]],
// "poses": [[x, y, z, dir], ...], "actions": [[pivot, offset], ...],
// "views": [file, ...], "volume": file, "budget": n, "configured_budget": n?}
void write_target_records(const std::filesystem::path& path, const std::vector<TargetRecord>& records);
/// Throws ParseError with the byte offset of the bad line.
std::vector<TargetRecord> read_target_records(const std::filesystem::path& path);

/// Reads the files a record names, relative to `base_dir`.
TargetInfo load_target(const TargetRecord& record, const std::filesystem::path& base_dir);
std::vector<std::shared_ptr<const TargetInfo>> load_targets(const std::filesystem::path& list);

/// Targets whose records carry their generating actions, replayed into
/// graphs. Throws ContractViolation for a record without actions.
std::vector<GeneratedAssembly> load_assemblies(const std::filesystem::path& list);

// Validity dataset, JSON lines: a header {"split", "min_size", "max_size",
// "offset_set", "bounds"} then one {"poses": [...], "pivot": "0101...",
// "offset": "..."} per record, offset bits row-major pivots x offsets.
void write_validity_dataset(const std::filesystem::path& path, const ValidityDataset& data);
ValidityDataset read_validity_dataset(const std::filesystem::path& path);

}  // namespace bricks
