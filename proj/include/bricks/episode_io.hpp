#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "bricks/environment.hpp"

namespace bricks {

// JSON lines: one header object, one object per step, one summary object.
// Several episodes may follow each other in one stream.
void write_episode(std::ostream& out, const EpisodeRecord& record);
std::vector<EpisodeRecord> read_episodes(std::istream& in);

void write_episodes(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_episodes(const std::filesystem::path& path);

}  // namespace bricks
