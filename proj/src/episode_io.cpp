#include "bricks/episode_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "bricks/errors.hpp"

namespace bricks {

using nlohmann::json;

namespace {

json vec_json(const Vec3i& v) { return json::array({v.x, v.y, v.z}); }

Vec3i vec_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

}  // namespace

void write_episode(std::ostream& out, const EpisodeRecord& record) {
  const EpisodeHeader& h = record.header;
  json header = {{"type", "header"},
                 {"target_id", h.target_id},
                 {"seed", h.seed},
                 {"config_hash", h.config_hash},
                 {"offset_set", std::string(to_string(h.offset_set))},
                 {"bounds", json::array({vec_json(h.bounds.min), vec_json(h.bounds.max)})},
                 {"budget", h.budget}};
  out << header.dump() << '\n';
  for (const EpisodeStep& st : record.steps) {
    json step = {{"t", st.t},
                 {"pivot", st.action.pivot},
                 {"offset", st.action.offset},
                 {"pose", json::array({st.pose.anchor.x, st.pose.anchor.y, st.pose.anchor.z,
                                       st.pose.dir})},
                 {"reward", st.reward},
                 {"masked_count", st.masked_count}};
    out << step.dump() << '\n';
  }
  json summary = {{"type", "summary"},
                  {"final_iou", record.final_iou},
                  {"termination", std::string(to_string(record.termination))}};
  out << summary.dump() << '\n';
}

std::vector<EpisodeRecord> read_episodes(std::istream& in) {
  std::vector<EpisodeRecord> out;
  EpisodeRecord cur;
  bool open = false;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      const json j = json::parse(line);
      const std::string type = j.value("type", std::string("step"));
      if (type == "header") {
        if (open) {
          throw ParseError("header before the previous episode's summary", line_start);
        }
        cur = EpisodeRecord{};
        EpisodeHeader& h = cur.header;
        h.target_id = j.at("target_id").get<std::string>();
        h.seed = j.at("seed").get<std::uint64_t>();
        h.config_hash = j.at("config_hash").get<std::uint64_t>();
        h.offset_set = parse_offset_set(j.at("offset_set").get<std::string>());
        h.bounds = Bounds{vec_from(j.at("bounds").at(0)), vec_from(j.at("bounds").at(1))};
        h.budget = j.at("budget").get<int>();
        open = true;
      } else if (type == "step") {
        if (!open) {
          throw ParseError("step outside an episode", line_start);
        }
        EpisodeStep st;
        st.t = j.at("t").get<int>();
        st.action.pivot = j.at("pivot").get<int>();
        st.action.offset = j.at("offset").get<int>();
        const json& p = j.at("pose");
        st.pose = BrickPose{{p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()},
                            p.at(3).get<int>()};
        st.reward = j.at("reward").get<double>();
        st.masked_count = j.at("masked_count").get<std::size_t>();
        cur.steps.push_back(st);
      } else if (type == "summary") {
        if (!open) {
          throw ParseError("summary outside an episode", line_start);
        }
        cur.final_iou = j.at("final_iou").get<double>();
        cur.termination = parse_termination(j.at("termination").get<std::string>());
        out.push_back(std::move(cur));
        open = false;
      } else {
        throw ParseError("unknown record type '" + type + "'", line_start);
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed episode line: ") + e.what(), line_start);
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_start);
    }
  }
  if (open) {
    throw ParseError("episode without a summary line", offset);
  }
  return out;
}

void write_episodes(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  for (const EpisodeRecord& r : records) {
    write_episode(out, r);
  }
}

std::vector<EpisodeRecord> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  return read_episodes(in);
}

}  // namespace bricks
