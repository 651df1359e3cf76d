#include "bricks/dataset_io.hpp"

#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

#include "bricks/action_space.hpp"
#include "bricks/errors.hpp"
#include "bricks/voxel.hpp"

namespace bricks {

using nlohmann::json;

namespace {

json vec_json(const Vec3i& v) { return json::array({v.x, v.y, v.z}); }
Vec3i vec_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

json bounds_json(const Bounds& b) { return json::array({vec_json(b.min), vec_json(b.max)}); }
Bounds bounds_from(const json& j) { return {vec_from(j.at(0)), vec_from(j.at(1))}; }

json poses_json(const std::vector<BrickPose>& poses) {
  json a = json::array();
  for (const BrickPose& p : poses) {
    a.push_back(json::array({p.anchor.x, p.anchor.y, p.anchor.z, p.dir}));
  }
  return a;
}

std::vector<BrickPose> poses_from(const json& j) {
  std::vector<BrickPose> out;
  for (const json& p : j) {
    out.push_back(BrickPose{{p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()}, p.at(3).get<int>()});
  }
  return out;
}

AssemblyGraph graph_of(const std::vector<BrickPose>& poses) {
  if (poses.empty()) {
    throw ContractViolation("empty pose list");
  }
  AssemblyGraph g = AssemblyGraph::single(poses.front());
  for (std::size_t i = 1; i < poses.size(); ++i) {
    g = g.with_brick(poses[i]);
  }
  return g;
}

std::string bits(const std::vector<std::uint8_t>& v) {
  std::string s(v.size(), '0');
  for (std::size_t i = 0; i < v.size(); ++i) {
    s[i] = v[i] ? '1' : '0';
  }
  return s;
}

std::vector<std::uint8_t> bits_from(const std::string& s) {
  std::vector<std::uint8_t> v(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') {
      throw ConfigError("label strings hold only '0' and '1'");
    }
    v[i] = s[i] == '1' ? 1 : 0;
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  return out;
}

// Calls `fn(json, line_start)` for every non-blank line, converting JSON and
// config errors into ParseError at the line's offset.
void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read " + path.string());
  }
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t start = offset;
    offset += line.size() + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    try {
      fn(json::parse(line), start);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ": " + e.what(), start);
    } catch (const ConfigError& e) {
      throw ParseError(path.string() + ": " + e.what(), start);
    }
  }
}

}  // namespace

TargetRecord write_target_files(const std::filesystem::path& dir, const TargetInfo& target,
                                OffsetSetId offsets, const Bounds& bounds) {
  if (!target.exact_volume) {
    throw ContractViolation("target '" + target.id + "' has no volume to write");
  }
  std::filesystem::create_directories(dir);
  TargetRecord r;
  r.id = target.id;
  r.mode = target.mode;
  r.offset_set = offsets;
  r.bounds = bounds;
  r.volume = target.id + ".vox";
  write_voxel(dir / r.volume, *target.exact_volume);
  for (std::size_t i = 0; i < target.views.size(); ++i) {
    r.views.push_back(target.id + "_view" + std::to_string(i) + ".pgm");
    write_pgm(dir / r.views.back(), target.views[i]);
  }
  r.budget = target.budget;
  r.configured_budget = target.configured_budget;
  return r;
}

void write_target_records(const std::filesystem::path& path, const std::vector<TargetRecord>& records) {
  std::ofstream out = open_out(path);
  for (const TargetRecord& r : records) {
    json actions = json::array();
    for (const BrickAction& a : r.actions) {
      actions.push_back(json::array({a.pivot, a.offset}));
    }
    json j = {{"id", r.id},
              {"mode", std::string(to_string(r.mode))},
              {"offset_set", std::string(to_string(r.offset_set))},
              {"bounds", bounds_json(r.bounds)},
              {"poses", poses_json(r.poses)},
              {"actions", actions},
              {"views", r.views},
              {"volume", r.volume},
              {"budget", r.budget}};
    if (r.configured_budget) {
      j["configured_budget"] = *r.configured_budget;
    }
    out << j.dump() << '\n';
  }
}

std::vector<TargetRecord> read_target_records(const std::filesystem::path& path) {
  std::vector<TargetRecord> out;
  for_each_json_line(path, [&](const json& j, std::size_t) {
    TargetRecord r;
    r.id = j.at("id").get<std::string>();
    r.mode = parse_task_mode(j.at("mode").get<std::string>());
    r.offset_set = parse_offset_set(j.at("offset_set").get<std::string>());
    r.bounds = bounds_from(j.at("bounds"));
    r.poses = poses_from(j.value("poses", json::array()));
    for (const json& a : j.value("actions", json::array())) {
      r.actions.push_back({a.at(0).get<int>(), a.at(1).get<int>()});
    }
    r.views = j.at("views").get<std::vector<std::string>>();
    r.volume = j.at("volume").get<std::string>();
    r.budget = j.at("budget").get<int>();
    if (j.contains("configured_budget")) {
      r.configured_budget = j.at("configured_budget").get<int>();
    }
    out.push_back(std::move(r));
  });
  return out;
}

TargetInfo load_target(const TargetRecord& record, const std::filesystem::path& base_dir) {
  TargetInfo t;
  t.id = record.id;
  t.mode = record.mode;
  t.exact_volume = read_voxel(base_dir / record.volume);
  if (t.exact_volume->dims() != record.bounds.dims()) {
    throw ContractViolation("target '" + record.id + "': volume does not match the record bounds");
  }
  for (const std::string& v : record.views) {
    t.views.push_back(read_pgm(base_dir / v));
  }
  t.configured_budget = record.configured_budget;
  t.budget = record.budget;
  t.budget = brick_budget(t);
  return t;
}

std::vector<std::shared_ptr<const TargetInfo>> load_targets(const std::filesystem::path& list) {
  std::vector<std::shared_ptr<const TargetInfo>> out;
  for (const TargetRecord& r : read_target_records(list)) {
    out.push_back(std::make_shared<const TargetInfo>(load_target(r, list.parent_path())));
  }
  return out;
}

std::vector<GeneratedAssembly> load_assemblies(const std::filesystem::path& list) {
  std::vector<GeneratedAssembly> out;
  for (const TargetRecord& r : read_target_records(list)) {
    if (r.actions.empty() && r.poses.size() != 1) {
      throw ContractViolation("target '" + r.id + "' has no generating actions");
    }
    GeneratedAssembly a;
    a.actions = r.actions;
    a.graph = replay_actions(r.actions, offset_set(r.offset_set), r.bounds);
    a.target = load_target(r, list.parent_path());
    out.push_back(std::move(a));
  }
  return out;
}

void write_validity_dataset(const std::filesystem::path& path, const ValidityDataset& data) {
  std::ofstream out = open_out(path);
  const json header = {{"split", data.split},
                       {"min_size", data.min_size},
                       {"max_size", data.max_size},
                       {"offset_set", std::string(to_string(data.offset_set))},
                       {"bounds", bounds_json(data.bounds)}};
  out << header.dump() << '\n';
  for (const ValidityRecord& r : data.records) {
    const json j = {{"poses", poses_json(r.graph.nodes())},
                    {"pivot", bits(r.labels.pivot_valid)},
                    {"offset", bits(r.labels.offset_valid)}};
    out << j.dump() << '\n';
  }
}

ValidityDataset read_validity_dataset(const std::filesystem::path& path) {
  ValidityDataset d;
  bool header = false;
  for_each_json_line(path, [&](const json& j, std::size_t start) {
    if (!header) {
      d.split = j.at("split").get<std::string>();
      d.min_size = j.at("min_size").get<int>();
      d.max_size = j.at("max_size").get<int>();
      d.offset_set = parse_offset_set(j.at("offset_set").get<std::string>());
      d.bounds = bounds_from(j.at("bounds"));
      header = true;
      return;
    }
    ValidityRecord r;
    const std::vector<BrickPose> poses = poses_from(j.at("poses"));
    if (poses.empty()) {
      throw ParseError("validity record without bricks", start);
    }
    r.graph = graph_of(poses);
    const int n_off = static_cast<int>(offset_set(d.offset_set).size());
    r.labels = ActionMasks(static_cast<int>(poses.size()), n_off);
    r.labels.pivot_valid = bits_from(j.at("pivot").get<std::string>());
    r.labels.offset_valid = bits_from(j.at("offset").get<std::string>());
    if (r.labels.pivot_valid.size() != poses.size() ||
        r.labels.offset_valid.size() != poses.size() * static_cast<std::size_t>(n_off)) {
      throw ParseError("validity labels do not match the brick count", start);
    }
    d.records.push_back(std::move(r));
  });
  if (!header) {
    throw ParseError(path.string() + ": missing dataset header", 0);
  }
  return d;
}

}  // namespace bricks
