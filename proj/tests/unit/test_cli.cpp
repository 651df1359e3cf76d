#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "bricks/action_space.hpp"
#include "bricks/dataset_io.hpp"
#include "bricks/episode_io.hpp"
#include "bricks/voxel.hpp"

using namespace bricks;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  static const fs::path d = [] {
    const fs::path p = fs::temp_directory_path() / "bricks_test_cli";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Run bricks_cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string(BRICKS_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("enumerate prints the count then the level table") {
  const Run r = bricks_cli("enumerate --bricks 2");
  CHECK(r.code == 0);
  CHECK(r.out == "24\nbricks,count,extensions\n1,1,0\n2,24,92\n");
}

TEST_CASE("usage errors exit 2 with a synopsis") {
  Run r = bricks_cli("enumerate --bricks 2 --no-such-flag");
  CHECK(r.code == 2);
  CHECK(r.err.find("Usage:") != std::string::npos);
  r = bricks_cli("");
  CHECK(r.code == 2);
  r = bricks_cli("plan --method teleport --target x --out y");
  CHECK(r.code == 2);
  r = bricks_cli("enumerate --bricks 0");
  CHECK(r.code == 2);
}

TEST_CASE("help exits 0 and documents file formats") {
  const Run r = bricks_cli("plan --help");
  CHECK(r.code == 0);
  CHECK(r.out.find("BBVOX1") != std::string::npos);
  CHECK(r.out.find("total_timesteps = 500000") != std::string::npos);
}

TEST_CASE("memory guard returns the partial table and exits 1") {
  const Run r = bricks_cli("enumerate --bricks 4 --max-mem-gb 0.0001");
  CHECK(r.code == 1);
  CHECK(r.out == "bricks,count,extensions\n1,1,0\n2,24,92\n");
}

TEST_CASE("generate, plan, replay and render") {
  const fs::path d = scratch();
  const std::string targets = (d / "t" / "targets.jsonl").string();
  REQUIRE(bricks_cli("gen-assemblies --count 3 --min-bricks 4 --max-bricks 6 --seed 2 --out-dir " +
                     (d / "t").string())
              .code == 0);
  const std::vector<TargetRecord> recs = read_target_records(targets);
  REQUIRE(recs.size() == 3);

  const std::string ep = (d / "greedy.jsonl").string();
  REQUIRE(bricks_cli("plan --method greedy --jobs 2 --target " + targets + " --out " + ep).code == 0);
  const std::vector<EpisodeRecord> eps = read_episodes(fs::path(ep));
  REQUIRE(eps.size() == 3);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    CHECK(eps[i].header.target_id == recs[i].id);
    CHECK(eps[i].header.seed == i);
    std::vector<BrickAction> actions;
    for (const EpisodeStep& s : eps[i].steps) {
      actions.push_back(s.action);
    }
    // Every recorded action is valid when replayed from the initial brick.
    const AssemblyGraph g = replay_actions(actions, offset_set(eps[i].header.offset_set), eps[i].header.bounds);
    CHECK(g.size() == actions.size() + 1);
    CHECK(g.nodes().back() == eps[i].steps.back().pose);
  }

  // Job count does not change the records.
  const std::string ep1 = (d / "greedy1.jsonl").string();
  REQUIRE(bricks_cli("plan --method greedy --jobs 1 --target " + targets + " --out " + ep1).code == 0);
  CHECK(read_episodes(fs::path(ep1)) == eps);

  REQUIRE(bricks_cli("render --episodes " + ep + " --index 2 --name m --out-dir " + (d / "r").string()).code == 0);
  CHECK(fs::exists(d / "r" / "m.ldr"));
  CHECK(fs::exists(d / "r" / "m_top.pgm"));
  CHECK(bricks_cli("render --episodes " + ep + " --index 9 --out-dir " + (d / "r").string()).code == 2);
}

TEST_CASE("config errors exit 2") {
  const fs::path d = scratch();
  {
    std::ofstream cfg(d / "bad.cfg");
    cfg << "learning_rate = fast\n";
  }
  REQUIRE(bricks_cli("gen-assemblies --count 1 --min-bricks 2 --max-bricks 2 --out-dir " + (d / "c").string()).code ==
          0);
  const std::string targets = (d / "c" / "targets.jsonl").string();
  CHECK(bricks_cli("plan --method greedy --target " + targets + " --out x --config " + (d / "bad.cfg").string())
            .code == 2);
  CHECK(bricks_cli("plan --method greedy --target " + targets + " --out x --set mask_source=avn").code == 2);
}
