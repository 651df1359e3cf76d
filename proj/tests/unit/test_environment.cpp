#include <doctest.h>

#include <memory>
#include <random>
#include <sstream>

#include "bricks/environment.hpp"
#include "bricks/episode_io.hpp"
#include "bricks/errors.hpp"

using namespace bricks;

namespace {

int offset_index(const OffsetSet& s, Offset o) {
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == o) {
      return static_cast<int>(k);
    }
  }
  return -1;
}

std::shared_ptr<const TargetInfo> tower_target(int height, const Bounds& b = Bounds::cube32()) {
  AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  for (int z = 1; z < height; ++z) {
    g = g.with_brick(BrickPose{{0, 0, z}, 0});
  }
  TargetInfo t = volume_target(voxelize(g, b), TaskMode::RandomAssembly, std::nullopt, "tower");
  t.budget = height;
  return std::make_shared<const TargetInfo>(std::move(t));
}

// Marks every action valid, so oracle-invalid picks reach the environment.
class AllValid : public MaskPredictor {
 public:
  explicit AllValid(int offsets) : offsets_(offsets) {}
  ActionMasks predict_masks(const AssemblyGraph& g, double) const override {
    ActionMasks m(static_cast<int>(g.size()), offsets_);
    std::fill(m.offset_valid.begin(), m.offset_valid.end(), 1);
    m.refresh_pivots();
    return m;
  }

 private:
  int offsets_;
};

class FixedPolicy : public Policy {
 public:
  explicit FixedPolicy(std::vector<BrickAction> a) : actions_(std::move(a)) {}
  BrickAction act(const Observation&, std::mt19937_64&) override { return actions_.at(i_++); }

 private:
  std::vector<BrickAction> actions_;
  std::size_t i_ = 0;
};

}  // namespace

TEST_CASE("reset yields the origin brick and oracle masks") {
  Environment env(EnvConfig{});
  const auto target = tower_target(4);
  const Observation a = env.reset(target, 1);
  const Observation b = env.reset(target, 1);
  CHECK(a.graph == b.graph);
  CHECK(a.masks == b.masks);
  CHECK(a.graph.size() == 1);
  CHECK(a.graph.node_feature(0) == NodeFeature{0, 0, 0, 0});
  CHECK(a.masks.valid_count() == 46);

  EnvConfig open;
  open.bounds = Bounds{{-14, -15, -16}, {18, 17, 16}};
  Environment env2(open);
  AssemblyGraph g = AssemblyGraph::single(BrickPose{});
  TargetInfo t = volume_target(voxelize(g, open.bounds), TaskMode::RandomAssembly, std::nullopt, "x");
  t.budget = 3;
  CHECK(env2.reset(std::make_shared<const TargetInfo>(t), 0).masks.valid_count() == 92);
}

TEST_CASE("reset rejects empty targets") {
  Environment env(EnvConfig{});
  TargetInfo t;
  t.exact_volume = VoxelGrid(32, 32, 32);
  CHECK_THROWS_AS(env.reset(std::make_shared<const TargetInfo>(t), 0), EmptyTarget);
}

TEST_CASE("config validation") {
  EnvConfig c;
  c.gamma = 1.0;
  CHECK_THROWS_AS(Environment{c}, ConfigError);
  c.gamma = 0.5;
  c.mask_source.predictor = std::make_shared<AllValid>(92);
  c.mask_source.threshold = 1.0;
  CHECK_THROWS_AS(Environment{c}, ConfigError);
  c.mask_source.threshold = 0.5;
  CHECK_NOTHROW(Environment{c});
  EnvConfig d;
  CHECK(d.hash() == EnvConfig{}.hash());
  d.gamma = 0.5;
  CHECK(d.hash() != EnvConfig{}.hash());
}

TEST_CASE("on-target placement is rewarded and the budget ends the episode") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  const int up = offset_index(full, Offset{{0, 0, 1}, 0});
  Environment env(EnvConfig{});
  env.reset(tower_target(3), 0);
  CHECK(env.current_iou() == doctest::Approx(1.0 / 3.0));
  StepResult r = env.step(BrickAction{0, up});
  CHECK(r.reward == doctest::Approx(2.0 / 3.0 - 1.0 / 3.0));
  CHECK(r.reward > 0.0);
  CHECK_FALSE(r.done);
  r = env.step(BrickAction{1, up});
  CHECK(r.done);
  CHECK(r.info.termination == Termination::BudgetExhausted);
  CHECK(r.info.final_iou == 1.0);
  CHECK_THROWS_AS(env.step(BrickAction{0, up}), ContractViolation);
}

TEST_CASE("an oracle-invalid action under predicted masks ends the episode") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  EnvConfig cfg;
  cfg.mask_source.predictor = std::make_shared<AllValid>(static_cast<int>(full.size()));
  Environment env(cfg);
  env.reset(tower_target(3), 0);
  const int down = offset_index(full, Offset{{0, 0, -1}, 0});
  const StepResult r = env.step(BrickAction{0, down});
  CHECK(r.done);
  CHECK(r.reward == 0.0);
  CHECK(r.info.termination == Termination::InvalidAction);
}

TEST_CASE("random episodes telescope, replay exactly and never hit invalid actions") {
  std::mt19937_64 rng(17);
  EnvConfig cfg;
  for (int e = 0; e < 30; ++e) {
    const GeneratedAssembly ga = gen_random_assembly(rng, 2, 8, offset_set(OffsetSetId::Full),
                                                     Bounds::cube32(), nullptr, "g");
    const auto target = std::make_shared<const TargetInfo>(ga.target);
    Environment env(cfg);
    RandomValidPolicy pol;
    const EpisodeRecord rec = run_episode(pol, env, target, 100 + e, rng);
    CHECK(rec.termination != Termination::InvalidAction);
    CHECK(rec.final_iou >= 0.0);
    CHECK(rec.final_iou <= 1.0);
    CHECK(static_cast<int>(rec.steps.size()) <= rec.header.budget - 1);
    const EpisodeRecord again = replay_episode(rec, target, cfg);
    CHECK(again == rec);
    CHECK(replay_actions([&] {
            std::vector<BrickAction> a;
            for (const EpisodeStep& s : rec.steps) a.push_back(s.action);
            return a;
          }(), offset_set(cfg.offset_set), cfg.bounds) == env.state().graph);
  }
}

TEST_CASE("a run with no valid action terminates with that tag") {
  // One level of lattice: every Mnist offset changes z, so nothing fits.
  EnvConfig cfg;
  cfg.offset_set = OffsetSetId::Mnist;
  cfg.bounds = Bounds{{0, -6, 0}, {4, 8, 1}};
  Environment env(cfg);
  VoxelGrid vol(cfg.bounds.dims());
  vol.set({0, 6, 0});
  TargetInfo t;
  t.id = "flat";
  t.mode = TaskMode::RandomAssembly;
  t.exact_volume = vol;
  t.budget = 5;
  std::mt19937_64 rng(1);
  RandomValidPolicy pol;
  const EpisodeRecord rec = run_episode(pol, env, std::make_shared<const TargetInfo>(t), 3, rng);
  CHECK(rec.termination == Termination::NoValidAction);
  CHECK(rec.steps.empty());
}

TEST_CASE("same seed gives identical records and JSON lines round-trip") {
  EnvConfig cfg;
  std::vector<EpisodeRecord> recs;
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 gen(5);
    const GeneratedAssembly ga = gen_random_assembly(gen, 5, 10, offset_set(OffsetSetId::Full),
                                                     Bounds::cube32(), nullptr, "t");
    Environment env(cfg);
    RandomValidPolicy pol;
    std::mt19937_64 rng(42);
    recs.push_back(run_episode(pol, env, std::make_shared<const TargetInfo>(ga.target), 42, rng));
  }
  CHECK(recs[0] == recs[1]);
  std::stringstream a;
  std::stringstream b;
  write_episode(a, recs[0]);
  write_episode(b, recs[1]);
  CHECK(a.str() == b.str());

  std::stringstream both;
  write_episode(both, recs[0]);
  write_episode(both, recs[1]);
  const std::vector<EpisodeRecord> back = read_episodes(both);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == recs[0]);
  CHECK(back[1] == recs[1]);

  std::istringstream broken("{\"type\":\"header\"}\n");
  CHECK_THROWS_AS(read_episodes(broken), ParseError);
  std::istringstream unterminated(a.str().substr(0, a.str().rfind("{\"final_iou")));
  CHECK_THROWS_AS(read_episodes(unterminated), ParseError);
}

TEST_CASE("fixed policy on a tower reaches IoU 1") {
  const OffsetSet& full = offset_set(OffsetSetId::Full);
  const int up = offset_index(full, Offset{{0, 0, 1}, 0});
  Environment env(EnvConfig{});
  FixedPolicy pol({{0, up}, {1, up}, {2, up}});
  std::mt19937_64 rng(0);
  const EpisodeRecord rec = run_episode(pol, env, tower_target(4), 0, rng);
  CHECK(rec.final_iou == 1.0);
  CHECK(rec.steps.size() == 3);
  CHECK(rec.total_reward() == doctest::Approx(0.75));
}
