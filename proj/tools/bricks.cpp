#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bricks/action_space.hpp"
#include "bricks/dataset_io.hpp"
#include "bricks/enumeration.hpp"
#include "bricks/environment.hpp"
#include "bricks/episode_io.hpp"
#include "bricks/errors.hpp"
#include "bricks/ldraw.hpp"
#include "bricks/planners.hpp"
#include "bricks/run_config.hpp"
#include "bricks/training.hpp"

namespace fs = std::filesystem;
using namespace bricks;

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

constexpr const char* kFormats =
    "File formats:\n"
    "  target list     JSON lines, one target per line: id, mode, offset_set, bounds,\n"
    "                  poses [[x,y,z,dir]], actions [[pivot,offset]], views (PGM files),\n"
    "                  volume (BBVOX1 file), budget; files are relative to the list.\n"
    "  BBVOX1          'BBVOX1 nx ny nz' line, then nx*ny*nz '0'/'1' chars, x fastest.\n"
    "  PGM             plain bitmap 'P1', 1 = occupied, row 0 on top.\n"
    "  episodes        JSON lines: header {type, target_id, seed, config_hash,\n"
    "                  offset_set, bounds, budget}, steps {t, pivot, offset, pose,\n"
    "                  reward, masked_count}, summary {type, final_iou, termination}.\n"
    "  validity data   JSON lines: header {split, min_size, max_size, offset_set,\n"
    "                  bounds}, then {poses, pivot bits, offset bits}.\n"
    "  checkpoint      'BBCKPT1' manifest (meta, name, shape, byte offset) followed by\n"
    "                  a little-endian float32 payload.\n"
    "  config          'key = value' lines, '#' comments; unknown keys are rejected.\n";

std::string config_keys_help() {
  std::ostringstream os;
  os << "Config keys and defaults:\n";
  std::ostringstream defaults;
  write_run_config(defaults, RunConfig{});
  std::istringstream in(defaults.str());
  for (std::string line; std::getline(in, line);) {
    os << "  " << line << '\n';
  }
  return os.str();
}

/// Options shared by commands that read a RunConfig.
struct ConfigOptions {
  std::string config;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "Key-value config file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "Override one config key: key=value (repeatable)");
    cmd->add_option("--seed", seed, "Random seed (overrides the config)");
    cmd->footer(config_keys_help() + "\n" + kFormats);
  }

  RunConfig resolve() const {
    RunConfig c;
    if (!config.empty()) {
      c = load_run_config(config);
    }
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) {
        throw ConfigError("--set expects key=value, got '" + s + "'");
      }
      if (s.substr(0, eq) == "task") {
        RunConfig fresh = RunConfig::for_task(parse_task_mode(s.substr(eq + 1)));
        fresh.seed = c.seed;
        c = fresh;
      } else {
        c.set(s.substr(0, eq), s.substr(eq + 1));
      }
    }
    if (seed) {
      c.seed = *seed;
    }
    c.validate();
    return c;
  }
};

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  return out;
}

OffsetSetId offsets_option(const std::string& name) { return parse_offset_set(name); }

Bounds bounds_option(const std::string& name) {
  RunConfig c;
  c.bounds = name;
  return c.bounds_value();
}

using Runner = std::function<int()>;

Runner add_enumerate(CLI::App& app) {
  auto* cmd = app.add_subcommand("enumerate", "Count distinct n-brick buildings");
  struct Opts {
    int bricks = 0;
    double max_mem_gb = 2.0;
    int jobs = 1;
    std::string offsets = "full";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--bricks", o->bricks, "Number of bricks n")->required()->check(CLI::Range(1, 64));
  cmd->add_option("--max-mem-gb", o->max_mem_gb, "Memory guard in GiB")->capture_default_str();
  cmd->add_option("--jobs", o->jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--offsets", o->offsets, "Offset set")->capture_default_str();
  cmd->footer(
      "Prints the count for n on the first line, then a CSV table with columns\n"
      "bricks,count,extensions (one row per level). Buildings are equal up to\n"
      "translation and quarter turns about the vertical axis.\n\n" +
      std::string(kFormats));
  return [o]() {
    EnumerationConfig cfg;
    cfg.offsets = offsets_option(o->offsets);
    cfg.max_bytes = static_cast<std::size_t>(o->max_mem_gb * 1024.0 * 1024.0 * 1024.0);
    cfg.jobs = o->jobs;
    try {
      const std::vector<LevelCount> levels = count_buildings(o->bricks, cfg);
      std::cout << levels.back().count << '\n';
      write_levels_csv(std::cout, levels);
    } catch (const PartialResult& e) {
      write_levels_csv(std::cout, e.levels());
      std::cerr << "error: " << e.what() << '\n';
      return kDomainError;
    }
    return kOk;
  };
}

Runner add_gen_assemblies(CLI::App& app) {
  auto* cmd = app.add_subcommand("gen-assemblies", "Generate random-assembly targets");
  struct Opts {
    int count = 100;
    int min_bricks = 10;
    int max_bricks = 15;
    std::string offsets = "random-assembly";
    std::string bounds = "cube32";
    std::string out_dir;
    std::string prefix = "assembly";
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--count", o->count, "Number of targets")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-bricks", o->min_bricks, "Smallest brick count")->capture_default_str();
  cmd->add_option("--max-bricks", o->max_bricks, "Largest brick count")->capture_default_str();
  cmd->add_option("--offsets", o->offsets, "Offset set")->capture_default_str();
  cmd->add_option("--bounds", o->bounds, "Lattice: cube32 or mnist")->capture_default_str();
  cmd->add_option("--out-dir", o->out_dir, "Output directory (targets.jsonl and files)")->required();
  cmd->add_option("--prefix", o->prefix, "Target id prefix")->capture_default_str();
  cmd->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  cmd->footer(kFormats);
  return [o]() {
    const OffsetSetId offs = offsets_option(o->offsets);
    const Bounds bounds = bounds_option(o->bounds);
    std::mt19937_64 rng(o->seed);
    GeneratorStats stats;
    std::vector<TargetRecord> recs;
    for (int i = 0; i < o->count; ++i) {
      GeneratedAssembly a = gen_random_assembly(rng, o->min_bricks, o->max_bricks, offset_set(offs), bounds,
                                                &stats, o->prefix + std::to_string(i));
      TargetRecord r = write_target_files(o->out_dir, a.target, offs, bounds);
      r.poses = a.graph.nodes();
      r.actions = a.actions;
      recs.push_back(std::move(r));
    }
    fs::create_directories(o->out_dir);
    write_target_records(fs::path(o->out_dir) / "targets.jsonl", recs);
    std::cout << "targets " << recs.size() << " dead_ends " << stats.dead_ends << '\n';
    return kOk;
  };
}

Runner add_gen_validity(CLI::App& app) {
  auto* cmd = app.add_subcommand("gen-validity", "Generate an oracle-labelled validity dataset");
  struct Opts {
    int count = 1000;
    int min_size = 1;
    int max_size = 20;
    std::string offsets = "random-assembly";
    std::string bounds = "cube32";
    std::string split = "train";
    std::string out;
    std::uint64_t seed = 0;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--count", o->count, "Number of assemblies")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-size", o->min_size, "Smallest brick count")->capture_default_str();
  cmd->add_option("--max-size", o->max_size, "Largest brick count")->capture_default_str();
  cmd->add_option("--offsets", o->offsets, "Offset set")->capture_default_str();
  cmd->add_option("--bounds", o->bounds, "Lattice: cube32 or mnist")->capture_default_str();
  cmd->add_option("--split", o->split, "Split tag")->capture_default_str();
  cmd->add_option("--out", o->out, "Output dataset (JSON lines)")->required();
  cmd->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  cmd->footer(kFormats);
  return [o]() {
    std::mt19937_64 rng(o->seed);
    const ValidityDataset d = make_validity_dataset(rng, o->count, o->min_size, o->max_size,
                                                    offsets_option(o->offsets), bounds_option(o->bounds), o->split);
    open_out(o->out).close();
    write_validity_dataset(o->out, d);
    std::cout << "records " << d.records.size() << '\n';
    return kOk;
  };
}

Runner add_train_avn(CLI::App& app) {
  auto* cmd = app.add_subcommand("train-avn", "Pretrain the action validity network");
  struct Opts {
    std::string data;
    std::string out;
    std::string curve;
    ConfigOptions cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--data", o->data, "Validity dataset")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o->out, "Checkpoint to write")->required();
  cmd->add_option("--curve", o->curve, "CSV of epoch,loss");
  o->cfg.add(cmd);
  return [o]() {
    RunConfig run = o->cfg.resolve();
    const ValidityDataset data = read_validity_dataset(o->data);
    run.offset_set = data.offset_set;
    ValidityNet<float> net(run.model(), run.seed);
    const std::vector<double> curve = train_avn(net, data, run.avn_training(), [](int epoch, double loss) {
      std::cerr << "epoch " << epoch << " loss " << loss << '\n';
    });
    open_out(o->out).close();
    ad::write_checkpoint(o->out, model_checkpoint(net.config(), kAvnKind, net.params()));
    if (!o->curve.empty()) {
      std::ofstream c = open_out(o->curve);
      c << "epoch,loss\n";
      for (std::size_t i = 0; i < curve.size(); ++i) {
        c << i << ',' << curve[i] << '\n';
      }
    }
    std::cout << "final_loss " << (curve.empty() ? avn_dataset_loss(net, data) : curve.back()) << '\n';
    return kOk;
  };
}

Runner add_eval_avn(CLI::App& app) {
  auto* cmd = app.add_subcommand("eval-avn", "Score a validity network against oracle labels");
  struct Opts {
    std::string model;
    std::string data;
    double threshold = 0.5;
    std::string curves;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--model", o->model, "AVN checkpoint")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", o->data, "Validity dataset")->required()->check(CLI::ExistingFile);
  cmd->add_option("--threshold", o->threshold, "Decision threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--curves", o->curves, "CSV of ROC/PR points: head,threshold,fpr,tpr,precision");
  cmd->footer(
      "Prints CSV head,positives,negatives,precision,recall,roc_auc,pr_auc with\n"
      "'valid' as the positive class.\n\n" +
      std::string(kFormats));
  return [o]() {
    const auto net = load_avn(o->model);
    const ValidityDataset data = read_validity_dataset(o->data);
    const AvnMetrics m = eval_avn(*net, data, o->threshold);
    std::cout << "head,positives,negatives,precision,recall,roc_auc,pr_auc\n";
    for (const auto& [name, bm] : {std::pair{"pivot", &m.pivot}, std::pair{"offset", &m.offset}}) {
      std::cout << name << ',' << bm->positives << ',' << bm->negatives << ',' << bm->precision << ','
                << bm->recall << ',' << bm->roc_auc << ',' << bm->pr_auc << '\n';
    }
    if (!o->curves.empty()) {
      std::ofstream c = open_out(o->curves);
      write_curves_csv(c, m);
    }
    return kOk;
  };
}

Runner add_train_ppo(CLI::App& app) {
  auto* cmd = app.add_subcommand("train-ppo", "Train the policy with PPO");
  struct Opts {
    std::string train;
    std::string test;
    std::string out;
    std::string curve;
    std::string init;
    ConfigOptions cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--train", o->train, "Training target list")->required()->check(CLI::ExistingFile);
  cmd->add_option("--test", o->test, "Held-out target list")->check(CLI::ExistingFile);
  cmd->add_option("--out", o->out, "Checkpoint to write")->required();
  cmd->add_option("--curve", o->curve,
                  "CSV: iteration,timesteps,episodes,train_return,train_iou,test_return,test_iou,"
                  "policy_loss,value_loss,entropy");
  cmd->add_option("--init", o->init, "Start from this policy checkpoint")->check(CLI::ExistingFile);
  o->cfg.add(cmd);
  return [o]() {
    const RunConfig run = o->cfg.resolve();
    const auto train = load_targets(o->train);
    const auto test = o->test.empty() ? std::vector<std::shared_ptr<const TargetInfo>>{} : load_targets(o->test);
    std::shared_ptr<PolicyValueNet<float>> net =
        o->init.empty() ? std::make_shared<PolicyValueNet<float>>(run.model(), run.seed) : load_policy(o->init);
    const PpoResult res = train_ppo(*net, run.env(), train, test, run.ppo(), run.seed, [](const PpoIteration& it) {
      std::cerr << "iteration " << it.iteration << " steps " << it.timesteps << " train_iou " << it.train_iou
                << " test_iou " << it.test_iou << '\n';
    });
    open_out(o->out).close();
    ad::write_checkpoint(o->out, model_checkpoint(net->config(), kPolicyKind, net->params()));
    if (!o->curve.empty()) {
      std::ofstream c = open_out(o->curve);
      write_curve_csv(c, res.curve);
    }
    if (!res.curve.empty()) {
      std::cout << "train_iou " << res.curve.back().train_iou << " test_iou " << res.curve.back().test_iou << '\n';
    }
    return kOk;
  };
}

Runner add_train_sl(CLI::App& app) {
  auto* cmd = app.add_subcommand("train-sl", "Train the supervised baseline on generating sequences");
  struct Opts {
    std::string train;
    std::string out;
    std::string curve;
    ConfigOptions cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--train", o->train, "Target list with actions (gen-assemblies)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o->out, "Checkpoint to write")->required();
  cmd->add_option("--curve", o->curve, "CSV of epoch,loss");
  o->cfg.add(cmd);
  return [o]() {
    RunConfig run = o->cfg.resolve();
    const std::vector<GeneratedAssembly> data = load_assemblies(o->train);
    if (!data.empty()) {
      const TargetRecord first = read_target_records(o->train).front();
      run.offset_set = first.offset_set;
    }
    const std::vector<SlStep> steps = teacher_forced_steps(data, run.offset_set, run.bounds_value());
    PolicyValueNet<float> net(run.model(), run.seed);
    const SlResult res = train_supervised(net, steps, run.sl_training(), [](int epoch, double loss) {
      std::cerr << "epoch " << epoch << " loss " << loss << '\n';
    });
    open_out(o->out).close();
    ad::write_checkpoint(o->out, model_checkpoint(net.config(), kPolicyKind, net.params()));
    if (!o->curve.empty()) {
      std::ofstream c = open_out(o->curve);
      c << "epoch,loss\n";
      for (std::size_t i = 0; i < res.loss_curve.size(); ++i) {
        c << i << ',' << res.loss_curve[i] << '\n';
      }
    }
    std::cout << "accuracy " << res.accuracy << '\n';
    return kOk;
  };
}

Runner add_eval_policy(CLI::App& app) {
  auto* cmd = app.add_subcommand("eval-policy", "Run a policy on targets and report final IoU");
  struct Opts {
    std::string policy;
    bool random = false;
    bool greedy = false;
    std::string targets;
    std::string out;
    ConfigOptions cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* pol = cmd->add_option("--policy", o->policy, "Policy checkpoint")->check(CLI::ExistingFile);
  auto* rnd = cmd->add_flag("--random", o->random, "Use the uniform random valid policy");
  pol->excludes(rnd);
  cmd->add_flag("--greedy", o->greedy, "Take the most likely action instead of sampling");
  cmd->add_option("--targets", o->targets, "Target list")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o->out, "Episode records to write");
  o->cfg.add(cmd);
  return [o]() {
    if (o->policy.empty() && !o->random) {
      throw ConfigError("eval-policy needs --policy or --random");
    }
    const RunConfig run = o->cfg.resolve();
    const auto targets = load_targets(o->targets);
    std::unique_ptr<Policy> policy;
    if (o->random) {
      policy = std::make_unique<RandomValidPolicy>();
    } else {
      policy = std::make_unique<NetworkPolicy>(load_policy(o->policy), o->greedy);
    }
    const PolicyScore s = evaluate_policy(*policy, run.env(), targets, run.seed);
    if (!o->out.empty()) {
      open_out(o->out).close();
      write_episodes(o->out, s.records);
    }
    std::cout << "episodes " << s.records.size() << " mean_iou " << s.mean_iou << " mean_return " << s.mean_return
              << '\n';
    return kOk;
  };
}

Runner add_plan(CLI::App& app) {
  auto* cmd = app.add_subcommand("plan", "Build targets with a volume-oracle planner");
  struct Opts {
    std::string method;
    int width = 8;
    int init = 5;
    int budget = 10;
    std::string target;
    std::string out;
    std::optional<int> index;
    int jobs = 1;
    ConfigOptions cfg;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--method", o->method, "random, greedy, beam or bo")
      ->required()
      ->check(CLI::IsMember({"random", "greedy", "beam", "bo"}));
  cmd->add_option("--width", o->width, "Beam width")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--init", o->init, "BO initial points per step")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--budget", o->budget, "BO evaluations per step after the initial points")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--target", o->target, "Target list")->required()->check(CLI::ExistingFile);
  cmd->add_option("--index", o->index, "Plan only this target of the list");
  cmd->add_option("--out", o->out, "Episode records to write")->required();
  cmd->add_option("--jobs", o->jobs, "Targets planned in parallel")->capture_default_str()->check(CLI::PositiveNumber);
  o->cfg.add(cmd);
  return [o]() {
    const RunConfig run = o->cfg.resolve();
    const fs::path list(o->target);
    std::vector<TargetRecord> recs = read_target_records(list);
    if (o->index) {
      if (*o->index < 0 || *o->index >= static_cast<int>(recs.size())) {
        throw ConfigError("--index out of range");
      }
      recs = {recs[static_cast<std::size_t>(*o->index)]};
    }
    std::vector<std::shared_ptr<const TargetInfo>> targets;
    for (const TargetRecord& r : recs) {
      targets.push_back(std::make_shared<const TargetInfo>(load_target(r, list.parent_path())));
    }
    std::vector<EpisodeRecord> out(recs.size());
    auto plan_one = [&](std::size_t i) {
      EnvConfig env = run.env();
      env.offset_set = recs[i].offset_set;
      env.bounds = recs[i].bounds;
      const std::uint64_t seed = run.seed + i;
      if (o->method == "random") {
        out[i] = random_plan(targets[i], env, seed);
      } else if (o->method == "greedy") {
        out[i] = greedy_plan(targets[i], env, seed);
      } else if (o->method == "beam") {
        out[i] = beam_plan(targets[i], env, o->width, seed);
      } else {
        BoConfig bo;
        bo.init_points = o->init;
        bo.budget_per_step = o->budget;
        out[i] = bo_plan(targets[i], env, bo, seed);
      }
    };
    // Episodes are independent, so the result does not depend on --jobs.
    const std::size_t jobs = std::min<std::size_t>(static_cast<std::size_t>(o->jobs), std::max<std::size_t>(recs.size(), 1));
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (std::size_t j = 0; j < jobs; ++j) {
      workers.emplace_back([&, j] {
        try {
          for (std::size_t i = j; i < recs.size(); i += jobs) {
            plan_one(i);
          }
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (std::thread& w : workers) {
      w.join();
    }
    for (const std::exception_ptr& e : errors) {
      if (e) {
        std::rethrow_exception(e);
      }
    }
    open_out(o->out).close();
    write_episodes(o->out, out);
    double iou = 0.0;
    for (const EpisodeRecord& r : out) {
      iou += r.final_iou;
    }
    std::cout << "episodes " << out.size() << " mean_iou " << (out.empty() ? 0.0 : iou / out.size()) << '\n';
    return kOk;
  };
}

Runner add_render(CLI::App& app) {
  auto* cmd = app.add_subcommand("render", "Export an episode's final assembly to LDraw and PGM views");
  struct Opts {
    std::string episodes;
    int index = 0;
    std::string out_dir;
    std::string name = "assembly";
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--episodes", o->episodes, "Episode records")->required()->check(CLI::ExistingFile);
  cmd->add_option("--index", o->index, "Episode within the file")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--out-dir", o->out_dir, "Output directory")->required();
  cmd->add_option("--name", o->name, "Base file name")->capture_default_str();
  cmd->footer(
      "Writes <name>.ldr (part 3001, 20 LDU per stud, 24 LDU per level) and\n"
      "<name>_front.pgm, <name>_right.pgm, <name>_top.pgm.\n\n" +
      std::string(kFormats));
  return [o]() {
    const std::vector<EpisodeRecord> recs = read_episodes(fs::path(o->episodes));
    if (o->index >= static_cast<int>(recs.size())) {
      throw ConfigError("--index out of range: file holds " + std::to_string(recs.size()) + " episodes");
    }
    const EpisodeRecord& r = recs[static_cast<std::size_t>(o->index)];
    std::vector<BrickAction> actions;
    for (const EpisodeStep& st : r.steps) {
      actions.push_back(st.action);
    }
    if (r.termination == Termination::InvalidAction && !actions.empty()) {
      actions.pop_back();  // the rejected action placed nothing
    }
    const AssemblyGraph g = replay_actions(actions, offset_set(r.header.offset_set), r.header.bounds);
    const fs::path dir(o->out_dir);
    fs::create_directories(dir);
    std::ofstream ldr = open_out(dir / (o->name + ".ldr"));
    write_ldraw(ldr, g, o->name);
    const ViewSet views = project_views(voxelize(g, r.header.bounds));
    const char* names[] = {"front", "right", "top"};
    for (std::size_t i = 0; i < views.views.size(); ++i) {
      write_pgm(dir / (o->name + "_" + names[i] + ".pgm"), views.views[i]);
    }
    std::cout << "bricks " << g.size() << '\n';
    return kOk;
  };
}

Runner add_oracle_bench(CLI::App& app) {
  auto* cmd = app.add_subcommand("oracle-bench", "Time naive against accelerated validity masks");
  struct Opts {
    int max_bricks = 100;
    int step = 10;
    int repeats = 3;
    std::uint64_t seed = 0;
    std::string out;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--max-bricks", o->max_bricks, "Largest assembly")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--step", o->step, "Brick count increment")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--repeats", o->repeats, "Timings averaged per size")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o->seed, "Random seed")->capture_default_str();
  cmd->add_option("--out", o->out, "CSV file (default: standard output)");
  cmd->footer("CSV columns: t,naive_ms,accelerated_ms (full offsets, 32^3 lattice).\n\n" + std::string(kFormats));
  return [o]() {
    std::mt19937_64 rng(o->seed);
    const OffsetSet& offs = offset_set(OffsetSetId::Full);
    const Bounds b = Bounds::cube32();
    std::ofstream file;
    if (!o->out.empty()) {
      file = open_out(o->out);
    }
    std::ostream& out = o->out.empty() ? std::cout : file;
    out << "t,naive_ms,accelerated_ms\n";
    for (int t = o->step; t <= o->max_bricks; t += o->step) {
      const AssemblyGraph g = random_construction(rng, t, offs, b).graph;
      auto time_ms = [&](MaskMode mode) {
        double total = 0.0;
        for (int r = 0; r < o->repeats; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          compute_masks(g, offs, b, mode);
          const auto t1 = std::chrono::steady_clock::now();
          total += std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        return total / o->repeats;
      };
      out << t << ',' << time_ms(MaskMode::Naive) << ',' << time_ms(MaskMode::Accelerated) << '\n';
    }
    return kOk;
  };
}

Runner add_mnist_targets(CLI::App& app) {
  auto* cmd = app.add_subcommand("mnist-targets", "Convert IDX digit images to construction targets");
  struct Opts {
    std::string images;
    std::string labels;
    std::optional<int> digit;
    int start = 0;
    int count = 100;
    std::string out_dir;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--images", o->images, "IDX image file (magic 0x00000803)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--labels", o->labels, "IDX label file (magic 0x00000801)")->check(CLI::ExistingFile);
  cmd->add_option("--digit", o->digit, "Keep only this digit (needs --labels)")->check(CLI::Range(0, 9));
  cmd->add_option("--start", o->start, "First image index")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--count", o->count, "Number of targets")->capture_default_str()->check(CLI::NonNegativeNumber);
  cmd->add_option("--out-dir", o->out_dir, "Output directory (targets.jsonl and files)")->required();
  cmd->footer(
      "Images are thresholded at 128, pooled to 14x14 and extruded 4 deep; the\n"
      "budget is ceil(1.1 * on pixels). Blank images are skipped.\n\n" +
      std::string(kFormats));
  return [o]() {
    if (o->digit && o->labels.empty()) {
      throw ConfigError("--digit needs --labels");
    }
    const IdxImages imgs = read_idx_images(fs::path(o->images));
    std::vector<std::uint8_t> labels;
    if (!o->labels.empty()) {
      labels = read_idx_labels(fs::path(o->labels));
      if (static_cast<int>(labels.size()) != imgs.count) {
        throw ContractViolation("label count does not match image count");
      }
    }
    if (imgs.rows != 28 || imgs.cols != 28) {
      throw ContractViolation("expected 28x28 images");
    }
    std::vector<TargetRecord> recs;
    for (int i = o->start; i < imgs.count && static_cast<int>(recs.size()) < o->count; ++i) {
      if (o->digit && labels[static_cast<std::size_t>(i)] != *o->digit) {
        continue;
      }
      try {
        const TargetInfo t = mnist_to_target(imgs.image(i), "mnist" + std::to_string(i));
        recs.push_back(write_target_files(o->out_dir, t, OffsetSetId::Mnist, Bounds::mnist()));
      } catch (const EmptyTarget&) {
        continue;
      }
    }
    fs::create_directories(o->out_dir);
    write_target_records(fs::path(o->out_dir) / "targets.jsonl", recs);
    std::cout << "targets " << recs.size() << '\n';
    return kOk;
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Brick construction toolkit: enumeration, datasets, training, planning and export"};
  app.require_subcommand(1, 1);
  app.footer(kFormats);
  std::vector<std::pair<CLI::App*, Runner>> commands;
  auto reg = [&](Runner (*add)(CLI::App&)) {
    Runner r = add(app);
    commands.emplace_back(app.get_subcommands({}).back(), std::move(r));
  };
  reg(add_enumerate);
  reg(add_gen_assemblies);
  reg(add_gen_validity);
  reg(add_train_avn);
  reg(add_eval_avn);
  reg(add_train_ppo);
  reg(add_train_sl);
  reg(add_eval_policy);
  reg(add_plan);
  reg(add_render);
  reg(add_oracle_bench);
  reg(add_mnist_targets);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* bad = &app;
    for (CLI::App* sub : app.get_subcommands()) {
      bad = sub;
    }
    std::cerr << bad->help("", CLI::AppFormatMode::Normal);
    return kUsageError;
  }

  for (auto& [sub, run] : commands) {
    if (!sub->parsed()) {
      continue;
    }
    try {
      return run();
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kUsageError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kDomainError;
    }
  }
  return kUsageError;
}
