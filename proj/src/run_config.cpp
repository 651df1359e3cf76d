#include "bricks/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <utility>

#include "bricks/errors.hpp"

namespace bricks {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || text.empty()) {
    throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return v;
}

std::string format_double(double v) {
  // Shortest text that reads back to the same double.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number(std::string key, T RunConfig::*m) {
  Field f;
  f.key = key;
  f.set = [key, m](RunConfig& c, std::string_view v) { c.*m = parse_number<T>(key, v); };
  f.get = [m](const RunConfig& c) {
    if constexpr (std::is_floating_point_v<T>) {
      return format_double(c.*m);
    } else {
      return std::to_string(c.*m);
    }
  };
  return f;
}

Field text(std::string key, std::string RunConfig::*m) {
  return {key, [m](RunConfig& c, std::string_view v) { c.*m = std::string(v); },
          [m](const RunConfig& c) { return c.*m; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"task", [](RunConfig& c, std::string_view v) { c.task = parse_task_mode(v); },
       [](const RunConfig& c) { return std::string(to_string(c.task)); }},
      {"offset_set", [](RunConfig& c, std::string_view v) { c.offset_set = parse_offset_set(v); },
       [](const RunConfig& c) { return std::string(to_string(c.offset_set)); }},
      text("bounds", &RunConfig::bounds),
      number("seed", &RunConfig::seed),
      number("grad_clip", &RunConfig::grad_clip),
      number("entropy_coef", &RunConfig::entropy_coef),
      number("rollout_length", &RunConfig::rollout_length),
      number("total_timesteps", &RunConfig::total_timesteps),
      number("num_envs", &RunConfig::num_envs),
      number("learning_rate", &RunConfig::learning_rate),
      number("gamma", &RunConfig::gamma),
      number("lambda", &RunConfig::lambda),
      number("epochs", &RunConfig::epochs),
      number("minibatches", &RunConfig::minibatches),
      number("value_coef", &RunConfig::value_coef),
      number("clip_eps", &RunConfig::clip_eps),
      number("eval_every", &RunConfig::eval_every),
      number("eval_episodes", &RunConfig::eval_episodes),
      number("hidden_dim", &RunConfig::hidden_dim),
      number("gnn_layers", &RunConfig::gnn_layers),
      number("n_max", &RunConfig::n_max),
      {"arch", [](RunConfig& c, std::string_view v) { c.arch = parse_model_arch(v); },
       [](const RunConfig& c) { return std::string(to_string(c.arch)); }},
      number("gate_fraction", &RunConfig::gate_fraction),
      number("invalid_action_reward", &RunConfig::invalid_action_reward),
      text("mask_source", &RunConfig::mask_source),
      text("avn_checkpoint", &RunConfig::avn_checkpoint),
      number("avn_threshold", &RunConfig::avn_threshold),
      number("avn_epochs", &RunConfig::avn_epochs),
      number("avn_batch_graphs", &RunConfig::avn_batch_graphs),
      number("avn_learning_rate", &RunConfig::avn_learning_rate),
      number("sl_epochs", &RunConfig::sl_epochs),
      number("sl_batch_steps", &RunConfig::sl_batch_steps),
      number("sl_learning_rate", &RunConfig::sl_learning_rate),
  };
  return table;
}

const Field& field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) {
      return f;
    }
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

RunConfig RunConfig::for_task(TaskMode task) {
  RunConfig c;
  c.task = task;
  switch (task) {
    case TaskMode::Mnist:
      c.offset_set = OffsetSetId::Mnist;
      c.bounds = "mnist";
      break;
    case TaskMode::RandomAssembly:
      c.offset_set = OffsetSetId::RandomAssembly;
      break;
    case TaskMode::ModelNet:
      c.offset_set = OffsetSetId::ModelNet;
      break;
  }
  const PpoConfig p = PpoConfig::for_task(task);
  c.gamma = p.gamma;
  c.total_timesteps = p.total_timesteps;
  const ModelConfig m = ModelConfig::for_task(task, c.offset_set);
  c.hidden_dim = m.hidden_dim;
  c.n_max = m.n_max;
  return c;
}

void RunConfig::set(std::string_view key, std::string_view value) { field(key).set(*this, value); }

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> ks = [] {
    std::vector<std::string> out;
    for (const Field& f : fields()) {
      out.push_back(f.key);
    }
    return out;
  }();
  return ks;
}

std::string RunConfig::get(std::string_view key) const { return field(key).get(*this); }

Bounds RunConfig::bounds_value() const {
  if (bounds == "cube32") {
    return Bounds::cube32();
  }
  if (bounds == "mnist") {
    return Bounds::mnist();
  }
  throw ConfigError("bounds must be cube32 or mnist, got '" + bounds + "'");
}

PpoConfig RunConfig::ppo() const {
  PpoConfig p;
  p.gamma = gamma;
  p.lambda = lambda;
  p.clip_eps = clip_eps;
  p.epochs = epochs;
  p.minibatches = minibatches;
  p.rollout_length = rollout_length;
  p.num_envs = num_envs;
  p.entropy_coef = entropy_coef;
  p.value_coef = value_coef;
  p.learning_rate = learning_rate;
  p.grad_clip = grad_clip;
  p.total_timesteps = total_timesteps;
  p.eval_every = eval_every;
  p.eval_episodes = eval_episodes;
  return p;
}

ModelConfig RunConfig::model() const {
  ModelConfig m = ModelConfig::for_task(task, offset_set);
  m.hidden_dim = hidden_dim;
  m.gnn_layers = gnn_layers;
  m.n_max = n_max;
  m.arch = arch;
  return m;
}

EnvConfig RunConfig::env() const {
  EnvConfig e;
  e.offset_set = offset_set;
  e.bounds = bounds_value();
  e.reward.gate_fraction = gate_fraction;
  e.gamma = gamma;
  e.invalid_action_reward = invalid_action_reward;
  if (mask_source == "avn") {
    e.mask_source.predictor = std::make_shared<AvnMaskPredictor>(load_avn(avn_checkpoint));
    e.mask_source.threshold = avn_threshold;
  } else if (mask_source != "oracle") {
    throw ConfigError("mask_source must be oracle or avn, got '" + mask_source + "'");
  }
  return e;
}

AvnTrainConfig RunConfig::avn_training() const {
  AvnTrainConfig a;
  a.epochs = avn_epochs;
  a.batch_graphs = avn_batch_graphs;
  a.adam.lr = avn_learning_rate;
  a.adam.clip_norm = grad_clip;
  a.seed = seed;
  return a;
}

SlConfig RunConfig::sl_training() const {
  SlConfig s;
  s.epochs = sl_epochs;
  s.batch_steps = sl_batch_steps;
  s.adam.lr = sl_learning_rate;
  s.adam.clip_norm = grad_clip;
  s.seed = seed;
  return s;
}

void RunConfig::validate() const {
  ppo().validate();
  model().validate();
  bounds_value();
  if (mask_source != "oracle" && mask_source != "avn") {
    throw ConfigError("mask_source must be oracle or avn, got '" + mask_source + "'");
  }
  if (mask_source == "avn" && avn_checkpoint.empty()) {
    throw ConfigError("mask_source avn needs avn_checkpoint");
  }
  if (!(avn_threshold > 0.0 && avn_threshold < 1.0)) {
    throw ConfigError("avn_threshold must lie in (0, 1)");
  }
  if (!(gate_fraction >= 0.0 && gate_fraction <= 1.0)) {
    throw ConfigError("gate_fraction must lie in [0, 1]");
  }
  if (avn_epochs < 0 || avn_batch_graphs < 1 || !(avn_learning_rate > 0.0) || sl_epochs < 0 ||
      sl_batch_steps < 1 || !(sl_learning_rate > 0.0)) {
    throw ConfigError("pretraining settings need epochs >= 0, batch >= 1 and a positive learning rate");
  }
}

std::shared_ptr<ValidityNet<float>> load_avn(const std::filesystem::path& path) {
  const ad::Checkpoint ckpt = ad::read_checkpoint(path);
  auto net = std::make_shared<ValidityNet<float>>(checkpoint_config(ckpt, kAvnKind), 0);
  ad::load_into(ckpt, net->params());
  return net;
}

std::shared_ptr<PolicyValueNet<float>> load_policy(const std::filesystem::path& path) {
  const ad::Checkpoint ckpt = ad::read_checkpoint(path);
  auto net = std::make_shared<PolicyValueNet<float>>(checkpoint_config(ckpt, kPolicyKind), 0);
  ad::load_into(ckpt, net->params());
  return net;
}

RunConfig parse_run_config(std::istream& in, RunConfig base) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::optional<std::string> task;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    try {
      field(key);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(lineno) + ": " + e.what());
    }
    if (key == "task") {
      task = value;
    }
    pairs.emplace_back(std::move(key), std::move(value));
  }
  RunConfig c = task ? RunConfig::for_task(parse_task_mode(*task)) : std::move(base);
  for (const auto& [k, v] : pairs) {
    c.set(k, v);
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  return parse_run_config(in, std::move(base));
}

void write_run_config(std::ostream& out, const RunConfig& cfg) {
  for (const Field& f : fields()) {
    out << f.key << " = " << f.get(cfg) << '\n';
  }
}

}  // namespace bricks
