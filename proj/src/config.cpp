#include "asp/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "asp/errors.hpp"
#include "asp/holdout.hpp"
#include "json.hpp"

namespace asp {

using Json = nlohmann::ordered_json;

namespace {

// Line of every object key in a JSON text, keyed by JSON pointer.
std::map<std::string, int> KeyLines(std::string_view text) {
  struct Frame {
    bool object = false;
    std::string path;
    int index = 0;
    std::string key;
  };
  std::map<std::string, int> lines;
  std::vector<Frame> stack;
  int line = 1;
  std::string last_string;
  int last_string_line = 1;
  auto child_path = [&]() -> std::string {
    if (stack.empty()) return "";
    const Frame& f = stack.back();
    return f.path + "/" + (f.object ? f.key : std::to_string(f.index));
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
    } else if (c == '"') {
      std::string s;
      last_string_line = line;
      for (++i; i < text.size() && text[i] != '"'; ++i) {
        if (text[i] == '\\' && i + 1 < text.size()) {
          s += text[++i];
        } else {
          if (text[i] == '\n') ++line;
          s += text[i];
        }
      }
      last_string = s;
    } else if (c == ':' && !stack.empty() && stack.back().object) {
      stack.back().key = last_string;
      lines[stack.back().path + "/" + last_string] = last_string_line;
    } else if (c == '{' || c == '[') {
      stack.push_back(Frame{c == '{', child_path(), 0, ""});
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
    } else if (c == ',' && !stack.empty() && !stack.back().object) {
      ++stack.back().index;
    }
  }
  return lines;
}

int LineOfOffset(std::string_view text, std::size_t offset) {
  int line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    line += text[i] == '\n';
  }
  return line;
}

// Writes every field into a JSON tree.
class JsonWriter {
 public:
  explicit JsonWriter(Json& root) { stack_.push_back(&root); }

  template <class T>
  void Field(const char* key, const T& value) {
    (*stack_.back())[key] = value;
  }
  void Field(const char* key, const AbcClipMode& v) {
    (*stack_.back())[key] = std::string(ToString(v));
  }
  void Field(const char* key, const AliceRewardMode& v) {
    (*stack_.back())[key] = v == AliceRewardMode::kGame ? "game" : "timestep";
  }
  void Field(const char* key, const BaselineVariant& v) {
    (*stack_.back())[key] = std::string(ToString(v));
  }
  void Section(const char* key, const std::function<void()>& body) {
    Json& child = (*stack_.back())[key];
    child = Json::object();
    stack_.push_back(&child);
    body();
    stack_.pop_back();
  }

 private:
  std::vector<Json*> stack_;
};

// Reads fields present in the tree, rejecting unknown keys and bad types.
class JsonReader {
 public:
  JsonReader(const Json& root, const std::map<std::string, int>& lines,
             std::string source)
      : lines_(lines), source_(std::move(source)) {
    if (!root.is_object()) Fail("", "top level must be an object");
    stack_.push_back({&root, "", {}});
  }

  void Field(const char* key, int& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_number_integer()) Fail(path, "expected an integer");
      const auto v = j.get<std::int64_t>();
      if (v < INT32_MIN || v > INT32_MAX) Fail(path, "integer out of range");
      value = static_cast<int>(v);
    });
  }
  void Field(const char* key, std::uint64_t& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_number_unsigned()) Fail(path, "expected a non-negative integer");
      value = j.get<std::uint64_t>();
    });
  }
  template <class T>
    requires(std::is_unsigned_v<T> && !std::is_same_v<T, bool> &&
             !std::is_same_v<T, std::uint64_t>)
  void Field(const char* key, T& value) {
    std::uint64_t v = value;
    Field(key, v);
    value = static_cast<T>(v);
  }
  void Field(const char* key, double& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_number()) Fail(path, "expected a number");
      value = j.get<double>();
    });
  }
  void Field(const char* key, bool& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_boolean()) Fail(path, "expected true or false");
      value = j.get<bool>();
    });
  }
  void Field(const char* key, std::string& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_string()) Fail(path, "expected a string");
      value = j.get<std::string>();
    });
  }
  void Field(const char* key, std::vector<int>& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_array()) Fail(path, "expected an array of integers");
      value.clear();
      for (const Json& e : j) {
        if (!e.is_number_integer()) Fail(path, "expected an array of integers");
        value.push_back(e.get<int>());
      }
    });
  }
  void Field(const char* key, std::vector<std::string>& value) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_array()) Fail(path, "expected an array of strings");
      value.clear();
      for (const Json& e : j) {
        if (!e.is_string()) Fail(path, "expected an array of strings");
        value.push_back(e.get<std::string>());
      }
    });
  }
  void Field(const char* key, AbcClipMode& value) {
    std::string s(ToString(value));
    Field(key, s);
    Convert(key, [&] { value = ParseAbcClipMode(s); });
  }
  void Field(const char* key, AliceRewardMode& value) {
    std::string s = value == AliceRewardMode::kGame ? "game" : "timestep";
    Field(key, s);
    if (s == "game") {
      value = AliceRewardMode::kGame;
    } else if (s == "timestep") {
      value = AliceRewardMode::kTimestep;
    } else {
      Fail(Path(key), "expected \"game\" or \"timestep\"");
    }
  }
  void Field(const char* key, BaselineVariant& value) {
    std::string s(ToString(value));
    Field(key, s);
    Convert(key, [&] { value = ParseBaselineVariant(s); });
  }

  void Section(const char* key, const std::function<void()>& body) {
    Read(key, [&](const Json& j, const std::string& path) {
      if (!j.is_object()) Fail(path, "expected an object");
      stack_.push_back({&j, path, {}});
      body();
      CheckKnown();
      stack_.pop_back();
    });
  }

  void Finish() { CheckKnown(); }

  [[noreturn]] void Fail(const std::string& path, const std::string& message) const {
    int line = 1;
    if (auto it = lines_.find(path); it != lines_.end()) line = it->second;
    const std::string where = path.empty() ? "" : " at '" + path.substr(1) + "'";
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + message + where);
  }

 private:
  struct Frame {
    const Json* node;
    std::string path;
    std::set<std::string> seen;
  };

  std::string Path(const char* key) const { return stack_.back().path + "/" + key; }

  void Read(const char* key,
            const std::function<void(const Json&, const std::string&)>& fn) {
    Frame& f = stack_.back();
    f.seen.insert(key);
    auto it = f.node->find(key);
    if (it == f.node->end()) return;
    fn(*it, Path(key));
  }

  void Convert(const char* key, const std::function<void()>& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      Fail(Path(key), e.what());
    }
  }

  void CheckKnown() {
    const Frame& f = stack_.back();
    for (auto it = f.node->begin(); it != f.node->end(); ++it) {
      if (!f.seen.count(it.key())) {
        Fail(f.path + "/" + it.key(), "unknown key");
      }
    }
  }

  const std::map<std::string, int>& lines_;
  std::string source_;
  std::vector<Frame> stack_;
};

template <class V>
void VisitConfig(V& v, RunConfig& c) {
  v.Field("seed", c.seed);
  v.Field("output_dir", c.output_dir);
  v.Field("workers", c.workers);
  v.Section("grid", [&] {
    GridConfig& g = c.grid;
    v.Field("width", g.width);
    v.Field("height", g.height);
    v.Field("cell_size", g.cell_size);
    v.Field("max_objects", g.max_objects);
    v.Field("max_stack_height", g.max_stack_height);
    v.Section("placement_area", [&] {
      v.Field("x0", g.placement_area.x0);
      v.Field("y0", g.placement_area.y0);
      v.Field("width", g.placement_area.width);
      v.Field("height", g.placement_area.height);
    });
  });
  v.Section("reward", [&] {
    RewardParams& r = c.reward;
    v.Field("valid_goal_bonus", r.valid_goal_bonus);
    v.Field("bob_failed_bonus", r.bob_failed_bonus);
    v.Field("out_of_zone_penalty", r.out_of_zone_penalty);
    v.Field("per_object_reward", r.per_object_reward);
    v.Field("bob_success_bonus", r.bob_success_bonus);
    v.Field("pos_threshold", r.pos_threshold);
    v.Field("rot_threshold", r.rot_threshold);
    v.Field("alice_reward", r.alice_reward);
    v.Field("timestep_reward_scale", r.timestep_reward_scale);
    v.Field("timestep_out_of_zone_penalty", r.timestep_out_of_zone_penalty);
  });
  v.Section("game", [&] {
    GameConfig& g = c.game;
    v.Field("alice_turn_steps", g.alice_turn_steps);
    v.Field("bob_max_steps_per_object", g.bob_max_steps_per_object);
    v.Field("max_goals_per_episode", g.max_goals_per_episode);
    v.Field("past_opponent_prob", g.past_opponent_prob);
    v.Field("min_objects", g.min_objects);
    v.Field("max_objects", g.max_objects);
  });
  v.Section("network", [&] {
    v.Field("object_embed_widths", c.network.object_embed_widths);
    v.Field("trunk_widths", c.network.trunk_widths);
    v.Field("separate_value_net", c.network.separate_value_net);
    v.Field("policy_head_scale", c.init.policy_head_scale);
    v.Field("value_head_scale", c.init.value_head_scale);
  });
  v.Section("ppo", [&] {
    PpoHyperParams& p = c.ppo;
    v.Field("gamma", p.gamma);
    v.Field("gae_lambda", p.gae_lambda);
    v.Field("clip_eps", p.clip_eps);
    v.Field("entropy_coef", p.entropy_coef);
    v.Field("value_loss_weight", p.value_loss_weight);
    v.Field("learning_rate", p.learning_rate);
    v.Field("sample_reuse", p.sample_reuse);
    v.Field("minibatch_size", p.minibatch_size);
    v.Field("normalize_advantages", p.normalize_advantages);
    v.Field("max_grad_norm", p.max_grad_norm);
    v.Field("adam_beta1", p.adam_beta1);
    v.Field("adam_beta2", p.adam_beta2);
    v.Field("adam_epsilon", p.adam_epsilon);
  });
  v.Section("abc", [&] {
    v.Field("enabled", c.abc.enabled);
    v.Field("beta", c.abc.beta);
    v.Field("clip_eps", c.abc.clip_eps);
    v.Field("clip_mode", c.abc.clip_mode);
    v.Field("filter_failures", c.abc.filter_failures);
  });
  v.Section("pool", [&] {
    v.Field("capacity", c.pool.capacity);
    v.Field("snapshot_interval", c.pool.snapshot_interval);
  });
  v.Section("training", [&] {
    v.Field("episodes_per_round", c.training.episodes_per_round);
    v.Field("rounds", c.training.rounds);
    v.Field("checkpoint_interval", c.training.checkpoint_interval);
  });
  v.Section("eval", [&] {
    v.Field("interval", c.eval.interval);
    v.Field("episodes", c.eval.episodes);
    v.Field("goals_per_episode", c.eval.goals_per_episode);
    v.Field("tasks", c.eval.tasks);
    v.Field("seed", c.eval.seed);
  });
  v.Section("baseline", [&] {
    v.Field("variant", c.baseline.variant);
    v.Section("adr", [&] {
      AdrConfig& a = c.baseline.adr;
      v.Field("queue_length", a.queue_length);
      v.Field("threshold", a.threshold);
      v.Field("increment_fraction", a.increment_fraction);
      v.Field("enabled", a.enabled);
    });
  });
}

}  // namespace

void RunConfig::Validate() const {
  if (workers < 0) throw ConfigError("workers must be >= 0");
  grid.Validate();
  reward.Validate();
  game.Validate(grid);
  network.Validate();
  if (!(init.policy_head_scale >= 0.0) || !(init.value_head_scale >= 0.0)) {
    throw ConfigError("network head scales must be >= 0");
  }
  ppo.Validate();
  abc.Validate();
  pool.Validate();
  baseline.adr.Validate();
  if (training.episodes_per_round < 1) {
    throw ConfigError("training.episodes_per_round must be >= 1");
  }
  if (training.rounds < 0) throw ConfigError("training.rounds must be >= 0");
  if (training.checkpoint_interval < 1) {
    throw ConfigError("training.checkpoint_interval must be >= 1");
  }
  if (eval.interval < 0) throw ConfigError("eval.interval must be >= 0");
  if (eval.episodes < 1) throw ConfigError("eval.episodes must be >= 1");
  if (eval.goals_per_episode < 1) {
    throw ConfigError("eval.goals_per_episode must be >= 1");
  }
  for (const std::string& t : eval.tasks) {
    if (MakeTask(t).n_objects > grid.max_objects) {
      throw ConfigError("eval task " + t + " needs more objects than grid.max_objects");
    }
  }
}

TrainerConfig RunConfig::ToTrainerConfig() const {
  TrainerConfig t;
  t.setup = GameSetup{grid, reward, game, abc};
  t.arch = network;
  t.init = init;
  t.ppo = ppo;
  t.pool = pool;
  t.episodes_per_round = training.episodes_per_round;
  t.seed = seed;
  t.parallel = true;
  return t;
}

BaselineConfig RunConfig::ToBaselineConfig() const {
  BaselineConfig b;
  b.variant = baseline.variant;
  b.grid = grid;
  b.reward = reward;
  b.game = game;
  b.arch = network;
  b.init = init;
  b.ppo = ppo;
  b.adr = baseline.adr;
  b.episodes_per_round = training.episodes_per_round;
  b.seed = seed;
  b.parallel = true;
  return b;
}

std::string ConfigToJson(const RunConfig& config) {
  Json root = Json::object();
  JsonWriter writer(root);
  RunConfig copy = config;
  VisitConfig(writer, copy);
  return root.dump(2) + "\n";
}

RunConfig ParseConfig(std::string_view text, std::string_view source) {
  const std::string src(source);
  Json root;
  try {
    root = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(src + ":" + std::to_string(LineOfOffset(text, e.byte)) +
                      ": malformed JSON: " + e.what());
  }
  const auto lines = KeyLines(text);
  JsonReader reader(root, lines, src);
  RunConfig config;
  VisitConfig(reader, config);
  reader.Finish();
  try {
    config.Validate();
  } catch (const ConfigError& e) {
    throw ConfigError(src + ": " + e.what());
  }
  return config;
}

RunConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), path.string());
}

void SaveConfig(const std::filesystem::path& path, const RunConfig& config) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write config " + path.string());
  out << ConfigToJson(config);
  if (!out) throw std::runtime_error("failed writing config " + path.string());
}

std::uint64_t Fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ConfigHash(const RunConfig& config) {
  return Fnv1a(ConfigToJson(config));
}

const std::vector<std::string>& AblationNames() {
  static const std::vector<std::string> kNames = {"no-abc", "no-bc-clip",
                                                  "no-demo-filter", "single-goal"};
  return kNames;
}

void ApplyAblation(RunConfig& config, std::string_view name) {
  if (name == "no-abc") {
    config.abc.enabled = false;
  } else if (name == "no-bc-clip") {
    config.abc.clip_mode = AbcClipMode::kUnclipped;
  } else if (name == "no-demo-filter") {
    config.abc.filter_failures = false;
  } else if (name == "single-goal") {
    config.game.max_goals_per_episode = 1;
    config.eval.goals_per_episode = 1;
  } else {
    throw ConfigError("unknown ablation '" + std::string(name) + "'");
  }
}

}  // namespace asp
