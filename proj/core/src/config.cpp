#include "mtsim/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtsim/toml_reader.hpp"

namespace mtsim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

int int_in(TomlTable& t, const std::string& key, int fallback, long long lo,
           long long hi) {
  long long v = t.take_int(key).value_or(fallback);
  require(v >= lo && v <= hi, "config key '" + key + "' must be in [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) +
                                  "], got " + std::to_string(v));
  return static_cast<int>(v);
}

long long long_in(TomlTable& t, const std::string& key, long long fallback,
                  long long lo, long long hi) {
  long long v = t.take_int(key).value_or(fallback);
  require(v >= lo && v <= hi, "config key '" + key + "' must be in [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) +
                                  "], got " + std::to_string(v));
  return v;
}

double double_in(TomlTable& t, const std::string& key, double fallback, double lo,
                 double hi) {
  double v = t.take_double(key).value_or(fallback);
  require(v >= lo && v <= hi, "config key '" + key + "' must be in [" +
                                  std::to_string(lo) + ", " + std::to_string(hi) +
                                  "], got " + std::to_string(v));
  return v;
}

}  // namespace

ScenarioConfig ScenarioConfig::parse(const std::string& toml_text) {
  TomlTable t = TomlTable::parse(toml_text);
  ScenarioConfig cfg;

  cfg.map.streets_ns = int_in(t, "map.streets_ns", cfg.map.streets_ns, 2, 64);
  cfg.map.streets_ew = int_in(t, "map.streets_ew", cfg.map.streets_ew, 2, 64);
  cfg.map.segment_len = int_in(t, "map.segment_len", cfg.map.segment_len, 1, 1000);
  cfg.map.junction_size = int_in(t, "map.junction_size", cfg.map.junction_size, 1, 15);
  cfg.map.lane_width = int_in(t, "map.lane_width", cfg.map.lane_width, 1, 1);
  cfg.map.default_speed = double_in(t, "map.default_speed", cfg.map.default_speed, 0.01, 1.0);
  cfg.map.cycle_len = int_in(t, "map.cycle_len", cfg.map.cycle_len, 2, 100000);

  cfg.vehicles = int_in(t, "run.vehicles", cfg.vehicles, 1, 1000000);
  cfg.steps = long_in(t, "run.steps", cfg.steps, 1, 1000000000LL);
  {
    long long s = t.take_int("run.seed").value_or(static_cast<long long>(cfg.seed));
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  cfg.sampling_interval =
      int_in(t, "run.sampling_interval", cfg.sampling_interval, 1, 1000000);
  cfg.workers = int_in(t, "run.workers", cfg.workers, 1, 256);
  cfg.out_dir = t.take_string("run.out_dir").value_or(cfg.out_dir);
  cfg.dump_models = t.take_bool("run.dump_models").value_or(cfg.dump_models);
  cfg.check_invariants =
      t.take_bool("run.check_invariants").value_or(cfg.check_invariants);

  cfg.reward.a = double_in(t, "reward.a", cfg.reward.a, 0.0, 1000.0);
  cfg.reward.b = double_in(t, "reward.b", cfg.reward.b, 0.0, 1000.0);
  cfg.reward.c = double_in(t, "reward.c", cfg.reward.c, 0.0, 1000.0);
  require(cfg.reward.sum() > 0.0, "reward weights a + b + c must be positive");

  cfg.learner_enabled = t.take_bool("learner.enabled").value_or(cfg.learner_enabled);
  cfg.learner.hidden = int_in(t, "learner.hidden", cfg.learner.hidden, 1, 4096);
  cfg.learner.gamma = double_in(t, "learner.gamma", cfg.learner.gamma, 0.0, 0.999999);
  cfg.learner.learning_rate =
      double_in(t, "learner.learning_rate", cfg.learner.learning_rate, 1e-12, 10.0);
  cfg.learner.epsilon_start =
      double_in(t, "learner.epsilon_start", cfg.learner.epsilon_start, 0.0, 1.0);
  cfg.learner.epsilon_end =
      double_in(t, "learner.epsilon_end", cfg.learner.epsilon_end, 0.0, 1.0);
  require(cfg.learner.epsilon_start >= cfg.learner.epsilon_end,
          "learner.epsilon_start must be >= learner.epsilon_end");
  cfg.learner.epsilon_decay_decisions =
      long_in(t, "learner.epsilon_decay_decisions", cfg.learner.epsilon_decay_decisions,
              1, 1000000000LL);
  cfg.learner.replay_capacity =
      int_in(t, "learner.replay_capacity", cfg.learner.replay_capacity, 1, 10000000);
  cfg.learner.batch_size =
      int_in(t, "learner.batch_size", cfg.learner.batch_size, 1, 8192);
  require(cfg.learner.batch_size <= cfg.learner.replay_capacity,
          "learner.batch_size must not exceed learner.replay_capacity");
  cfg.learner.target_sync =
      int_in(t, "learner.target_sync", cfg.learner.target_sync, 1, 10000000);
  cfg.state_with_td = t.take_bool("learner.state_with_td").value_or(cfg.state_with_td);
  cfg.qt_cap = int_in(t, "learner.qt_cap", cfg.qt_cap, 1, 1000000);
  cfg.ql_cap = int_in(t, "learner.ql_cap", cfg.ql_cap, 1, 1000000);

  cfg.navigation.superposition =
      double_in(t, "navigation.superposition", cfg.navigation.superposition, 0.0, 100.0);
  cfg.navigation.turn_cooldown =
      int_in(t, "navigation.turn_cooldown", cfg.navigation.turn_cooldown, 0, 1000000);
  cfg.navigation.refusal_penalty =
      double_in(t, "navigation.refusal_penalty", cfg.navigation.refusal_penalty, 0.0, 10.0);
  cfg.averages_alpha = double_in(t, "navigation.alpha", cfg.averages_alpha, 1e-9, 1.0);

  cfg.behaviour.sensor_range =
      int_in(t, "behaviour.sensor_range", cfg.behaviour.sensor_range, 1, 1000);
  cfg.behaviour.trap_threshold =
      int_in(t, "behaviour.trap_threshold", cfg.behaviour.trap_threshold, 1, 1000000);
  cfg.behaviour.speed_increment =
      double_in(t, "behaviour.speed_increment", cfg.behaviour.speed_increment, 0.01, 1.0);
  cfg.behaviour.v_max = double_in(t, "behaviour.v_max", cfg.behaviour.v_max, 0.01, 1.0);
  cfg.behaviour.progress_window =
      int_in(t, "behaviour.progress_window", cfg.behaviour.progress_window, 1, 100000);

  cfg.jams.window = int_in(t, "metrics.jam_window", cfg.jams.window, 1, 1000000);
  cfg.jams.min_cluster = int_in(t, "metrics.jam_min_cluster", cfg.jams.min_cluster, 1, 100000);

  cfg.model_paths = t.take_string_array("models.paths").value_or(cfg.model_paths);

  cfg.pretrain.vehicles = int_in(t, "pretrain.vehicles", cfg.pretrain.vehicles, 1, 100000);
  cfg.pretrain.steps = long_in(t, "pretrain.steps", cfg.pretrain.steps, 1, 1000000000LL);
  cfg.pretrain.top_k = int_in(t, "pretrain.top_k", cfg.pretrain.top_k, 1, 100000);

  t.ensure_all_consumed();
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void ScenarioConfig::validate() const {
  map.validate();
  require(vehicles >= 1, "run.vehicles must be >= 1");
  require(steps >= 1, "run.steps must be >= 1");
  require(reward.sum() > 0.0, "reward weights a + b + c must be positive");
  require(behaviour.v_max >= map.default_speed,
          "behaviour.v_max must be at least map.default_speed");
}

nlohmann::json ScenarioConfig::to_json() const {
  nlohmann::json j;
  j["map"] = {{"streets_ns", map.streets_ns},
              {"streets_ew", map.streets_ew},
              {"segment_len", map.segment_len},
              {"junction_size", map.junction_size},
              {"lane_width", map.lane_width},
              {"default_speed", map.default_speed},
              {"cycle_len", map.cycle_len}};
  j["run"] = {{"vehicles", vehicles},
              {"steps", steps},
              {"seed", seed},
              {"sampling_interval", sampling_interval},
              {"workers", workers},
              {"out_dir", out_dir},
              {"dump_models", dump_models},
              {"check_invariants", check_invariants}};
  j["reward"] = {{"a", reward.a}, {"b", reward.b}, {"c", reward.c}};
  j["learner"] = {{"enabled", learner_enabled},
                  {"hidden", learner.hidden},
                  {"gamma", learner.gamma},
                  {"learning_rate", learner.learning_rate},
                  {"epsilon_start", learner.epsilon_start},
                  {"epsilon_end", learner.epsilon_end},
                  {"epsilon_decay_decisions", learner.epsilon_decay_decisions},
                  {"replay_capacity", learner.replay_capacity},
                  {"batch_size", learner.batch_size},
                  {"target_sync", learner.target_sync},
                  {"state_with_td", state_with_td},
                  {"qt_cap", qt_cap},
                  {"ql_cap", ql_cap}};
  j["navigation"] = {{"superposition", navigation.superposition},
                     {"turn_cooldown", navigation.turn_cooldown},
                     {"refusal_penalty", navigation.refusal_penalty},
                     {"alpha", averages_alpha}};
  j["behaviour"] = {{"sensor_range", behaviour.sensor_range},
                    {"trap_threshold", behaviour.trap_threshold},
                    {"speed_increment", behaviour.speed_increment},
                    {"v_max", behaviour.v_max},
                    {"progress_window", behaviour.progress_window}};
  j["metrics"] = {{"jam_window", jams.window}, {"jam_min_cluster", jams.min_cluster}};
  j["models"] = {{"paths", model_paths}};
  j["pretrain"] = {{"vehicles", pretrain.vehicles},
                   {"steps", pretrain.steps},
                   {"top_k", pretrain.top_k}};
  return j;
}

}  // namespace mtsim
