#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mtsim/grid_map.hpp"
#include "mtsim/navigation.hpp"
#include "mtsim/rl.hpp"
#include "mtsim/vehicle.hpp"

namespace mtsim {

inline constexpr const char* kCodeVersion = "0.1.0";

struct PretrainSettings {
  int vehicles = 4;
  long long steps = 50000;
  int top_k = 4;
};

struct JamSettings {
  int window = 200;      // stationary steps before a vehicle counts as jammed
  int min_cluster = 5;   // vehicles per reported cluster
};

// Behaviour knobs in config units (patches/step); converted to fixed-point
// centipatches for the simulation core.
struct BehaviourSettings {
  int sensor_range = 12;
  int trap_threshold = 100;
  double speed_increment = 0.1;
  double v_max = 0.4;
  int progress_window = 50;  // steps for the destination-progress window
};

// Full scenario description. parse() fills unset keys with these defaults;
// the run manifest echoes every effective value, so no silent defaults
// exist anywhere.
struct ScenarioConfig {
  GridMapParams map;

  int vehicles = 50;
  long long steps = 20000;
  std::uint64_t seed = 1;
  int sampling_interval = 100;
  int workers = 1;
  std::string out_dir = "out";
  bool dump_models = false;
  bool check_invariants = false;

  RewardWeights reward;
  Hyperparams learner;
  bool learner_enabled = true;
  bool state_with_td = false;
  int qt_cap = 200;
  int ql_cap = 12;

  NavigationParams navigation;
  double averages_alpha = 0.05;

  BehaviourSettings behaviour;
  JamSettings jams;

  std::vector<std::string> model_paths;
  PretrainSettings pretrain;

  static ScenarioConfig parse(const std::string& toml_text);
  static ScenarioConfig parse_file(const std::string& path);

  // Range checks; throws ConfigError naming the violated bound.
  void validate() const;

  // Complete effective-config echo for the run manifest.
  nlohmann::json to_json() const;

  BehaviourParams behaviour_params() const {
    BehaviourParams p;
    p.sensor_range = behaviour.sensor_range;
    p.trap_threshold = behaviour.trap_threshold;
    p.speed_increment = to_centi(behaviour.speed_increment);
    p.v_max = to_centi(behaviour.v_max);
    return p;
  }

  EncodingParams encoding_params(const CityMap& m) const {
    EncodingParams e;
    e.sensor_range = behaviour.sensor_range;
    e.map_diameter = m.width() + m.height();
    e.qt_cap = qt_cap;
    e.ql_cap = ql_cap;
    e.with_td = state_with_td;
    return e;
  }
};

}  // namespace mtsim
