#include "mtsim/scenario.hpp"

#include <algorithm>
#include <barrier>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <thread>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mtsim/navigation.hpp"
#include "mtsim/route.hpp"

namespace mtsim {

namespace {

namespace fs = std::filesystem;

QNetwork load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("model file '" + path + "' does not exist or is unreadable");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  try {
    return deserialize_model(bytes);
  } catch (const RuntimeFault& e) {
    throw RuntimeFault(std::string(e.what()) + " (file '" + path + "')");
  }
}

// Rolling window over the destination distance: yields the value from
// `window` steps ago (or the oldest sample while the trip is younger).
class DeWindow {
 public:
  void reset(int window) {
    buf_.assign(window, 0);
    count_ = 0;
    next_ = 0;
  }

  // Returns the reference value, then records the current sample.
  int push(int de) {
    int ref;
    if (count_ == 0)
      ref = de;
    else if (count_ < buf_.size())
      ref = buf_[0];
    else
      ref = buf_[next_];
    if (count_ < buf_.size()) {
      buf_[count_++] = de;
      next_ = count_ % buf_.size();
    } else {
      buf_[next_] = de;
      next_ = (next_ + 1) % buf_.size();
    }
    return ref;
  }

 private:
  std::vector<int> buf_;
  std::size_t count_ = 0;
  std::size_t next_ = 0;
};

struct PendingTransition {
  bool active = false;
  StateVector state;
  int action = 0;
  bool refused = false;
};

struct VehicleRuntime {
  Rng rng;
  std::unique_ptr<DqnLearner> learner;
  FusionState fusion;
  RunningAverages averages;
  RunningAverages averages_pre;  // before this step's update, for rewards
  DeWindow de_window;
  PendingTransition pending;

  // Per-step decide outputs, drained sequentially afterwards.
  SensorFrame frame;
  FinalAction decided;
  int d_predictions = 0;
  int d_refused = 0;
  double d_reward_sum = 0.0;
  int d_reward_events = 0;

  double late_reward = 0.0;  // pretraining ranking accumulator
  long long trips = 0;

  explicit VehicleRuntime(std::uint64_t seed) : rng(seed) {}
};

class Simulation {
 public:
  explicit Simulation(const ScenarioConfig& cfg)
      : cfg_(cfg),
        map_(CityMap::generate(cfg.map)),
        occ_(map_),
        behaviour_(cfg.behaviour_params()),
        encoding_(cfg.encoding_params(map_)),
        step_rng_(split_seed(cfg.seed, rng_stream::kStepPermutation)) {
    if (cfg_.vehicles > map_.counts().capacity)
      throw ConfigError("run.vehicles = " + std::to_string(cfg_.vehicles) +
                        " exceeds the map capacity of " +
                        std::to_string(map_.counts().capacity) + " vehicles");
    load_shared_models();
    place_vehicles();
  }

  const CityMap& map() const { return map_; }

  void set_late_reward_from(long long step) { late_reward_from_ = step; }

  RunArtifacts run() {
    const fs::path out_dir(cfg_.out_dir);
    fs::create_directories(out_dir);

    RunArtifacts artifacts;
    artifacts.out_dir = out_dir;
    artifacts.metrics_csv = out_dir / "metrics.csv";
    artifacts.jam_csv = out_dir / "jams.csv";
    artifacts.manifest = out_dir / "manifest.json";

    std::ofstream metrics_out(artifacts.metrics_csv, std::ios::binary);
    std::ofstream jams_out(artifacts.jam_csv, std::ios::binary);
    if (!metrics_out || !jams_out)
      throw RuntimeFault("cannot open output files under '" + cfg_.out_dir + "'");
    metrics_out << kMetricsCsvHeader << '\n';
    jams_out << kJamCsvHeader << '\n';

    run_steps(metrics_out, jams_out);

    metrics_out.flush();
    jams_out.flush();

    if (cfg_.dump_models && cfg_.learner_enabled) {
      fs::path model_dir = out_dir / "models";
      fs::create_directories(model_dir);
      for (std::size_t i = 0; i < vehicles_.size(); ++i) {
        fs::path file = model_dir / ("vehicle_" + std::to_string(i) + ".json");
        std::ofstream mo(file, std::ios::binary);
        mo << serialize_model(runtime_[i].learner->policy());
        artifacts.model_files.push_back(file);
      }
    }

    artifacts.summary = summary();
    write_manifest(artifacts.manifest);
    return artifacts;
  }

  RunSummary summary() const {
    RunSummary s;
    s.steps = cfg_.steps;
    s.vehicles = cfg_.vehicles;
    s.capacity = map_.counts().capacity;
    s.occupancy_percent = 100.0 * cfg_.vehicles / map_.counts().capacity;
    s.completed_trips = aggregator_.completed_trips();
    s.predictions_total = aggregator_.predictions_total();
    s.predictions_refused = aggregator_.predictions_refused();
    s.violations = violations_;
    s.jam_reports = jam_reports_;
    return s;
  }

  // Pretraining support: learners ranked by late-run accumulated reward.
  std::vector<std::pair<int, double>> reward_ranking() const {
    std::vector<std::pair<int, double>> ranking;
    for (std::size_t i = 0; i < runtime_.size(); ++i)
      ranking.emplace_back(static_cast<int>(i), runtime_[i].late_reward);
    std::sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return ranking;
  }

  const QNetwork& policy_of(int vehicle) const {
    return runtime_[vehicle].learner->policy();
  }

  long long completed_trips() const { return aggregator_.completed_trips(); }

 private:
  void load_shared_models() {
    for (const std::string& path : cfg_.model_paths) {
      QNetwork net = load_model_file(path);
      if (net.input_size() != encoding_.dimension())
        throw RuntimeFault("model '" + path + "' expects input size " +
                           std::to_string(net.input_size()) + ", state encoding is " +
                           std::to_string(encoding_.dimension()));
      if (net.output_size() != kNavActionCount)
        throw RuntimeFault("model '" + path + "' must have 5 outputs");
      shared_models_.push_back(std::move(net));
    }
  }

  void place_vehicles() {
    Rng placement(split_seed(cfg_.seed, rng_stream::kPlacement));
    Rng assignment(split_seed(cfg_.seed, rng_stream::kModelAssignment));
    const std::vector<int>& lanes = map_.lane_patches();
    const auto n_lanes = static_cast<std::uint32_t>(lanes.size());

    vehicles_.reserve(cfg_.vehicles);
    runtime_.reserve(cfg_.vehicles);
    speeds_.assign(cfg_.vehicles, 0);

    for (int id = 0; id < cfg_.vehicles; ++id) {
      Vehicle v;
      v.id = id;
      int pos;
      do {
        pos = lanes[placement.uniform_u32(n_lanes)];
      } while (occ_.occupied(pos));
      int dest;
      do {
        dest = lanes[placement.uniform_u32(n_lanes)];
      } while (dest == pos);

      v.pos = pos;
      v.origin = pos;
      v.destination = dest;
      v.heading = map_.at(pos).dir;
      v.speed = to_centi(cfg_.map.default_speed);
      v.v_max_local = behaviour_.v_max;
      occ_.place(pos, id);

      const DistanceField& field = field_for(dest);
      v.trip.origin = pos;
      v.trip.destination = dest;
      v.trip.start_step = 0;
      v.trip.oracle_length = field.at(pos);

      VehicleRuntime rt(split_seed(cfg_.seed, rng_stream::kVehicleBase + id));
      rt.de_window.reset(cfg_.behaviour.progress_window);
      if (cfg_.learner_enabled) {
        QNetwork net;
        if (!shared_models_.empty()) {
          net = shared_models_[assignment.uniform_u32(
              static_cast<std::uint32_t>(shared_models_.size()))];
        } else {
          Rng init(split_seed(cfg_.seed, rng_stream::kLearnerBase + id));
          net = QNetwork::randomized(
              {encoding_.dimension(), cfg_.learner.hidden, kNavActionCount}, init);
        }
        rt.learner = std::make_unique<DqnLearner>(
            std::move(net), cfg_.learner,
            split_seed(cfg_.seed, rng_stream::kLearnerBase + 0x10000000ULL + id));
      }
      vehicles_.push_back(v);
      runtime_.push_back(std::move(rt));
    }
  }

  const DistanceField& field_for(int dest) {
    auto it = fields_.find(dest);
    if (it == fields_.end())
      it = fields_.emplace(dest, DistanceField::to_destination(map_, dest)).first;
    return it->second;
  }

  bool consult_learner(VehicleRuntime& rt) {
    const double p = cfg_.navigation.superposition;
    if (!cfg_.learner_enabled || !rt.learner) return false;
    if (p >= 100.0) return true;
    if (p <= 0.0) return false;
    return rt.rng.uniform_double() * 100.0 < p;
  }

  void decide_one(int id, long long t) {
    Vehicle& v = vehicles_[id];
    VehicleRuntime& rt = runtime_[id];
    rt.d_predictions = 0;
    rt.d_refused = 0;
    rt.d_reward_sum = 0.0;
    rt.d_reward_events = 0;

    const DistanceField& field = fields_.at(v.destination);
    const OccupancyView view{&occ_, &speeds_};
    const int de_now = std::max(field.at(v.pos), 0);
    const int de_ref = rt.de_window.push(de_now);
    rt.frame = sense(map_, view, t, v, field, de_ref, behaviour_);

    rt.averages_pre = rt.averages;
    rt.averages = update_averages(rt.averages, rt.frame, cfg_.averages_alpha);

    FusedChoice choice;
    std::optional<RuleAction> escape = trap_escape(rt.frame, v, behaviour_, rt.rng);
    if (escape) {
      // Re-plan toward the free arm and get rolling again; a trapped vehicle
      // is stationary, so the escape step doubles as acceleration.
      choice.kind = FusedChoice::Kind::SpeedUp;
      choice.arm = *escape == RuleAction::StepLeft ? left_of(v.heading)
                                                   : right_of(v.heading);
      choice.provenance = Provenance::Escape;
    } else {
      RuleAction rule = rule_action(rt.frame, v, behaviour_);
      if (rt.frame.at_entry_decision && consult_learner(rt)) {
        StateVector state = encode_state(rt.frame, encoding_);
        close_pending(rt, &state);
        NavAction nav = rt.learner->propose(state);
        choice = fuse(rule, nav, rt.frame, rt.fusion, cfg_.navigation);
        rt.d_predictions += 1;
        rt.d_refused += choice.nav_refused ? 1 : 0;
        rt.pending.active = true;
        rt.pending.state = std::move(state);
        rt.pending.action = static_cast<int>(nav);
        rt.pending.refused = choice.nav_refused;
      } else {
        choice = choice_from_rule(rule, rt.frame);
      }
    }

    FinalAction act;
    act.provenance = choice.provenance;
    switch (choice.kind) {
      case FusedChoice::Kind::Stop: act.kind = FinalAction::Kind::Stop; break;
      case FusedChoice::Kind::SpeedUp: act.kind = FinalAction::Kind::SpeedUp; break;
      case FusedChoice::Kind::SpeedDown: act.kind = FinalAction::Kind::SpeedDown; break;
      case FusedChoice::Kind::Step: act.kind = FinalAction::Kind::Step; break;
    }
    if (choice.arm) {
      act.set_exit_arm = choice.arm;
      const PatchInfo& here = map_.at(v.pos);
      act.move_dir = here.kind == PatchKind::Junction
                         ? map_.junction_route_dir(map_.junctions()[here.junction],
                                                   map_.point(v.pos), *choice.arm)
                         : rt.frame.route_dir;
    } else {
      act.move_dir = rt.frame.route_dir;
    }
    rt.decided = act;
  }

  // Close the open transition with the reward observed now (nullptr next
  // state means terminal). The learner reward is normalised into [-1, 1],
  // minus the refusal penalty when the closed proposal had been refused.
  void close_pending(VehicleRuntime& rt, const StateVector* next_state) {
    if (!rt.pending.active || !rt.learner) return;
    double r = reward(rt.frame, rt.averages_pre, cfg_.reward);
    double rn = normalised_reward(r, cfg_.reward);
    if (rt.pending.refused) rn -= cfg_.navigation.refusal_penalty;
    Transition tr;
    tr.state = std::move(rt.pending.state);
    tr.action = rt.pending.action;
    tr.reward = rn;
    tr.terminal = next_state == nullptr;
    tr.next_state = next_state ? *next_state : tr.state;
    rt.learner->observe(std::move(tr));
    rt.d_reward_sum += rn;
    rt.d_reward_events += 1;
    rt.pending.active = false;
  }

  void complete_trip(int id, long long t) {
    Vehicle& v = vehicles_[id];
    VehicleRuntime& rt = runtime_[id];

    TripRecord rec;
    rec.vehicle = id;
    rec.origin = v.trip.origin;
    rec.destination = v.trip.destination;
    rec.actual_length = v.trip.moves;
    rec.actual_steps = t - v.trip.start_step + 1;
    rec.oracle_length = v.trip.oracle_length;
    rec.oracle_steps = static_cast<double>(rec.oracle_length) / cfg_.map.default_speed;
    aggregator_.record_trip(rec);
    rt.trips += 1;

    // Learner: arriving ends the episode for the open decision.
    close_pending(rt, nullptr);

    // Swap endpoints; the arrival patch is the new origin.
    std::swap(v.origin, v.destination);
    const DistanceField& field = field_for(v.destination);
    v.trip.origin = v.pos;
    v.trip.destination = v.destination;
    v.trip.start_step = t;
    v.trip.moves = 0;
    v.trip.oracle_length = field.at(v.pos);
    rt.de_window.reset(cfg_.behaviour.progress_window);
  }

  void check_invariants(long long t) {
    std::unordered_set<int> seen;
    for (const Vehicle& v : vehicles_) {
      if (!seen.insert(v.pos).second)
        throw RuntimeFault("invariant violation: duplicate position at step " +
                           std::to_string(t));
      if (occ_.owner(v.pos) != v.id)
        throw RuntimeFault("invariant violation: occupancy mismatch at step " +
                           std::to_string(t));
      if (v.speed > v.v_max_local)
        throw RuntimeFault("invariant violation: speed above limit at step " +
                           std::to_string(t));
      if (!map_.drivable(v.pos))
        throw RuntimeFault("invariant violation: vehicle off the drivable surface "
                           "at step " + std::to_string(t));
    }
  }

  void run_steps(std::ofstream& metrics_out, std::ofstream& jams_out) {
    std::vector<int> permutation(vehicles_.size());
    for (std::size_t i = 0; i < permutation.size(); ++i)
      permutation[i] = static_cast<int>(i);

    const int n = static_cast<int>(vehicles_.size());
    const int workers = std::min(cfg_.workers, n);

    // Persistent decide-phase pool. Vehicles are partitioned into fixed
    // contiguous ranges, so results do not depend on the worker count.
    std::unique_ptr<std::barrier<>> gate;
    std::vector<std::jthread> pool;
    long long shared_t = 0;
    bool stop = false;
    if (workers > 1) {
      gate = std::make_unique<std::barrier<>>(workers + 1);
      for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(n) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / workers);
        pool.emplace_back([this, &shared_t, &stop, &gate, begin, end] {
          for (;;) {
            gate->arrive_and_wait();
            if (stop) return;
            for (int id = begin; id < end; ++id) decide_one(id, shared_t);
            gate->arrive_and_wait();
          }
        });
      }
    }

    for (long long t = 0; t < cfg_.steps; ++t) {
      // Snapshot phase: speeds at step start (occupancy mutates only in commit).
      for (int id = 0; id < n; ++id) speeds_[id] = vehicles_[id].speed;

      // Decide phase.
      if (workers > 1) {
        shared_t = t;
        gate->arrive_and_wait();  // release workers
        gate->arrive_and_wait();  // wait for completion
      } else {
        for (int id = 0; id < n; ++id) decide_one(id, t);
      }

      // Commit phase in a fresh seeded permutation.
      step_rng_.shuffle(permutation);
      for (int id : permutation) {
        ApplyResult res =
            apply_action(map_, occ_, vehicles_[id], runtime_[id].decided, behaviour_);
        if (res.violation) {
          ++violations_;
          if (cfg_.check_invariants)
            throw RuntimeFault("invariant violation: move into non-drivable patch "
                               "at step " + std::to_string(t));
        }
        if (res.arrived) complete_trip(id, t);
      }

      // Drain decide-phase bookkeeping in id order (worker-count neutral).
      for (int id = 0; id < n; ++id) {
        VehicleRuntime& rt = runtime_[id];
        if (rt.d_predictions > 0)
          aggregator_.record_predictions(rt.d_predictions, rt.d_refused);
        if (rt.d_reward_events > 0) {
          aggregator_.record_rewards(rt.d_reward_sum, rt.d_reward_events);
          if (t >= late_reward_from_) rt.late_reward += rt.d_reward_sum;
        }
        if (rt.fusion.cooldown_remaining > 0) --rt.fusion.cooldown_remaining;
      }

      if (cfg_.check_invariants) check_invariants(t);

      // Sampling phase.
      const long long done = t + 1;
      if (done % cfg_.sampling_interval == 0 || done == cfg_.steps) {
        std::vector<JamProbe> probes;
        probes.reserve(vehicles_.size());
        for (int id = 0; id < n; ++id)
          probes.push_back(JamProbe{vehicles_[id].pos, vehicles_[id].stopped_steps,
                                    runtime_[id].frame.red_ahead});
        std::vector<JamCluster> clusters =
            detect_jams(map_, probes, cfg_.jams.window, cfg_.jams.min_cluster);
        for (const JamCluster& c : clusters) jams_out << to_csv_line(done, c) << '\n';
        jam_reports_ += static_cast<long long>(clusters.size());
        metrics_out << to_csv_line(aggregator_.sample(
                           done, static_cast<int>(clusters.size()), n))
                    << '\n';
      }
    }

    if (workers > 1) {
      stop = true;
      gate->arrive_and_wait();
      pool.clear();
    }

    if (cfg_.check_invariants) {
      long long total = 0, refused = 0, trips = 0;
      for (const VehicleRuntime& rt : runtime_) {
        total += rt.fusion.predictions_total;
        refused += rt.fusion.predictions_refused;
        trips += rt.trips;
      }
      if (total != aggregator_.predictions_total() ||
          refused != aggregator_.predictions_refused() ||
          trips != aggregator_.completed_trips())
        throw RuntimeFault("invariant violation: fusion counters disagree with metrics");
    }
  }

  void write_manifest(const fs::path& path) const {
    nlohmann::json j;
    j["code_version"] = kCodeVersion;
    j["seed"] = cfg_.seed;
    j["config"] = cfg_.to_json();
    const MapCounts& c = map_.counts();
    j["map_counts"] = {{"streets", c.streets},
                       {"segments", c.segments},
                       {"junctions", c.junctions},
                       {"signals", c.signals},
                       {"street_patches", c.street_patches},
                       {"lane_patches", c.lane_patches},
                       {"median_patches", c.median_patches},
                       {"junction_patches", c.junction_patches},
                       {"capacity", c.capacity}};
    j["vehicles"] = cfg_.vehicles;
    j["capacity"] = c.capacity;
    const double pct = 100.0 * cfg_.vehicles / c.capacity;
    j["occupancy_percent"] = std::round(pct * 100.0) / 100.0;
    RunSummary s = summary();
    j["summary"] = {{"completed_trips", s.completed_trips},
                    {"predictions_total", s.predictions_total},
                    {"predictions_refused", s.predictions_refused},
                    {"violations", s.violations},
                    {"jam_reports", s.jam_reports}};
    std::ofstream out(path, std::ios::binary);
    out << j.dump(2) << '\n';
  }

  ScenarioConfig cfg_;
  CityMap map_;
  OccupancyGrid occ_;
  BehaviourParams behaviour_;
  EncodingParams encoding_;
  Rng step_rng_;

  std::vector<Vehicle> vehicles_;
  std::vector<VehicleRuntime> runtime_;
  std::vector<int> speeds_;  // step-start snapshot
  std::map<int, DistanceField> fields_;
  std::vector<QNetwork> shared_models_;

  MetricsAggregator aggregator_;
  long long violations_ = 0;
  long long jam_reports_ = 0;
  long long late_reward_from_ = 0;
};

}  // namespace

RunArtifacts run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  Simulation sim(cfg);
  return sim.run();
}

PretrainArtifacts pretrain(const ScenarioConfig& cfg) {
  cfg.validate();
  ScenarioConfig sub = cfg;
  sub.vehicles = cfg.pretrain.vehicles;
  sub.steps = cfg.pretrain.steps;
  sub.model_paths.clear();
  if (!sub.learner_enabled)
    throw ConfigError("pretrain requires learner.enabled = true");

  Simulation sim(sub);
  sim.set_late_reward_from(sub.steps - sub.steps / 4);  // final 25%
  sim.run();

  PretrainArtifacts out;
  const fs::path out_dir(sub.out_dir);
  fs::create_directories(out_dir);

  if (sim.completed_trips() == 0) {
    out.no_completed_trips = true;
    std::fprintf(stderr,
                 "warning: pretraining finished without completed trips; "
                 "ranking by accumulated reward only\n");
  }

  std::vector<std::pair<int, double>> ranking = sim.reward_ranking();
  const int k = std::min<int>(cfg.pretrain.top_k, static_cast<int>(ranking.size()));

  nlohmann::json manifest;
  manifest["code_version"] = kCodeVersion;
  manifest["seed"] = sub.seed;
  manifest["pretrain"] = {{"vehicles", sub.vehicles},
                          {"steps", sub.steps},
                          {"top_k", cfg.pretrain.top_k}};
  manifest["completed_trips"] = sim.completed_trips();
  manifest["no_completed_trips"] = out.no_completed_trips;
  nlohmann::json ranks = nlohmann::json::array();
  for (int r = 0; r < k; ++r) {
    const auto& [vehicle, late_reward] = ranking[r];
    fs::path file = out_dir / ("pretrained_model_" + std::to_string(r + 1) + ".json");
    std::ofstream mo(file, std::ios::binary);
    mo << serialize_model(sim.policy_of(vehicle));
    out.model_files.push_back(file);
    ranks.push_back({{"rank", r + 1},
                     {"vehicle", vehicle},
                     {"late_reward", late_reward},
                     {"file", file.string()}});
  }
  manifest["ranking"] = std::move(ranks);

  out.manifest = out_dir / "pretrain_manifest.json";
  std::ofstream mo(out.manifest, std::ios::binary);
  mo << manifest.dump(2) << '\n';
  return out;
}

}  // namespace mtsim
