#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mtsim/grid_map.hpp"

namespace mtsim {

struct TripRecord {
  int vehicle = -1;
  int origin = -1;
  int destination = -1;
  long long actual_length = 0;  // patches driven
  long long actual_steps = 0;   // steps from departure to arrival
  int oracle_length = 0;        // shortest path at departure
  double oracle_steps = 0.0;    // oracle_length at the default speed
};

struct TripEfficiency {
  double eta = 0.0;  // oracle_length / actual_length, in (0, 1]
  double tau = 0.0;  // oracle_steps / actual_steps, clamped into (0, 1]
};

// Throws DomainError on zero actual length or steps (impossible for
// completed trips). tau is capped at 1: a trip beating the default-speed
// baseline counts as optimal.
TripEfficiency trip_efficiency(const TripRecord& t);

// One vehicle's jam-relevant state at a snapshot.
struct JamProbe {
  int pos = -1;
  int stopped_steps = 0;
  bool waiting_at_red = false;
};

struct JamCluster {
  int id = 0;
  int size = 0;
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// A jam is a 4-connected cluster of at least min_cluster vehicles, each
// stationary for at least `window` steps, excluding vehicles merely
// waiting at a red signal. Deterministic and idempotent on a snapshot.
std::vector<JamCluster> detect_jams(const CityMap& map,
                                    const std::vector<JamProbe>& vehicles,
                                    int window, int min_cluster);

struct SeriesPoint {
  long long step = 0;
  std::optional<double> eta_mean;  // absent until the first completed trip
  std::optional<double> tau_mean;
  double nav_error_frac = 0.0;
  double mean_reward = 0.0;
  int jam_count = 0;
  int vehicles = 0;
};

// Running aggregates over the ordered event stream of one run.
class MetricsAggregator {
 public:
  void record_trip(const TripRecord& t);
  void record_prediction(bool refused);
  void record_predictions(long long total, long long refused);
  void record_reward(double normalised_reward);
  void record_rewards(double reward_sum, long long events);

  SeriesPoint sample(long long step, int jam_count, int vehicles) const;

  long long completed_trips() const { return trips_; }
  long long predictions_total() const { return predictions_; }
  long long predictions_refused() const { return refused_; }
  long long reward_events() const { return reward_events_; }

 private:
  long long trips_ = 0;
  double eta_sum_ = 0.0;
  double tau_sum_ = 0.0;
  long long predictions_ = 0;
  long long refused_ = 0;
  long long reward_events_ = 0;
  double reward_sum_ = 0.0;
};

inline constexpr const char* kMetricsCsvHeader =
    "step,eta,tau,nav_error_frac,mean_reward,jam_count,vehicles";
inline constexpr const char* kJamCsvHeader =
    "step,cluster_id,size,min_x,min_y,max_x,max_y";

// Fixed 6-decimal formatting; absent values render as empty fields.
std::string to_csv_line(const SeriesPoint& p);
std::string to_csv_line(long long step, const JamCluster& c);

}  // namespace mtsim
