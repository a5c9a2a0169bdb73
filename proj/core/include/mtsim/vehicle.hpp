#pragma once

#include <optional>

#include "mtsim/geometry.hpp"
#include "mtsim/grid_map.hpp"
#include "mtsim/occupancy.hpp"
#include "mtsim/rng.hpp"
#include "mtsim/route.hpp"

namespace mtsim {

// Speeds and the sub-patch accumulator are hundredths of a patch per step.
// Integer arithmetic keeps movement exact and runs bit-identical everywhere.
constexpr int kCenti = 100;

inline int to_centi(double patches_per_step) {
  return static_cast<int>(patches_per_step * kCenti + 0.5);
}

struct BehaviourParams {
  int sensor_range = 12;     // patches
  int trap_threshold = 100;  // stopped steps before escape turns kick in
  int speed_increment = 10;  // centipatches/step
  int v_max = 40;            // centipatches/step

  // Minimum headway: 1 patch up to 0.2 patches/step, one more per further
  // full 0.2.
  static int min_headway(int speed_centi) {
    return 1 + std::max(0, (speed_centi - 20) / 20);
  }
  int free_headway(int speed_centi) const { return min_headway(speed_centi) + 2; }
};

struct TripProgress {
  int origin = -1;
  int destination = -1;
  long long start_step = 0;
  long long moves = 0;      // patches actually driven this trip
  int oracle_length = 0;    // shortest-path length frozen at trip start
};

struct Vehicle {
  int id = -1;
  int pos = -1;            // patch index
  int frac = 0;            // centipatch accumulator
  Compass heading = Compass::N;
  int speed = 0;           // centipatches/step
  int v_max_local = 40;
  int origin = -1;
  int destination = -1;
  int stopped_steps = 0;

  // Junction traversal plan: while inside an extent the vehicle follows
  // exit_arm; cleared when it leaves onto a lane.
  bool has_exit_plan = false;
  Compass exit_arm = Compass::N;

  TripProgress trip;
};

// The per-step percept of one vehicle. The first block carries the sensor
// variables fed to the learner; the rest is step context for the rule layer
// (signal state ahead, junction-entry bookkeeping, escape feasibility).
struct SensorFrame {
  double v0 = 0.0;            // speed normalised by the local limit
  int df0 = 0;                // distance to front neighbour, clipped
  int db0 = 0;                // distance to back neighbour, clipped
  int de = 0;                 // shortest-path distance to destination
  int d_de = 0;               // progress over the averaging window
  Compass td0 = Compass::N;   // neighbour step that reduces de
  int qt0 = 0;                // consecutive stopped steps
  int ql = 0;                 // contiguous stopped vehicles ahead
  bool tl = false, tr = false, tb = false, ahead = false;
  Compass r0 = Compass::N;    // heading

  bool red_ahead = false;        // next patch is a red stop line
  bool entry_blocked = false;    // junction ahead with every exit lane taken
  bool at_entry_decision = false;  // on a junction patch without a plan
  bool greedy_valid = false;     // greedy_arm holds a usable choice
  Compass greedy_arm = Compass::N;  // forward arm minimising de
  Compass route_dir = Compass::N;   // next step the current route implies
  bool escape_left_ok = false;   // free first step onto the left arm
  bool escape_right_ok = false;  // free first step onto the right arm
};

enum class RuleAction : std::uint8_t {
  StepLeft,
  StepRight,
  StepAhead,
  SpeedUp,
  SpeedDown,
  Stop,
};

SensorFrame sense(const CityMap& map, const OccupancyView& occ, long long t,
                  const Vehicle& v, const DistanceField& field,
                  int de_window_ref, const BehaviourParams& params);

// Priority decision tree over the driving constraints: collision/red-light
// guard, headway, speed limit, free-road acceleration, then route-following.
RuleAction rule_action(const SensorFrame& frame, const Vehicle& v,
                       const BehaviourParams& params);

// After trap_threshold stopped steps, try turning onto a free neighbouring
// arm; left/right preferred equally with a seeded tie-break. Returns nothing
// when no legal free turn exists.
std::optional<RuleAction> trap_escape(const SensorFrame& frame, const Vehicle& v,
                                      const BehaviourParams& params, Rng& rng);

enum class Provenance : std::uint8_t { Rule, Learned, Escape };

// The action committed to apply_action, fully resolved: the kinematic kind,
// the absolute direction of any patch move this step, and the exit-arm
// decision when one was made at a junction entry.
struct FinalAction {
  enum class Kind : std::uint8_t { Stop, SpeedUp, SpeedDown, Step };
  Kind kind = Kind::Stop;
  Compass move_dir = Compass::N;
  std::optional<Compass> set_exit_arm;
  Provenance provenance = Provenance::Rule;
};

struct ApplyResult {
  bool moved = false;
  bool blocked = false;    // target patch was taken
  bool violation = false;  // move into a non-drivable patch was rejected
  bool arrived = false;    // reached the trip destination
};

// Kinematic commit: speed change, fractional advance, at most one patch
// move with an atomic occupancy claim.
ApplyResult apply_action(const CityMap& map, OccupancyGrid& occ, Vehicle& v,
                         const FinalAction& action, const BehaviourParams& params);

}  // namespace mtsim
