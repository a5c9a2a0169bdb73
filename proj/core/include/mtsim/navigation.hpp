#pragma once

#include <optional>

#include "mtsim/rl.hpp"
#include "mtsim/vehicle.hpp"

namespace mtsim {

struct NavigationParams {
  double superposition = 100.0;  // % of decision points where the learner is consulted
  int turn_cooldown = 10;        // steps between accepted learned turns
  double refusal_penalty = 0.1;  // extra reward penalty per refused turn, normalised units
};

// Per-vehicle fusion bookkeeping.
struct FusionState {
  int cooldown_remaining = 0;
  long long predictions_total = 0;
  long long predictions_refused = 0;
};

// Fusion output in world terms: a kinematic kind plus, when a junction
// decision was made, the chosen exit arm.
struct FusedChoice {
  enum class Kind : std::uint8_t { Stop, SpeedUp, SpeedDown, Step };
  Kind kind = Kind::Stop;
  std::optional<Compass> arm;
  Provenance provenance = Provenance::Rule;
  bool nav_refused = false;
};

// Express a rule action as a FusedChoice for the current frame. At a
// junction-entry decision the greedy arm rides along with any non-stop kind.
FusedChoice choice_from_rule(RuleAction rule, const SensorFrame& frame);

// The lazy constraint solver arbitrating between the rule action and the
// learner proposal. Safety-critical rule outcomes (stop, forced slow-down)
// always win. A proposed turn is accepted only when the matching turn
// boolean holds, the exit exists and the cooldown has elapsed; otherwise it
// is refused and counted as a navigation error. Speed proposals pass unless
// a guard fired.
FusedChoice fuse(RuleAction rule, NavAction nav, const SensorFrame& frame,
                 FusionState& fs, const NavigationParams& params);

// Exponentially weighted means of the reward inputs; the first sample
// initialises each mean exactly.
RunningAverages update_averages(RunningAverages avg, const SensorFrame& frame,
                                double alpha);

}  // namespace mtsim
