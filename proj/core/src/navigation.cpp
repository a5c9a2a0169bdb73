#include "mtsim/navigation.hpp"

#include "mtsim/errors.hpp"

namespace mtsim {

FusedChoice choice_from_rule(RuleAction rule, const SensorFrame& frame) {
  FusedChoice out;
  out.provenance = Provenance::Rule;
  switch (rule) {
    case RuleAction::Stop:
      out.kind = FusedChoice::Kind::Stop;
      return out;
    case RuleAction::SpeedUp:
      out.kind = FusedChoice::Kind::SpeedUp;
      break;
    case RuleAction::SpeedDown:
      out.kind = FusedChoice::Kind::SpeedDown;
      break;
    case RuleAction::StepLeft:
    case RuleAction::StepRight:
    case RuleAction::StepAhead:
      out.kind = FusedChoice::Kind::Step;
      break;
  }
  if (frame.at_entry_decision && frame.greedy_valid) out.arm = frame.greedy_arm;
  return out;
}

FusedChoice fuse(RuleAction rule, NavAction nav, const SensorFrame& frame,
                 FusionState& fs, const NavigationParams& params) {
  ++fs.predictions_total;
  const bool safety = rule == RuleAction::Stop || rule == RuleAction::SpeedDown;
  FusedChoice fallback = choice_from_rule(rule, frame);

  switch (nav) {
    case NavAction::Left:
    case NavAction::Right:
    case NavAction::Backward: {
      const bool allowed = nav == NavAction::Left    ? frame.tl
                           : nav == NavAction::Right ? frame.tr
                                                     : frame.tb;
      if (!allowed || fs.cooldown_remaining > 0 || !frame.at_entry_decision) {
        ++fs.predictions_refused;
        fallback.nav_refused = true;
        return fallback;
      }
      if (safety) return fallback;  // preempted by a guard, not a wrong prediction
      FusedChoice out;
      out.kind = FusedChoice::Kind::Step;
      out.arm = nav == NavAction::Left    ? left_of(frame.r0)
                : nav == NavAction::Right ? right_of(frame.r0)
                                          : opposite(frame.r0);
      out.provenance = Provenance::Learned;
      fs.cooldown_remaining = params.turn_cooldown;
      return out;
    }
    case NavAction::SpeedUp: {
      if (safety) return fallback;
      FusedChoice out = fallback;
      out.kind = FusedChoice::Kind::SpeedUp;
      out.provenance = Provenance::Learned;
      return out;
    }
    case NavAction::SpeedDown: {
      if (rule == RuleAction::Stop) return fallback;
      FusedChoice out = fallback;
      out.kind = FusedChoice::Kind::SpeedDown;
      out.provenance = Provenance::Learned;
      return out;
    }
  }
  return fallback;
}

RunningAverages update_averages(RunningAverages avg, const SensorFrame& frame,
                                double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw DomainError("update_averages: alpha must be in (0, 1]");
  const double v0 = frame.v0;
  const double qt0 = static_cast<double>(frame.qt0);
  const double sd = progress_sample(frame);
  if (!avg.initialized) return RunningAverages{true, v0, qt0, sd};
  avg.v0 += alpha * (v0 - avg.v0);
  avg.qt0 += alpha * (qt0 - avg.qt0);
  avg.sd += alpha * (sd - avg.sd);
  return avg;
}

}  // namespace mtsim
