#include "mtsim/vehicle.hpp"

#include <algorithm>

namespace mtsim {

namespace {

// Scan a straight line of patches from pos along dir; returns the distance
// of the first occupied patch, or sensor_range when none is visible before
// the range ends or the drivable surface does.
int scan_distance(const CityMap& map, const OccupancyView& occ, Point pos,
                  Compass dir, int range) {
  Point p = pos;
  for (int k = 1; k <= range; ++k) {
    p = step(p, dir);
    if (!map.in_bounds(p)) return range;
    int idx = map.index(p);
    if (!map.drivable(idx)) return range;
    if (occ.occupied(idx)) return k;
  }
  return range;
}

int queue_length(const CityMap& map, const OccupancyView& occ, Point pos,
                 Compass dir, int first_vehicle_at, int range) {
  Point p = pos;
  for (int k = 1; k < first_vehicle_at; ++k) p = step(p, dir);
  int count = 0;
  for (int k = first_vehicle_at; k <= range; ++k) {
    p = step(p, dir);
    if (!map.in_bounds(p)) break;
    int idx = map.index(p);
    if (!map.drivable(idx) || !occ.stopped_vehicle_at(idx)) break;
    ++count;
  }
  return count;
}

}  // namespace

SensorFrame sense(const CityMap& map, const OccupancyView& occ, long long t,
                  const Vehicle& v, const DistanceField& field,
                  int de_window_ref, const BehaviourParams& params) {
  SensorFrame f;
  const Point pos = map.point(v.pos);
  const PatchInfo& here = map.at(v.pos);

  f.r0 = v.heading;
  f.v0 = v.v_max_local > 0
             ? std::clamp(static_cast<double>(v.speed) / v.v_max_local, 0.0, 1.0)
             : 0.0;
  f.qt0 = v.stopped_steps;

  TurnOptions opts = map.allowed_turns(pos, v.heading);
  f.tl = opts.tl;
  f.tr = opts.tr;
  f.tb = opts.tb;
  f.ahead = opts.ahead;

  // Route context.
  if (here.kind == PatchKind::Junction) {
    const Junction& jc = map.junctions()[here.junction];
    f.at_entry_decision = !v.has_exit_plan;
    // Greedy forward arm: the ahead/left/right exit minimising the
    // destination distance, scanned in N,E,S,W order for determinism.
    int best = -1;
    for (Compass arm : kCompassOrder) {
      if (arm == opposite(v.heading)) continue;  // rules never reverse
      if (!jc.has_exit(arm)) continue;
      int d = field.at(jc.exit_lane[static_cast<int>(arm)]);
      if (d < 0) continue;
      if (best < 0 || d < best) {
        best = d;
        f.greedy_arm = arm;
        f.greedy_valid = true;
      }
    }
    const Compass plan = v.has_exit_plan ? v.exit_arm
                         : f.greedy_valid ? f.greedy_arm
                                          : v.heading;
    f.route_dir = (v.has_exit_plan || f.greedy_valid)
                      ? map.junction_route_dir(jc, pos, plan)
                      : v.heading;

    // Escape feasibility: a free first step toward a side arm.
    for (Compass arm : {left_of(v.heading), right_of(v.heading)}) {
      if (!jc.has_exit(arm)) continue;
      Compass dir = map.junction_route_dir(jc, pos, arm);
      Point target = step(pos, dir);
      if (!map.in_bounds(target)) continue;
      int ti = map.index(target);
      if (!map.drivable(ti) || occ.occupied(ti)) continue;
      if (arm == left_of(v.heading)) f.escape_left_ok = true;
      else f.escape_right_ok = true;
    }
  } else {
    f.route_dir = here.dir;
  }

  // Neighbour distances and the queue ahead.
  f.df0 = scan_distance(map, occ, pos, f.route_dir, params.sensor_range);
  f.db0 = scan_distance(map, occ, pos, opposite(v.heading), params.sensor_range);
  if (f.df0 < params.sensor_range) {
    Point ahead_pos = pos;
    for (int k = 0; k < f.df0; ++k) ahead_pos = step(ahead_pos, f.route_dir);
    if (occ.stopped_vehicle_at(map.index(ahead_pos)))
      f.ql = queue_length(map, occ, pos, f.route_dir, f.df0, params.sensor_range);
  }

  // Destination distance and window progress.
  f.de = std::max(field.at(v.pos), 0);
  f.d_de = de_window_ref - f.de;
  f.td0 = v.heading;
  {
    std::array<int, 4> nbrs{};
    int n = map.out_neighbors(v.pos, nbrs);
    int best = -1;
    for (int k = 0; k < n; ++k) {
      int d = field.at(nbrs[k]);
      if (d < 0) continue;
      if (best < 0 || d < best) {
        best = d;
        Point np = map.point(nbrs[k]);
        f.td0 = np.x > pos.x   ? Compass::E
                : np.x < pos.x ? Compass::W
                : np.y > pos.y ? Compass::N
                               : Compass::S;
      }
    }
  }

  // Junction entry ahead: signal state and the anti-gridlock entry guard
  // (do not enter an extent whose every exit lane is taken).
  if (here.kind == PatchKind::Lane) {
    Point next = step(pos, f.route_dir);
    if (map.in_bounds(next)) {
      int ni = map.index(next);
      if (map.drivable(ni) && map.at(ni).kind == PatchKind::Junction) {
        if (const TrafficSignal* sig = map.signal_at_stop_line(ni))
          f.red_ahead = map.phase(*sig, t) == Phase::Red;
        const Junction& jc = map.junctions()[map.at(ni).junction];
        bool any_free_exit = false;
        for (Compass arm : kCompassOrder) {
          int lane = jc.exit_lane[static_cast<int>(arm)];
          if (lane >= 0 && !occ.occupied(lane)) {
            any_free_exit = true;
            break;
          }
        }
        f.entry_blocked = !any_free_exit;
      }
    }
  }
  return f;
}

RuleAction rule_action(const SensorFrame& frame, const Vehicle& v,
                       const BehaviourParams& params) {
  // (1) collision / red-light / blocked-junction guard
  if (frame.red_ahead || frame.entry_blocked || frame.df0 <= 1) return RuleAction::Stop;

  // (2) headway below the speed-dependent minimum
  if (frame.df0 < BehaviourParams::min_headway(v.speed))
    return v.speed - params.speed_increment <= 0 ? RuleAction::Stop
                                                 : RuleAction::SpeedDown;

  // (3) speed limit
  if (v.speed > v.v_max_local) return RuleAction::SpeedDown;

  // (4) open road
  if (frame.df0 >= params.free_headway(v.speed) && v.speed < v.v_max_local)
    return RuleAction::SpeedUp;

  // (5) follow the route
  const Compass target = frame.at_entry_decision
                             ? (frame.greedy_valid ? frame.greedy_arm : frame.r0)
                             : frame.route_dir;
  if (frame.at_entry_decision && !frame.greedy_valid) return RuleAction::Stop;
  if (target == frame.r0) return RuleAction::StepAhead;
  if (target == left_of(frame.r0)) return RuleAction::StepLeft;
  if (target == right_of(frame.r0)) return RuleAction::StepRight;
  return RuleAction::Stop;  // reverse step: not expressible by rules
}

std::optional<RuleAction> trap_escape(const SensorFrame& frame, const Vehicle& v,
                                      const BehaviourParams& params, Rng& rng) {
  if (v.stopped_steps <= params.trap_threshold) return std::nullopt;
  const bool left = frame.tl && frame.escape_left_ok;
  const bool right = frame.tr && frame.escape_right_ok;
  if (left && right)
    return rng.uniform_u32(2) == 0 ? RuleAction::StepLeft : RuleAction::StepRight;
  if (left) return RuleAction::StepLeft;
  if (right) return RuleAction::StepRight;
  return std::nullopt;
}

ApplyResult apply_action(const CityMap& map, OccupancyGrid& occ, Vehicle& v,
                         const FinalAction& action, const BehaviourParams& params) {
  ApplyResult result;

  switch (action.kind) {
    case FinalAction::Kind::Stop:
      v.speed = 0;  // frac stays frozen
      break;
    case FinalAction::Kind::SpeedUp:
      v.speed = std::min(v.speed + params.speed_increment, v.v_max_local);
      break;
    case FinalAction::Kind::SpeedDown:
      v.speed = std::max(v.speed - params.speed_increment, 0);
      break;
    case FinalAction::Kind::Step:
      break;
  }

  if (action.set_exit_arm) {
    v.has_exit_plan = true;
    v.exit_arm = *action.set_exit_arm;
  }

  if (v.speed > 0) {
    v.frac += v.speed;
    if (v.frac >= kCenti) {
      Point target = step(map.point(v.pos), action.move_dir);
      int ti = map.in_bounds(target) ? map.index(target) : -1;
      if (ti < 0 || !map.drivable(ti)) {
        result.violation = true;
        v.frac = kCenti;
      } else if (occ.claim(ti, v.id)) {
        occ.release(v.pos, v.id);
        v.pos = ti;
        v.frac -= kCenti;
        v.heading = action.move_dir;
        v.trip.moves += 1;
        result.moved = true;
        if (map.at(ti).kind != PatchKind::Junction) v.has_exit_plan = false;
      } else {
        result.blocked = true;
        v.frac = kCenti;
      }
    }
  }

  if (result.moved || (v.speed > 0 && !result.blocked))
    v.stopped_steps = 0;
  else
    v.stopped_steps += 1;

  result.arrived = result.moved && v.pos == v.destination;
  return result;
}

}  // namespace mtsim
