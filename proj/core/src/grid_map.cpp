#include "mtsim/grid_map.hpp"

#include <algorithm>
#include <cassert>
#include <deque>
#include <string>

#include <nlohmann/json.hpp>

namespace mtsim {

namespace {

// Buildings framing the street rectangle.
constexpr int kMapMargin = 3;

int street_origin(int index, int junction_size, int segment_len) {
  return kMapMargin + index * (junction_size + segment_len);
}

int street_span(int count, int junction_size, int segment_len) {
  return count * junction_size + (count - 1) * segment_len;
}

}  // namespace

void GridMapParams::validate() const {
  if (streets_ns < 2)
    throw ConfigError("map.streets_ns must be >= 2, got " + std::to_string(streets_ns));
  if (streets_ew < 2)
    throw ConfigError("map.streets_ew must be >= 2, got " + std::to_string(streets_ew));
  if (segment_len < 1)
    throw ConfigError("map.segment_len must be >= 1, got " + std::to_string(segment_len));
  if (junction_size < 1 || junction_size % 2 == 0)
    throw ConfigError("map.junction_size must be odd and >= 1, got " +
                      std::to_string(junction_size));
  if (lane_width != 1)
    throw ConfigError("map.lane_width is fixed at 1, got " + std::to_string(lane_width));
  if (cycle_len < 2 || cycle_len % 2 != 0)
    throw ConfigError("map.cycle_len must be even and >= 2, got " +
                      std::to_string(cycle_len));
  if (!(default_speed > 0.0) || default_speed > 1.0)
    throw ConfigError("map.default_speed must be in (0, 1], got " +
                      std::to_string(default_speed));
  // One-lane streets (junction_size 1) alternate their one-way direction, so
  // an odd street count would strand the last corner.
  if (junction_size == 1 && (streets_ns % 2 != 0 || streets_ew % 2 != 0))
    throw ConfigError("map.junction_size 1 requires even street counts, got " +
                      std::to_string(streets_ns) + "x" + std::to_string(streets_ew));
}

Phase signal_phase(const TrafficSignal& s, long long t, int cycle_len) {
  long long m = (t + s.phase_offset) % cycle_len;
  bool ns_green = m < cycle_len / 2;
  bool is_ns_arm = is_north_south(s.arm);
  return (is_ns_arm == ns_green) ? Phase::Green : Phase::Red;
}

CityMap CityMap::generate(const GridMapParams& params) {
  params.validate();

  CityMap map;
  map.params_ = params;

  const int ns = params.streets_ns;
  const int ew = params.streets_ew;
  const int J = params.junction_size;
  const int seg = params.segment_len;

  const int span_x = street_span(ns, J, seg);
  const int span_y = street_span(ew, J, seg);
  map.width_ = span_x + 2 * kMapMargin;
  map.height_ = span_y + 2 * kMapMargin;
  map.patches_.assign(static_cast<std::size_t>(map.width_) * map.height_, PatchInfo{});

  auto patch = [&](int x, int y) -> PatchInfo& {
    return map.patches_[static_cast<std::size_t>(y) * map.width_ + x];
  };

  // Horizontal streets. With junction_size >= 3 the cross-section is one
  // eastbound lane on the south row, one westbound lane on the north row and
  // median in between (right-hand traffic). Single-patch streets are one-way
  // with alternating direction.
  for (int j = 0; j < ew; ++j) {
    const int y0 = street_origin(j, J, seg);
    const std::int16_t street_id = static_cast<std::int16_t>(ns + j);
    for (int x = kMapMargin; x < kMapMargin + span_x; ++x) {
      for (int r = 0; r < J; ++r) {
        PatchInfo& p = patch(x, y0 + r);
        p.street = street_id;
        if (J == 1) {
          p.kind = PatchKind::Lane;
          p.dir = (j % 2 == 0) ? Compass::W : Compass::E;
        } else if (r == 0) {
          p.kind = PatchKind::Lane;
          p.dir = Compass::E;
        } else if (r == J - 1) {
          p.kind = PatchKind::Lane;
          p.dir = Compass::W;
        } else {
          p.kind = PatchKind::Median;
        }
      }
    }
  }

  // Vertical streets: northbound on the east column, southbound on the west.
  for (int i = 0; i < ns; ++i) {
    const int x0 = street_origin(i, J, seg);
    const std::int16_t street_id = static_cast<std::int16_t>(i);
    for (int y = kMapMargin; y < kMapMargin + span_y; ++y) {
      for (int c = 0; c < J; ++c) {
        PatchInfo& p = patch(x0 + c, y);
        p.street = street_id;
        p.junction = -1;
        if (J == 1) {
          p.kind = PatchKind::Lane;
          p.dir = (i % 2 == 0) ? Compass::N : Compass::S;
        } else if (c == 0) {
          p.kind = PatchKind::Lane;
          p.dir = Compass::S;
        } else if (c == J - 1) {
          p.kind = PatchKind::Lane;
          p.dir = Compass::N;
        } else {
          p.kind = PatchKind::Median;
        }
      }
    }
  }

  // Segment ids. North-south segments first, then east-west.
  const int ns_segments = ns * (ew - 1);
  for (int i = 0; i < ns; ++i) {
    const int x0 = street_origin(i, J, seg);
    for (int g = 0; g < ew - 1; ++g) {
      const std::int16_t seg_id = static_cast<std::int16_t>(i * (ew - 1) + g);
      const int y_lo = street_origin(g, J, seg) + J;
      const int y_hi = street_origin(g + 1, J, seg);
      for (int y = y_lo; y < y_hi; ++y)
        for (int c = 0; c < J; ++c) patch(x0 + c, y).segment = seg_id;
    }
  }
  for (int j = 0; j < ew; ++j) {
    const int y0 = street_origin(j, J, seg);
    for (int g = 0; g < ns - 1; ++g) {
      const std::int16_t seg_id =
          static_cast<std::int16_t>(ns_segments + j * (ns - 1) + g);
      const int x_lo = street_origin(g, J, seg) + J;
      const int x_hi = street_origin(g + 1, J, seg);
      for (int x = x_lo; x < x_hi; ++x)
        for (int r = 0; r < J; ++r) patch(x, y0 + r).segment = seg_id;
    }
  }

  // Junction extents overwrite the street crossings.
  map.junctions_.reserve(static_cast<std::size_t>(ns) * ew);
  for (int j = 0; j < ew; ++j) {
    for (int i = 0; i < ns; ++i) {
      const int id = j * ns + i;
      const int x0 = street_origin(i, J, seg);
      const int y0 = street_origin(j, J, seg);
      Junction jc;
      jc.id = id;
      jc.grid_i = i;
      jc.grid_j = j;
      jc.origin = {x0, y0};
      jc.center = {x0 + J / 2, y0 + J / 2};
      jc.size = J;
      for (int y = y0; y < y0 + J; ++y) {
        for (int x = x0; x < x0 + J; ++x) {
          PatchInfo& p = patch(x, y);
          p.kind = PatchKind::Junction;
          p.junction = static_cast<std::int16_t>(id);
          p.street = -1;
          p.segment = -1;
        }
      }
      jc.arm_exists[static_cast<int>(Compass::N)] = j < ew - 1;
      jc.arm_exists[static_cast<int>(Compass::S)] = j > 0;
      jc.arm_exists[static_cast<int>(Compass::E)] = i < ns - 1;
      jc.arm_exists[static_cast<int>(Compass::W)] = i > 0;
      if (j < ew - 1)
        jc.arm_segment[static_cast<int>(Compass::N)] =
            static_cast<std::int16_t>(i * (ew - 1) + j);
      if (j > 0)
        jc.arm_segment[static_cast<int>(Compass::S)] =
            static_cast<std::int16_t>(i * (ew - 1) + (j - 1));
      if (i < ns - 1)
        jc.arm_segment[static_cast<int>(Compass::E)] =
            static_cast<std::int16_t>(ns_segments + j * (ns - 1) + i);
      if (i > 0)
        jc.arm_segment[static_cast<int>(Compass::W)] =
            static_cast<std::int16_t>(ns_segments + j * (ns - 1) + (i - 1));
      map.junctions_.push_back(jc);
    }
  }

  // Arm lanes: scan the patch ring just outside each extent. A lane pointing
  // away from the junction is its exit on that arm; a lane pointing inward
  // defines the entry patch (used as the signal stop line).
  for (Junction& jc : map.junctions_) {
    const int x0 = jc.origin.x, y0 = jc.origin.y;
    for (Compass arm : kCompassOrder) {
      const int a = static_cast<int>(arm);
      if (!jc.arm_exists[a]) continue;
      for (int k = 0; k < J; ++k) {
        Point outside;
        switch (arm) {
          case Compass::N: outside = {x0 + k, y0 + J}; break;
          case Compass::S: outside = {x0 + k, y0 - 1}; break;
          case Compass::E: outside = {x0 + J, y0 + k}; break;
          case Compass::W: outside = {x0 - 1, y0 + k}; break;
        }
        if (!map.in_bounds(outside)) continue;
        const PatchInfo& p = map.at(outside);
        if (p.kind != PatchKind::Lane) continue;
        if (p.dir == arm) {
          jc.exit_lane[a] = map.index(outside);
        } else if (p.dir == opposite(arm)) {
          jc.entry_patch[a] = map.index(step(outside, opposite(arm)));
        }
      }
    }
  }

  // Signals: the fully connected interior junctions carry one signal per
  // inbound arm with a 50% duty cycle and mutually exclusive NS/EW phases.
  map.signal_by_stop_line_.assign(map.patches_.size(), -1);
  for (const Junction& jc : map.junctions_) {
    const bool all_arms = jc.arm_exists[0] && jc.arm_exists[1] &&
                          jc.arm_exists[2] && jc.arm_exists[3];
    if (!all_arms) continue;
    for (Compass arm : kCompassOrder) {
      const int a = static_cast<int>(arm);
      if (jc.entry_patch[a] < 0) continue;
      TrafficSignal s;
      s.id = static_cast<int>(map.signals_.size());
      s.junction = jc.id;
      s.arm = arm;
      s.stop_line = jc.entry_patch[a];
      s.phase_offset = 0;
      map.signal_by_stop_line_[s.stop_line] = s.id;
      map.signals_.push_back(s);
    }
  }

  // Counts.
  MapCounts& c = map.counts_;
  c.streets = ns + ew;
  c.segments = ns * (ew - 1) + ew * (ns - 1);
  c.junctions = static_cast<int>(map.junctions_.size());
  c.signals = static_cast<int>(map.signals_.size());
  for (int idx = 0; idx < static_cast<int>(map.patches_.size()); ++idx) {
    switch (map.patches_[idx].kind) {
      case PatchKind::Lane:
        ++c.lane_patches;
        map.lanes_.push_back(idx);
        map.drivable_.push_back(idx);
        break;
      case PatchKind::Median:
        ++c.median_patches;
        break;
      case PatchKind::Junction:
        ++c.junction_patches;
        map.drivable_.push_back(idx);
        break;
      case PatchKind::Building:
        break;
    }
  }
  c.street_patches = c.lane_patches + c.median_patches + c.junction_patches;
  // Capacity follows the segment arithmetic (segment_len vehicles per
  // direction per segment); junction interiors are transit space.
  c.capacity = c.lane_patches;

  map.build_edges_and_validate();
  return map;
}

int CityMap::out_neighbors(int idx, std::array<int, 4>& out) const {
  const PatchInfo& p = patches_[idx];
  int n = 0;
  if (p.kind == PatchKind::Lane) {
    Point t = step(point(idx), p.dir);
    if (in_bounds(t)) {
      int ti = index(t);
      if (drivable(ti)) out[n++] = ti;
    }
    return n;
  }
  if (p.kind == PatchKind::Junction) {
    for (Compass c : kCompassOrder) {
      Point t = step(point(idx), c);
      if (!in_bounds(t)) continue;
      int ti = index(t);
      const PatchInfo& q = patches_[ti];
      if (q.kind == PatchKind::Junction && q.junction == p.junction) {
        out[n++] = ti;
      } else if (q.kind == PatchKind::Lane && q.dir == c) {
        out[n++] = ti;
      }
    }
  }
  return n;
}

int CityMap::in_neighbors(int idx, std::array<int, 4>& out) const {
  const PatchInfo& p = patches_[idx];
  if (p.kind != PatchKind::Lane && p.kind != PatchKind::Junction) return 0;
  int n = 0;
  for (Compass c : kCompassOrder) {
    Point qp = step(point(idx), c);
    if (!in_bounds(qp)) continue;
    int qi = index(qp);
    const PatchInfo& q = patches_[qi];
    const Compass toward_p = opposite(c);
    if (q.kind == PatchKind::Lane) {
      if (q.dir == toward_p) out[n++] = qi;
    } else if (q.kind == PatchKind::Junction) {
      if (p.kind == PatchKind::Junction && p.junction == q.junction)
        out[n++] = qi;
      else if (p.kind == PatchKind::Lane && p.dir == toward_p)
        out[n++] = qi;
    }
  }
  return n;
}

void CityMap::build_edges_and_validate() {
  assert(static_cast<int>(junctions_.size()) == params_.streets_ns * params_.streets_ew);
  if (drivable_.empty()) throw ConfigError("generated map has no drivable patches");

  // Strong connectivity over the directed drivable graph: forward and
  // reverse reachability from one patch must each cover every patch.
  auto reachable = [&](bool forward) {
    std::vector<char> seen(patches_.size(), 0);
    std::deque<int> queue{drivable_.front()};
    seen[drivable_.front()] = 1;
    int count = 0;
    std::array<int, 4> nbrs{};
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      ++count;
      int n = forward ? out_neighbors(cur, nbrs) : in_neighbors(cur, nbrs);
      for (int k = 0; k < n; ++k) {
        if (!seen[nbrs[k]]) {
          seen[nbrs[k]] = 1;
          queue.push_back(nbrs[k]);
        }
      }
    }
    return count;
  };

  const int total = static_cast<int>(drivable_.size());
  if (reachable(true) != total || reachable(false) != total)
    throw ConfigError("generated map is not strongly connected; adjust map parameters");

  for (const Junction& j : junctions_) {
    bool any_exit = j.has_exit(Compass::N) || j.has_exit(Compass::E) ||
                    j.has_exit(Compass::S) || j.has_exit(Compass::W);
    if (!any_exit) throw ConfigError("junction without exit lane; map generation bug");
  }
}

TurnOptions CityMap::allowed_turns(Point pos, Compass heading) const {
  if (!in_bounds(pos))
    throw DomainError("allowed_turns: position out of bounds");
  const PatchInfo& p = at(pos);
  if (p.kind == PatchKind::Building || p.kind == PatchKind::Median)
    throw DomainError("allowed_turns: patch (" + std::to_string(pos.x) + "," +
                      std::to_string(pos.y) + ") is not drivable");

  TurnOptions opts;
  if (p.kind == PatchKind::Lane) {
    opts.ahead = (heading == p.dir);
    return opts;
  }
  const Junction& j = junctions_[p.junction];
  opts.ahead = j.has_exit(heading);
  opts.tl = j.has_exit(left_of(heading));
  opts.tr = j.has_exit(right_of(heading));
  opts.tb = j.has_exit(opposite(heading));
  return opts;
}

const TrafficSignal* CityMap::signal_at_stop_line(int idx) const {
  int sid = signal_by_stop_line_[idx];
  return sid < 0 ? nullptr : &signals_[sid];
}

Compass CityMap::junction_route_dir(const Junction& j, Point pos, Compass exit_arm) const {
  const int a = static_cast<int>(exit_arm);
  if (j.exit_lane[a] < 0)
    throw DomainError("junction_route_dir: junction " + std::to_string(j.id) +
                      " has no exit on arm " + std::string(compass_name(exit_arm)));
  const Point exit = point(j.exit_lane[a]);
  if (is_north_south(exit_arm)) {
    if (pos.x != exit.x) return pos.x < exit.x ? Compass::E : Compass::W;
    return exit_arm;
  }
  if (pos.y != exit.y) return pos.y < exit.y ? Compass::N : Compass::S;
  return exit_arm;
}

nlohmann::json CityMap::to_json() const {
  nlohmann::json j;
  j["params"] = {
      {"streets_ns", params_.streets_ns}, {"streets_ew", params_.streets_ew},
      {"segment_len", params_.segment_len}, {"junction_size", params_.junction_size},
      {"lane_width", params_.lane_width}, {"default_speed", params_.default_speed},
      {"cycle_len", params_.cycle_len}};
  j["width"] = width_;
  j["height"] = height_;
  j["counts"] = {{"streets", counts_.streets},
                 {"segments", counts_.segments},
                 {"junctions", counts_.junctions},
                 {"signals", counts_.signals},
                 {"street_patches", counts_.street_patches},
                 {"lane_patches", counts_.lane_patches},
                 {"median_patches", counts_.median_patches},
                 {"junction_patches", counts_.junction_patches},
                 {"capacity", counts_.capacity}};

  auto code = [](const PatchInfo& p) -> char {
    switch (p.kind) {
      case PatchKind::Building: return 'b';
      case PatchKind::Median: return 'm';
      case PatchKind::Junction: return 'J';
      case PatchKind::Lane: return compass_char(p.dir);
    }
    return 'b';
  };

  nlohmann::json rle = nlohmann::json::array();
  char run_code = code(patches_[0]);
  int run_len = 0;
  for (const PatchInfo& p : patches_) {
    char c = code(p);
    if (c == run_code) {
      ++run_len;
    } else {
      rle.push_back({std::string(1, run_code), run_len});
      run_code = c;
      run_len = 1;
    }
  }
  rle.push_back({std::string(1, run_code), run_len});
  j["grid_rle"] = std::move(rle);
  return j;
}

}  // namespace mtsim
