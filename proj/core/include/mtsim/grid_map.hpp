#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mtsim/errors.hpp"
#include "mtsim/geometry.hpp"

namespace mtsim {

// Parameters of the generated grid city. The default values reproduce the
// reference world: 7x7 streets, 12-patch segments, 3x3 junctions.
struct GridMapParams {
  int streets_ns = 7;         // vertical streets (running north-south)
  int streets_ew = 7;         // horizontal streets (running east-west)
  int segment_len = 12;       // lane patches between adjacent junctions
  int junction_size = 3;      // junction extent per side, odd
  int lane_width = 1;         // patches per driving direction, fixed
  double default_speed = 0.2; // patches per simulation step
  int cycle_len = 40;         // full green-red signal cycle in steps

  // Throws ConfigError naming the violated bound.
  void validate() const;

  friend bool operator==(const GridMapParams&, const GridMapParams&) = default;
};

enum class PatchKind : std::uint8_t { Building, Lane, Median, Junction };

struct PatchInfo {
  PatchKind kind = PatchKind::Building;
  Compass dir = Compass::N;    // lane direction (Lane patches)
  std::int16_t street = -1;    // street id (Lane/Median patches)
  std::int16_t segment = -1;   // segment id (Lane/Median patches)
  std::int16_t junction = -1;  // junction id (Junction patches)
};

// One street crossing. Arms are indexed by Compass. Streets meet in a
// junction_size x junction_size open area that vehicles traverse patch by
// patch; its patches can all be occupied simultaneously.
struct Junction {
  int id = -1;
  int grid_i = -1;  // index of the north-south street
  int grid_j = -1;  // index of the east-west street
  Point origin;     // south-west corner of the extent
  Point center;
  int size = 0;

  std::array<std::int16_t, 4> arm_segment{-1, -1, -1, -1};
  std::array<int, 4> exit_lane{-1, -1, -1, -1};    // first outbound lane patch
  std::array<int, 4> entry_patch{-1, -1, -1, -1};  // junction patch at inbound lane
  std::array<bool, 4> arm_exists{false, false, false, false};

  bool has_exit(Compass arm) const {
    return exit_lane[static_cast<int>(arm)] >= 0;
  }
};

enum class Phase : std::uint8_t { Green, Red };

struct TrafficSignal {
  int id = -1;
  int junction = -1;
  Compass arm = Compass::N;  // controls traffic entering from this arm
  int stop_line = -1;        // junction entry patch of the inbound lane
  int phase_offset = 0;      // steps
};

// North-south arms lead: green iff ((t + offset) mod cycle) < cycle/2.
// East-west arms show the complement, so perpendicular arms are never
// green together.
Phase signal_phase(const TrafficSignal& s, long long t, int cycle_len);

struct MapCounts {
  int streets = 0;
  int segments = 0;  // directed-pair stretches between adjacent junctions
  int junctions = 0;
  int signals = 0;
  int street_patches = 0;    // every non-building patch
  int lane_patches = 0;      // segment lane patches
  int median_patches = 0;
  int junction_patches = 0;
  int capacity = 0;          // vehicle capacity = segment lane patches
};

struct TurnOptions {
  bool tl = false;     // left turn possible
  bool tr = false;     // right turn possible
  bool tb = false;     // backward turn (U-turn), junction patches only
  bool ahead = false;

  friend bool operator==(const TurnOptions&, const TurnOptions&) = default;
};

// Immutable grid city. Generation is a pure function of the parameters;
// identical parameters produce identical maps.
class CityMap {
 public:
  static CityMap generate(const GridMapParams& params);

  int width() const { return width_; }
  int height() const { return height_; }
  const GridMapParams& params() const { return params_; }
  const MapCounts& counts() const { return counts_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<TrafficSignal>& signals() const { return signals_; }

  int index(Point p) const { return p.y * width_ + p.x; }
  Point point(int idx) const { return {idx % width_, idx / width_}; }
  bool in_bounds(Point p) const {
    return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_;
  }

  const PatchInfo& at(int idx) const { return patches_[idx]; }
  const PatchInfo& at(Point p) const { return patches_[index(p)]; }

  bool drivable(int idx) const {
    PatchKind k = patches_[idx].kind;
    return k == PatchKind::Lane || k == PatchKind::Junction;
  }

  // Junction id at patch, -1 when the patch is not part of a junction.
  int junction_at(int idx) const {
    const PatchInfo& p = patches_[idx];
    return p.kind == PatchKind::Junction ? p.junction : -1;
  }

  // Static turn geometry at a drivable patch. Occupancy and signal state do
  // not participate. Throws DomainError off the drivable surface.
  TurnOptions allowed_turns(Point pos, Compass heading) const;

  // Signal whose stop line is this patch, nullptr otherwise.
  const TrafficSignal* signal_at_stop_line(int idx) const;

  Phase phase(const TrafficSignal& s, long long t) const {
    return signal_phase(s, t, params_.cycle_len);
  }

  // Next step direction for a vehicle inside a junction heading for the
  // given exit arm: align with the exit lane, then drive out.
  Compass junction_route_dir(const Junction& j, Point pos, Compass exit_arm) const;

  // Directed out-edges of the drivable-patch graph in N,E,S,W order.
  // Returns the number of neighbours written to out.
  int out_neighbors(int idx, std::array<int, 4>& out) const;
  // Directed in-edges (same order convention).
  int in_neighbors(int idx, std::array<int, 4>& out) const;

  // Inspection export: parameters, counts and the run-length encoded grid.
  nlohmann::json to_json() const;

  // All drivable patch indices in row-major order.
  const std::vector<int>& drivable_patches() const { return drivable_; }
  // Segment lane patches (vehicle spawn locations), row-major order.
  const std::vector<int>& lane_patches() const { return lanes_; }

 private:
  CityMap() = default;

  GridMapParams params_;
  int width_ = 0;
  int height_ = 0;
  std::vector<PatchInfo> patches_;
  std::vector<Junction> junctions_;
  std::vector<TrafficSignal> signals_;
  std::vector<int> signal_by_stop_line_;  // patch idx -> signal id or -1
  std::vector<int> drivable_;
  std::vector<int> lanes_;
  MapCounts counts_;

  void build_edges_and_validate();
};

}  // namespace mtsim
