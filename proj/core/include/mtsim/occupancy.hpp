#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "mtsim/grid_map.hpp"

namespace mtsim {

// Patch ownership: at most one vehicle per patch. Claims are atomic within
// the sequential commit phase of a step (first come, first served).
class OccupancyGrid {
 public:
  explicit OccupancyGrid(const CityMap& map)
      : owner_(static_cast<std::size_t>(map.width()) * map.height(), -1) {}

  int owner(int idx) const { return owner_[idx]; }
  bool occupied(int idx) const { return owner_[idx] >= 0; }

  bool claim(int idx, int vehicle) {
    if (owner_[idx] >= 0) return false;
    owner_[idx] = vehicle;
    return true;
  }

  void release(int idx, int vehicle) {
    assert(owner_[idx] == vehicle);
    (void)vehicle;
    owner_[idx] = -1;
  }

  void place(int idx, int vehicle) {
    assert(owner_[idx] < 0);
    owner_[idx] = vehicle;
  }

 private:
  std::vector<std::int32_t> owner_;
};

// Read-only view of the world at the start of a step: positions plus the
// per-vehicle speeds needed to tell moving neighbours from stopped ones.
struct OccupancyView {
  const OccupancyGrid* grid = nullptr;
  const std::vector<int>* speeds = nullptr;  // centipatches/step, by vehicle id

  bool occupied(int idx) const { return grid->occupied(idx); }
  bool stopped_vehicle_at(int idx) const {
    int id = grid->owner(idx);
    return id >= 0 && (*speeds)[id] == 0;
  }
};

}  // namespace mtsim
