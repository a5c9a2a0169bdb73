#pragma once

#include <vector>

#include "mtsim/grid_map.hpp"

namespace mtsim {

struct ShortestPath {
  std::vector<int> path;  // patch indices from a to b inclusive
  int length = 0;         // edges, so path.size() - 1
};

// Breadth-first shortest path over the directed drivable graph. Unit edge
// weights; ties broken by the fixed N,E,S,W neighbour order, so the result
// is deterministic. Throws DomainError for non-drivable endpoints and
// RuntimeFault when no path exists (impossible on validated maps).
ShortestPath shortest_path(const CityMap& map, int a, int b);

// Distance (in patches) from every drivable patch to one destination,
// computed by a reverse breadth-first sweep. Backs the destination-distance
// sensor; one field per destination, cacheable for a whole trip.
class DistanceField {
 public:
  static DistanceField to_destination(const CityMap& map, int dest);

  int destination() const { return dest_; }
  // Distance from idx to the destination, -1 if unreachable.
  int at(int idx) const { return dist_[idx]; }

 private:
  int dest_ = -1;
  std::vector<int> dist_;
};

}  // namespace mtsim
