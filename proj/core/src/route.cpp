#include "mtsim/route.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace mtsim {

ShortestPath shortest_path(const CityMap& map, int a, int b) {
  if (!map.drivable(a) || !map.drivable(b))
    throw DomainError("shortest_path: endpoints must be drivable patches");

  ShortestPath result;
  if (a == b) {
    result.path = {a};
    result.length = 0;
    return result;
  }

  std::vector<int> parent(static_cast<std::size_t>(map.width()) * map.height(), -2);
  std::deque<int> queue{a};
  parent[a] = -1;
  std::array<int, 4> nbrs{};
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    if (cur == b) break;
    int n = map.out_neighbors(cur, nbrs);
    for (int k = 0; k < n; ++k) {
      if (parent[nbrs[k]] == -2) {
        parent[nbrs[k]] = cur;
        queue.push_back(nbrs[k]);
      }
    }
  }
  if (parent[b] == -2)
    throw RuntimeFault("shortest_path: no path from patch " + std::to_string(a) +
                       " to " + std::to_string(b) + " (map validation failure)");

  for (int cur = b; cur != -1; cur = parent[cur]) result.path.push_back(cur);
  std::reverse(result.path.begin(), result.path.end());
  result.length = static_cast<int>(result.path.size()) - 1;
  return result;
}

DistanceField DistanceField::to_destination(const CityMap& map, int dest) {
  if (!map.drivable(dest))
    throw DomainError("DistanceField: destination must be a drivable patch");

  DistanceField field;
  field.dest_ = dest;
  field.dist_.assign(static_cast<std::size_t>(map.width()) * map.height(), -1);
  field.dist_[dest] = 0;
  std::deque<int> queue{dest};
  std::array<int, 4> nbrs{};
  while (!queue.empty()) {
    int cur = queue.front();
    queue.pop_front();
    int n = map.in_neighbors(cur, nbrs);
    for (int k = 0; k < n; ++k) {
      if (field.dist_[nbrs[k]] < 0) {
        field.dist_[nbrs[k]] = field.dist_[cur] + 1;
        queue.push_back(nbrs[k]);
      }
    }
  }
  return field;
}

}  // namespace mtsim
