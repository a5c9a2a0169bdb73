#include "mtsim/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <unordered_map>

#include "mtsim/errors.hpp"

namespace mtsim {

TripEfficiency trip_efficiency(const TripRecord& t) {
  if (t.actual_length <= 0 || t.actual_steps <= 0)
    throw DomainError("trip_efficiency: completed trip with zero odometry");
  TripEfficiency e;
  e.eta = static_cast<double>(t.oracle_length) / static_cast<double>(t.actual_length);
  e.tau = std::min(1.0, t.oracle_steps / static_cast<double>(t.actual_steps));
  return e;
}

std::vector<JamCluster> detect_jams(const CityMap& map,
                                    const std::vector<JamProbe>& vehicles,
                                    int window, int min_cluster) {
  std::unordered_map<int, char> jammed;  // patch -> unvisited flag
  for (const JamProbe& v : vehicles)
    if (v.stopped_steps >= window && !v.waiting_at_red) jammed[v.pos] = 0;

  // Scan positions in patch order so cluster ids are deterministic.
  std::vector<int> order;
  order.reserve(jammed.size());
  for (const auto& [pos, _] : jammed) order.push_back(pos);
  std::sort(order.begin(), order.end());

  std::vector<JamCluster> clusters;
  for (int start : order) {
    if (jammed[start]) continue;
    JamCluster c;
    c.min_x = c.min_y = std::max(map.width(), map.height());
    std::deque<int> queue{start};
    jammed[start] = 1;
    while (!queue.empty()) {
      int cur = queue.front();
      queue.pop_front();
      ++c.size;
      Point p = map.point(cur);
      c.min_x = std::min(c.min_x, p.x);
      c.max_x = std::max(c.max_x, p.x);
      c.min_y = std::min(c.min_y, p.y);
      c.max_y = std::max(c.max_y, p.y);
      for (Compass dir : kCompassOrder) {
        Point np = step(p, dir);
        if (!map.in_bounds(np)) continue;
        auto it = jammed.find(map.index(np));
        if (it != jammed.end() && !it->second) {
          it->second = 1;
          queue.push_back(it->first);
        }
      }
    }
    if (c.size >= min_cluster) {
      c.id = static_cast<int>(clusters.size());
      clusters.push_back(c);
    }
  }
  return clusters;
}

void MetricsAggregator::record_trip(const TripRecord& t) {
  TripEfficiency e = trip_efficiency(t);
  ++trips_;
  eta_sum_ += e.eta;
  tau_sum_ += e.tau;
}

void MetricsAggregator::record_prediction(bool refused) {
  ++predictions_;
  if (refused) ++refused_;
}

void MetricsAggregator::record_predictions(long long total, long long refused) {
  predictions_ += total;
  refused_ += refused;
}

void MetricsAggregator::record_reward(double normalised_reward) {
  ++reward_events_;
  reward_sum_ += normalised_reward;
}

void MetricsAggregator::record_rewards(double reward_sum, long long events) {
  reward_events_ += events;
  reward_sum_ += reward_sum;
}

SeriesPoint MetricsAggregator::sample(long long step, int jam_count,
                                      int vehicles) const {
  SeriesPoint p;
  p.step = step;
  if (trips_ > 0) {
    p.eta_mean = eta_sum_ / static_cast<double>(trips_);
    p.tau_mean = tau_sum_ / static_cast<double>(trips_);
  }
  p.nav_error_frac =
      predictions_ > 0 ? static_cast<double>(refused_) / static_cast<double>(predictions_)
                       : 0.0;
  p.mean_reward =
      reward_events_ > 0 ? reward_sum_ / static_cast<double>(reward_events_) : 0.0;
  p.jam_count = jam_count;
  p.vehicles = vehicles;
  return p;
}

namespace {

std::string fixed6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

}  // namespace

std::string to_csv_line(const SeriesPoint& p) {
  std::string line = std::to_string(p.step);
  line += ',';
  if (p.eta_mean) line += fixed6(*p.eta_mean);
  line += ',';
  if (p.tau_mean) line += fixed6(*p.tau_mean);
  line += ',';
  line += fixed6(p.nav_error_frac);
  line += ',';
  line += fixed6(p.mean_reward);
  line += ',';
  line += std::to_string(p.jam_count);
  line += ',';
  line += std::to_string(p.vehicles);
  return line;
}

std::string to_csv_line(long long step, const JamCluster& c) {
  std::string line = std::to_string(step);
  for (int v : {c.id, c.size, c.min_x, c.min_y, c.max_x, c.max_y}) {
    line += ',';
    line += std::to_string(v);
  }
  return line;
}

}  // namespace mtsim
