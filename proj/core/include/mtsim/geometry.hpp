#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace mtsim {

// Compass directions in the fixed N,E,S,W order used for deterministic
// tie-breaking throughout (neighbour scans, BFS, greedy arm choice).
enum class Compass : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

inline constexpr std::array<Compass, 4> kCompassOrder{Compass::N, Compass::E,
                                                      Compass::S, Compass::W};

// Grid axes: x grows east, y grows north. Row 0 is the south edge.
constexpr int dx(Compass c) {
  switch (c) {
    case Compass::E: return 1;
    case Compass::W: return -1;
    default: return 0;
  }
}

constexpr int dy(Compass c) {
  switch (c) {
    case Compass::N: return 1;
    case Compass::S: return -1;
    default: return 0;
  }
}

constexpr Compass left_of(Compass c) {
  return static_cast<Compass>((static_cast<int>(c) + 3) % 4);
}

constexpr Compass right_of(Compass c) {
  return static_cast<Compass>((static_cast<int>(c) + 1) % 4);
}

constexpr Compass opposite(Compass c) {
  return static_cast<Compass>((static_cast<int>(c) + 2) % 4);
}

constexpr bool is_north_south(Compass c) {
  return c == Compass::N || c == Compass::S;
}

constexpr char compass_char(Compass c) {
  switch (c) {
    case Compass::N: return 'N';
    case Compass::E: return 'E';
    case Compass::S: return 'S';
    default: return 'W';
  }
}

constexpr std::string_view compass_name(Compass c) {
  switch (c) {
    case Compass::N: return "N";
    case Compass::E: return "E";
    case Compass::S: return "S";
    default: return "W";
  }
}

struct Point {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(const Point&, const Point&) = default;
};

constexpr Point step(Point p, Compass c) { return {p.x + dx(c), p.y + dy(c)}; }

}  // namespace mtsim
