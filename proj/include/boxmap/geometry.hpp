#pragma once

#include <cmath>
#include <compare>

namespace boxmap {

/// Continuous point in cell coordinates: cell (i, j) has its center at (i, j).
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }

inline double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Integer grid index; x is the column, y the row (y grows "south").
struct CellIndex {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

inline Point2 to_point(CellIndex c) {
  return {static_cast<double>(c.x), static_cast<double>(c.y)};
}

inline CellIndex nearest_cell(Point2 p) {
  return {static_cast<int>(std::lround(p.x)), static_cast<int>(std::lround(p.y))};
}

}  // namespace boxmap
