#pragma once

#include <array>
#include <vector>

#include "boxmap/geometry.hpp"
#include "boxmap/grid.hpp"

namespace boxmap {

inline constexpr double kGateThreshold = 0.5;
inline constexpr int kDefaultBudget = 6;

inline bool is_active(double gate) { return gate >= kGateThreshold; }

/// Axis-aligned room box in continuous cell coordinates. Walls sit on the
/// box edges, so cells with x0 < x < x1 and y0 < y < y1 are the interior.
struct RoomBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  double q = 0.0;  // existence gate

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  Point2 centroid() const { return {(x0 + x1) / 2.0, (y0 + y1) / 2.0}; }
  bool contains(Point2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
  bool strictly_contains(Point2 p) const { return p.x > x0 && p.x < x1 && p.y > y0 && p.y < y1; }
  bool active() const { return is_active(q); }

  friend bool operator==(const RoomBox&, const RoomBox&) = default;
};

/// Door as an L1 diamond of apex height size/2 centred on the wall. A door of
/// size s opens the s-1 wall cells with |p - c|_1 < s/2.
struct DoorBox {
  Point2 center;
  double size = 6.0;
  double q = 1.0;
  std::array<int, 2> rooms{0, 1};

  bool active() const { return is_active(q); }

  friend bool operator==(const DoorBox&, const DoorBox&) = default;
};

struct BoxSet {
  std::vector<RoomBox> rooms;  // |rooms| is the query budget M
  std::vector<DoorBox> doors;

  int budget() const { return static_cast<int>(rooms.size()); }
  int active_rooms() const;

  /// Throws InvalidBoxSet when a box or door breaks its invariants.
  void validate() const;

  friend bool operator==(const BoxSet&, const BoxSet&) = default;
};

/// `budget` inactive zero-size boxes.
BoxSet empty_box_set(int budget = kDefaultBudget);

// Parametric TSDFs -----------------------------------------------------------

double relu(double x);

/// Truncated signed distance to the nearer of two walls x0 <= x1 along one axis,
/// written as a min of two ReLU ramps.
double f1d(double x, double x0, double x1, double gamma);

/// min of the two axis distances: an L-infinity style box TSDF.
double box_tsdf(const RoomBox& b, Point2 p, double gamma);

/// Gated max-merge over every room box: max_i(q_i * (f_i(p) + gamma) - gamma).
/// An empty set evaluates to -gamma.
double composite_tsdf(const BoxSet& boxes, Point2 p, double gamma);

/// ReLU(s/2 - |p - c|_1).
double door_diamond(const DoorBox& d, Point2 p);

/// Rooms-only composite sampled on every cell of a width x height grid.
TsdfGrid composite_field(const BoxSet& boxes, int width, int height, double gamma);

// Relations -----------------------------------------------------------------

struct AdjacencyConfig {
  double eps_gap = 3.0;
  double min_overlap = 4.0;
};

using BoolMatrix = std::vector<std::vector<bool>>;

/// Active rooms i, j are adjacent when an edge of i faces the opposite edge of j
/// within eps_gap and the two edges overlap by at least min_overlap.
BoolMatrix room_adjacency(const BoxSet& boxes, const AdjacencyConfig& cfg = {});

double iou(const RoomBox& a, const RoomBox& b);

/// Positive-area intersection.
bool overlaps(const RoomBox& a, const RoomBox& b);

/// Unit vector normal to the wall a door sits in, picked from the edge of its
/// first room nearest the door centre (falls back to the second room).
Point2 door_normal(const DoorBox& d, const BoxSet& boxes);

/// Active room interiors FREE, active room boundaries OCCUPIED except cells
/// carved by active doors, everything else `exterior`.
OccupancyGrid rasterize(const BoxSet& boxes, const GridGeometry& geometry,
                        Cell exterior = Cell::kUnknown);

/// Shifts every box and door by (dx, dy).
BoxSet translated(const BoxSet& boxes, double dx, double dy);

}  // namespace boxmap
