#include "boxmap/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "boxmap/error.hpp"

namespace boxmap {

int BoxSet::active_rooms() const {
  return static_cast<int>(std::count_if(rooms.begin(), rooms.end(),
                                        [](const RoomBox& r) { return r.active(); }));
}

void BoxSet::validate() const {
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    const RoomBox& r = rooms[i];
    const std::string tag = "room " + std::to_string(i);
    if (!std::isfinite(r.x0) || !std::isfinite(r.y0) || !std::isfinite(r.x1) ||
        !std::isfinite(r.y1) || !std::isfinite(r.q)) {
      throw InvalidBoxSet(tag + " has non-finite parameters");
    }
    if (r.x0 > r.x1 || r.y0 > r.y1) throw InvalidBoxSet(tag + " has inverted corners");
    if (r.q < 0.0 || r.q > 1.0) throw InvalidBoxSet(tag + " gate outside [0, 1]");
  }
  for (std::size_t i = 0; i < doors.size(); ++i) {
    const DoorBox& d = doors[i];
    const std::string tag = "door " + std::to_string(i);
    if (!(d.size > 0.0)) throw InvalidBoxSet(tag + " size must be positive");
    if (d.q < 0.0 || d.q > 1.0) throw InvalidBoxSet(tag + " gate outside [0, 1]");
    for (int r : d.rooms) {
      if (r < 0 || r >= budget()) throw InvalidBoxSet(tag + " references a missing room");
    }
    if (d.rooms[0] == d.rooms[1]) throw InvalidBoxSet(tag + " joins a room to itself");
  }
}

BoxSet empty_box_set(int budget) {
  BoxSet set;
  set.rooms.assign(static_cast<std::size_t>(budget), RoomBox{});
  return set;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

double f1d(double x, double x0, double x1, double gamma) {
  const double rising = relu(x - x0 + gamma) - relu(x - x0 - gamma) - gamma;
  const double falling = -relu(x - x1 + gamma) + relu(x - x1 - gamma) + gamma;
  return std::min(rising, falling);
}

double box_tsdf(const RoomBox& b, Point2 p, double gamma) {
  return std::min(f1d(p.x, b.x0, b.x1, gamma), f1d(p.y, b.y0, b.y1, gamma));
}

double composite_tsdf(const BoxSet& boxes, Point2 p, double gamma) {
  double best = -gamma;
  bool first = true;
  for (const RoomBox& b : boxes.rooms) {
    const double g = b.q * (box_tsdf(b, p, gamma) + gamma) - gamma;
    if (first || g > best) best = g;
    first = false;
  }
  return best;
}

double door_diamond(const DoorBox& d, Point2 p) {
  return relu(d.size / 2.0 - (std::abs(p.x - d.center.x) + std::abs(p.y - d.center.y)));
}

TsdfGrid composite_field(const BoxSet& boxes, int width, int height, double gamma) {
  TsdfGrid out(width, height, gamma);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out.set(x, y, composite_tsdf(boxes, {double(x), double(y)}, gamma));
  }
  return out;
}

namespace {

double span_overlap(double a0, double a1, double b0, double b1) {
  return std::min(a1, b1) - std::max(a0, b0);
}

bool edges_face(const RoomBox& a, const RoomBox& b, const AdjacencyConfig& cfg) {
  const double ox = span_overlap(a.x0, a.x1, b.x0, b.x1);
  const double oy = span_overlap(a.y0, a.y1, b.y0, b.y1);
  // a.S vs b.N, a.N vs b.S
  if (ox >= cfg.min_overlap &&
      (std::abs(a.y1 - b.y0) <= cfg.eps_gap || std::abs(a.y0 - b.y1) <= cfg.eps_gap)) {
    return true;
  }
  // a.E vs b.W, a.W vs b.E
  return oy >= cfg.min_overlap &&
         (std::abs(a.x1 - b.x0) <= cfg.eps_gap || std::abs(a.x0 - b.x1) <= cfg.eps_gap);
}

}  // namespace

BoolMatrix room_adjacency(const BoxSet& boxes, const AdjacencyConfig& cfg) {
  const std::size_t m = boxes.rooms.size();
  BoolMatrix adj(m, std::vector<bool>(m, false));
  for (std::size_t i = 0; i < m; ++i) {
    if (!boxes.rooms[i].active()) continue;
    for (std::size_t j = i + 1; j < m; ++j) {
      if (!boxes.rooms[j].active()) continue;
      if (edges_face(boxes.rooms[i], boxes.rooms[j], cfg)) adj[i][j] = adj[j][i] = true;
    }
  }
  return adj;
}

double iou(const RoomBox& a, const RoomBox& b) {
  const double w = span_overlap(a.x0, a.x1, b.x0, b.x1);
  const double h = span_overlap(a.y0, a.y1, b.y0, b.y1);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  const double inter = w * h;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

bool overlaps(const RoomBox& a, const RoomBox& b) {
  return span_overlap(a.x0, a.x1, b.x0, b.x1) > 0.0 && span_overlap(a.y0, a.y1, b.y0, b.y1) > 0.0;
}

namespace {

// Distance from p to the nearest edge of b; sets `vertical` if that edge is a
// west/east wall.
double nearest_edge(const RoomBox& b, Point2 p, bool& vertical) {
  const double dw = std::abs(p.x - b.x0);
  const double de = std::abs(p.x - b.x1);
  const double dn = std::abs(p.y - b.y0);
  const double ds = std::abs(p.y - b.y1);
  const double dv = std::min(dw, de);
  const double dh = std::min(dn, ds);
  vertical = dv <= dh;
  return std::min(dv, dh);
}

}  // namespace

Point2 door_normal(const DoorBox& d, const BoxSet& boxes) {
  bool vertical = true;
  double best = std::numeric_limits<double>::infinity();
  for (int r : d.rooms) {
    if (r < 0 || r >= boxes.budget()) continue;
    bool v = true;
    const double dist = nearest_edge(boxes.rooms[r], d.center, v);
    if (dist < best) {
      best = dist;
      vertical = v;
    }
  }
  return vertical ? Point2{1.0, 0.0} : Point2{0.0, 1.0};
}

OccupancyGrid rasterize(const BoxSet& boxes, const GridGeometry& geometry, Cell exterior) {
  OccupancyGrid grid(geometry, exterior);
  std::vector<const RoomBox*> active;
  for (const RoomBox& r : boxes.rooms) {
    if (r.active()) active.push_back(&r);
  }
  for (int y = 0; y < geometry.height; ++y) {
    for (int x = 0; x < geometry.width; ++x) {
      const Point2 p{double(x), double(y)};
      bool inside = false;
      bool boundary = false;
      for (const RoomBox* r : active) {
        if (r->strictly_contains(p)) {
          inside = true;
          break;
        }
        if (r->contains(p)) boundary = true;
      }
      if (inside) {
        grid.set(x, y, Cell::kFree);
      } else if (boundary) {
        bool carved = false;
        for (const DoorBox& d : boxes.doors) {
          if (d.active() && door_diamond(d, p) > 0.0) {
            carved = true;
            break;
          }
        }
        grid.set(x, y, carved ? Cell::kFree : Cell::kOccupied);
      }
    }
  }
  return grid;
}

BoxSet translated(const BoxSet& boxes, double dx, double dy) {
  BoxSet out = boxes;
  for (RoomBox& r : out.rooms) {
    r.x0 += dx;
    r.x1 += dx;
    r.y0 += dy;
    r.y1 += dy;
  }
  for (DoorBox& d : out.doors) d.center = d.center + Point2{dx, dy};
  return out;
}

}  // namespace boxmap
