#include "boxmap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "boxmap/error.hpp"

namespace boxmap {

void LaserConfig::validate() const {
  if (!(range_max > 0.0)) throw Error("LaserConfig: range_max must be positive");
  if (num_rays < 4) throw Error("LaserConfig: num_rays must be >= 4");
  if (!(fov_deg > 0.0) || fov_deg > 360.0) throw Error("LaserConfig: fov must be in (0, 360]");
}

OccupancyGrid::OccupancyGrid(GridGeometry geometry, Cell fill) : geometry_(geometry) {
  if (geometry_.width <= 0 || geometry_.height <= 0) {
    throw Error("OccupancyGrid: width and height must be positive");
  }
  if (!(geometry_.resolution > 0.0)) throw Error("OccupancyGrid: resolution must be positive");
  cells_.assign(geometry_.size(), fill);
}

OccupancyGrid::OccupancyGrid(int width, int height, Cell fill)
    : OccupancyGrid(GridGeometry{width, height}, fill) {}

std::size_t OccupancyGrid::count(Cell v) const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), v));
}

CellIndex OccupancyGrid::cell_of(const Pose& pose) const {
  return {static_cast<int>(std::floor((pose.x - geometry_.origin_x) / geometry_.resolution)),
          static_cast<int>(std::floor((pose.y - geometry_.origin_y) / geometry_.resolution))};
}

Pose OccupancyGrid::center_of(CellIndex c) const {
  return {geometry_.origin_x + (c.x + 0.5) * geometry_.resolution,
          geometry_.origin_y + (c.y + 0.5) * geometry_.resolution};
}

TsdfGrid::TsdfGrid(int width, int height, double gamma, double fill)
    : width_(width), height_(height), gamma_(gamma) {
  if (width <= 0 || height <= 0) throw Error("TsdfGrid: width and height must be positive");
  if (!(gamma > 0.0)) throw Error("TsdfGrid: gamma must be positive");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

// ---------------------------------------------------------------------------
// Laser simulation

namespace {

enum class RayStep { kContinue, kStop };

struct RayMarcher {
  const OccupancyGrid& world;
  OccupancyGrid& out;

  // Marks one touched cell; returns kStop if the ray is blocked there.
  RayStep touch(int x, int y) {
    if (!world.contains(x, y)) return RayStep::kStop;
    switch (world.at(x, y)) {
      case Cell::kOccupied:
        out.set(x, y, Cell::kOccupied);
        return RayStep::kStop;
      case Cell::kUnknown:
        return RayStep::kStop;
      case Cell::kFree:
        out.set(x, y, Cell::kFree);
        return RayStep::kContinue;
    }
    return RayStep::kStop;
  }

  void cast(CellIndex start, double angle, double range_cells) {
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr double kTie = 1e-12;
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    const double sx0 = start.x + 0.5;
    const double sy0 = start.y + 0.5;
    int x = start.x;
    int y = start.y;
    const int step_x = dx > 0 ? 1 : -1;
    const int step_y = dy > 0 ? 1 : -1;
    const bool moves_x = std::abs(dx) > 1e-15;
    const bool moves_y = std::abs(dy) > 1e-15;
    double t_max_x = moves_x ? (dx > 0 ? (x + 1 - sx0) / dx : (sx0 - x) / -dx) : kInf;
    double t_max_y = moves_y ? (dy > 0 ? (y + 1 - sy0) / dy : (sy0 - y) / -dy) : kInf;
    const double t_delta_x = moves_x ? 1.0 / std::abs(dx) : kInf;
    const double t_delta_y = moves_y ? 1.0 / std::abs(dy) : kInf;

    while (true) {
      if (t_max_x < t_max_y - kTie) {
        if (t_max_x > range_cells) return;
        x += step_x;
        t_max_x += t_delta_x;
        if (touch(x, y) == RayStep::kStop) return;
      } else if (t_max_y < t_max_x - kTie) {
        if (t_max_y > range_cells) return;
        y += step_y;
        t_max_y += t_delta_y;
        if (touch(x, y) == RayStep::kStop) return;
      } else {
        // Passing through a cell vertex: both side cells are touched.
        if (t_max_x > range_cells) return;
        const bool side_a = touch(x + step_x, y) == RayStep::kStop;
        const bool side_b = touch(x, y + step_y) == RayStep::kStop;
        if (side_a || side_b) return;
        x += step_x;
        y += step_y;
        t_max_x += t_delta_x;
        t_max_y += t_delta_y;
        if (touch(x, y) == RayStep::kStop) return;
      }
    }
  }
};

}  // namespace

OccupancyGrid simulate_scan(const OccupancyGrid& world, CellIndex cell, const LaserConfig& cfg) {
  cfg.validate();
  if (!world.contains(cell)) {
    throw PoseOutOfBounds("cell (" + std::to_string(cell.x) + ", " + std::to_string(cell.y) +
                          ") outside the world");
  }
  if (world.at(cell) == Cell::kOccupied) {
    throw PoseInObstacle("cell (" + std::to_string(cell.x) + ", " + std::to_string(cell.y) +
                         ") is occupied");
  }
  OccupancyGrid out(world.geometry(), Cell::kUnknown);
  if (world.at(cell) == Cell::kFree) out.set(cell, Cell::kFree);
  RayMarcher marcher{world, out};
  const double range_cells = cfg.range_max / world.resolution();
  const double fov = cfg.fov_deg * std::numbers::pi / 180.0;
  const double start_angle = -fov / 2.0;
  for (int k = 0; k < cfg.num_rays; ++k) {
    // Half-step offset keeps rays off exact cell diagonals.
    const double angle = start_angle + (k + 0.5) * fov / cfg.num_rays;
    marcher.cast(cell, angle, range_cells);
  }
  return out;
}

OccupancyGrid simulate_scan(const OccupancyGrid& world, const Pose& pose, const LaserConfig& cfg) {
  return simulate_scan(world, world.cell_of(pose), cfg);
}

// ---------------------------------------------------------------------------
// Chamfer transform

namespace {

constexpr int kChamferInf = std::numeric_limits<int>::max() / 4;

// 3-4 weighted distance to the nearest seed cell, two raster passes.
std::vector<int> chamfer_34(int w, int h, const std::vector<bool>& seed) {
  std::vector<int> d(static_cast<std::size_t>(w) * h, kChamferInf);
  auto at = [&](int x, int y) -> int& { return d[static_cast<std::size_t>(y) * w + x]; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seed[static_cast<std::size_t>(y) * w + x]) at(x, y) = 0;
    }
  }
  auto relax = [&](int x, int y, int nx, int ny, int weight) {
    if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
    at(x, y) = std::min(at(x, y), at(nx, ny) + weight);
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      relax(x, y, x - 1, y, 3);
      relax(x, y, x - 1, y - 1, 4);
      relax(x, y, x, y - 1, 3);
      relax(x, y, x + 1, y - 1, 4);
    }
  }
  for (int y = h - 1; y >= 0; --y) {
    for (int x = w - 1; x >= 0; --x) {
      relax(x, y, x + 1, y, 3);
      relax(x, y, x + 1, y + 1, 4);
      relax(x, y, x, y + 1, 3);
      relax(x, y, x - 1, y + 1, 4);
    }
  }
  return d;
}

}  // namespace

TsdfGrid chamfer_tsdf(const OccupancyGrid& grid, double gamma) {
  const int w = grid.width();
  const int h = grid.height();
  std::vector<bool> occupied(grid.geometry().size());
  std::vector<bool> surface(grid.geometry().size());
  bool any_wall = false;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (grid.at(x, y) != Cell::kOccupied) continue;
      any_wall = true;
      occupied[static_cast<std::size_t>(y) * w + x] = true;
      bool on_surface = false;
      for (int dy = -1; dy <= 1 && !on_surface; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx || dy) && grid.contains(x + dx, y + dy) &&
              grid.at(x + dx, y + dy) != Cell::kOccupied) {
            on_surface = true;
            break;
          }
        }
      }
      surface[static_cast<std::size_t>(y) * w + x] = on_surface;
    }
  }
  if (!any_wall) throw NoWalls("grid has no occupied cells");

  const std::vector<int> outside = chamfer_34(w, h, occupied);
  const std::vector<int> inside = chamfer_34(w, h, surface);
  TsdfGrid out(w, h, gamma);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      double v;
      if (!occupied[i]) {
        v = outside[i] / 3.0;
      } else if (inside[i] >= kChamferInf) {
        v = -gamma;
      } else {
        v = -inside[i] / 3.0;
      }
      out.set(x, y, std::clamp(v, -gamma, gamma));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cropping and merging

LocalFrame crop_frame(CellIndex center, int size) {
  if (size <= 0 || size % 2 != 0) throw Error("crop size must be positive and even");
  return {center.x - size / 2, center.y - size / 2, size};
}

CropResult crop_local(const OccupancyGrid& grid, CellIndex center, int size) {
  const LocalFrame frame = crop_frame(center, size);
  GridGeometry geo = grid.geometry();
  geo.width = size;
  geo.height = size;
  geo.origin_x += frame.offset_x * geo.resolution;
  geo.origin_y += frame.offset_y * geo.resolution;
  OccupancyGrid out(geo, Cell::kUnknown);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const CellIndex w = frame.to_world(CellIndex{x, y});
      if (grid.contains(w)) out.set(x, y, grid.at(w));
    }
  }
  return {std::move(out), frame};
}

CropResult crop_local(const OccupancyGrid& grid, const Pose& center, int size) {
  return crop_local(grid, grid.cell_of(center), size);
}

TsdfGrid crop_tsdf(const TsdfGrid& tsdf, const LocalFrame& frame) {
  TsdfGrid out(frame.size, frame.size, tsdf.gamma(), -tsdf.gamma());
  for (int y = 0; y < frame.size; ++y) {
    for (int x = 0; x < frame.size; ++x) {
      const CellIndex w = frame.to_world(CellIndex{x, y});
      if (tsdf.contains(w.x, w.y)) out.set(x, y, tsdf.at(w.x, w.y));
    }
  }
  return out;
}

OccupancyGrid accumulate(const OccupancyGrid& a, const OccupancyGrid& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw GeometryMismatch("accumulate: " + std::to_string(a.width()) + "x" +
                           std::to_string(a.height()) + " vs " + std::to_string(b.width()) +
                           "x" + std::to_string(b.height()));
  }
  OccupancyGrid out(a.geometry(), Cell::kUnknown);
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      const Cell ca = a.at(x, y);
      const Cell cb = b.at(x, y);
      if (ca == Cell::kOccupied || cb == Cell::kOccupied) {
        out.set(x, y, Cell::kOccupied);
      } else if (ca == Cell::kFree || cb == Cell::kFree) {
        out.set(x, y, Cell::kFree);
      }
    }
  }
  return out;
}

}  // namespace boxmap
