#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "boxmap/geometry.hpp"

namespace boxmap {

enum class Cell : std::uint8_t { kFree = 0, kOccupied = 1, kUnknown = 2 };

inline constexpr double kDefaultResolution = 0.14;  // meters per cell
inline constexpr double kDefaultGamma = 10.0;       // TSDF truncation, cells

/// Shape and placement of a grid in the world.
struct GridGeometry {
  int width = 0;
  int height = 0;
  double resolution = kDefaultResolution;
  double origin_x = 0.0;  // world meters of the corner of cell (0, 0)
  double origin_y = 0.0;

  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool contains(CellIndex c) const { return contains(c.x, c.y); }
  std::size_t size() const { return static_cast<std::size_t>(width) * height; }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Robot position in world meters.
struct Pose {
  double x = 0.0;
  double y = 0.0;
};

struct LaserConfig {
  double range_max = 9.0;  // meters
  int num_rays = 360;
  double fov_deg = 360.0;

  void validate() const;
};

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  explicit OccupancyGrid(GridGeometry geometry, Cell fill = Cell::kUnknown);
  OccupancyGrid(int width, int height, Cell fill = Cell::kUnknown);

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double resolution() const { return geometry_.resolution; }
  bool contains(int x, int y) const { return geometry_.contains(x, y); }
  bool contains(CellIndex c) const { return geometry_.contains(c); }

  Cell at(int x, int y) const { return cells_[index(x, y)]; }
  Cell at(CellIndex c) const { return at(c.x, c.y); }
  void set(int x, int y, Cell v) { cells_[index(x, y)] = v; }
  void set(CellIndex c, Cell v) { set(c.x, c.y, v); }

  std::span<const Cell> cells() const { return cells_; }
  std::size_t count(Cell v) const;

  CellIndex cell_of(const Pose& pose) const;
  Pose center_of(CellIndex c) const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * geometry_.width + x;
  }

  GridGeometry geometry_;
  std::vector<Cell> cells_;
};

/// Truncated signed distances in cell units; positive in traversable space.
class TsdfGrid {
 public:
  TsdfGrid() = default;
  TsdfGrid(int width, int height, double gamma, double fill = 0.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double gamma() const { return gamma_; }
  std::size_t size() const { return values_.size(); }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  double at(int x, int y) const { return values_[index(x, y)]; }
  void set(int x, int y, double v) { values_[index(x, y)] = v; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const TsdfGrid&, const TsdfGrid&) = default;

 private:
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  double gamma_ = kDefaultGamma;
  std::vector<double> values_;
};

/// Offset between a local crop and the world grid: world = local + offset.
struct LocalFrame {
  int offset_x = 0;
  int offset_y = 0;
  int size = 0;

  CellIndex to_world(CellIndex local) const { return {local.x + offset_x, local.y + offset_y}; }
  CellIndex to_local(CellIndex world) const { return {world.x - offset_x, world.y - offset_y}; }
  Point2 to_world(Point2 local) const { return {local.x + offset_x, local.y + offset_y}; }
  Point2 to_local(Point2 world) const { return {world.x - offset_x, world.y - offset_y}; }
  bool contains_world(CellIndex world) const {
    const CellIndex l = to_local(world);
    return l.x >= 0 && l.y >= 0 && l.x < size && l.y < size;
  }
};

/// Raycasts a laser scan from `pose`. Rays march by supercover traversal so
/// a ray touching a wall corner stops there. World cells that are UNKNOWN are
/// treated as opaque and stay UNKNOWN in the result.
OccupancyGrid simulate_scan(const OccupancyGrid& world, const Pose& pose, const LaserConfig& cfg = {});

/// Same, with the pose given as a cell.
OccupancyGrid simulate_scan(const OccupancyGrid& world, CellIndex cell, const LaserConfig& cfg = {});

/// Two-pass 3-4 chamfer TSDF. Non-occupied cells get +distance to the nearest
/// OCCUPIED cell; occupied cells get 0 on the wall surface (an 8-neighbour is
/// not occupied) and -distance to the nearest surface cell deeper inside.
TsdfGrid chamfer_tsdf(const OccupancyGrid& grid, double gamma = kDefaultGamma);

struct CropResult {
  OccupancyGrid grid;
  LocalFrame frame;
};

LocalFrame crop_frame(CellIndex center, int size);
CropResult crop_local(const OccupancyGrid& grid, CellIndex center, int size = 128);
CropResult crop_local(const OccupancyGrid& grid, const Pose& center, int size = 128);

/// TSDF crop; cells outside the source are filled with -gamma (solid).
TsdfGrid crop_tsdf(const TsdfGrid& tsdf, const LocalFrame& frame);

/// Occupied-dominant cellwise merge.
OccupancyGrid accumulate(const OccupancyGrid& a, const OccupancyGrid& b);

}  // namespace boxmap
