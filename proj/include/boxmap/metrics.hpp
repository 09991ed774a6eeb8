#pragma once

#include <cstddef>

#include "boxmap/explore.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/grid.hpp"

namespace boxmap {

struct SsimConfig {
  int window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 0.0;  // 0 means 2 * gamma of the first grid
};

/// Mean SSIM over all window positions (stride 1, uniform weights,
/// population statistics). Throws GeometryMismatch on differing sizes.
double ssim(const TsdfGrid& a, const TsdfGrid& b, const SsimConfig& cfg = {});

/// Inclusive cell rectangle.
struct Region {
  int x0 = 0;
  int y0 = 0;
  int x1 = -1;
  int y1 = -1;

  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
};

/// Bounding box of the FREE cells of `truth`, grown by `margin` and clipped.
Region building_region(const OccupancyGrid& truth, int margin = 10);

TsdfGrid crop_region(const TsdfGrid& t, const Region& r);

/// Fraction of non-exterior truth cells whose FREE/OCCUPIED class differs in
/// `final_map`; UNKNOWN counts as a mismatch. Exterior cells are UNKNOWN in
/// the truth or OCCUPIED with no FREE 8-neighbour.
double hamming(const OccupancyGrid& final_map, const OccupancyGrid& truth);

/// Serialized size of the box map (compact JSON of boxes and graph).
std::size_t map_memory(const BoxSet& boxes, const TopoGraph& topo);

/// Grid payload size, one byte per cell.
std::size_t map_memory(const OccupancyGrid& grid);

struct EpisodeMetrics {
  int steps = 0;
  int updates = 0;
  std::size_t memory_bytes = 0;
  double ssim = 0.0;
  double hamming = 0.0;
};

/// Box strategies are scored on rasterize(final boxes) with a solid exterior;
/// grid strategies on the accumulated map, UNKNOWN read as OCCUPIED for SSIM.
EpisodeMetrics evaluate(const EpisodeResult& r, const Floorplan& fp, double gamma = kDefaultGamma);

}  // namespace boxmap
