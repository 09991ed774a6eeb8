#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "boxmap/boxes.hpp"
#include "boxmap/grid.hpp"

namespace boxmap {

/// Annotated world. Room boxes that overlap belong to one multi-box room and
/// share a group id; rasterize(annotations, exterior OCCUPIED) == world.
struct Floorplan {
  OccupancyGrid world;
  BoxSet annotations;
  std::vector<int> groups;  // one entry per annotation room box
  std::uint64_t seed = 0;

  int room_count() const;  // number of distinct groups
};

struct FloorgenConfig {
  int rooms = 5;
  int size = 256;
  int min_side = 20;
  double door_size = 6.0;  // wall-centre span; opens door_size - 1 cells
  double p_l_shape = 0.3;
  double p_extra_door = 0.2;
  int door_end_clearance = 4;
  int max_retries = 50;
};

/// Guillotine partition of a centred building rectangle into `cfg.rooms`
/// rooms with a door spanning tree. Throws GenerationFailed after
/// `cfg.max_retries` rejected attempts.
Floorplan generate(std::uint64_t seed, const FloorgenConfig& cfg = {});
Floorplan generate(std::uint64_t seed, int rooms, int size = 256);

/// True when every FREE cell is 4-connected to every other FREE cell.
bool free_space_connected(const OccupancyGrid& grid);

/// world.pgm, annotations.json and tsdf.pgm under `dir` (created if needed).
void save_floorplan(const Floorplan& fp, const std::filesystem::path& dir,
                    double gamma = kDefaultGamma);
/// Reads world.pgm and annotations.json; accepts external rasters in the same
/// schema. A missing "groups" entry is recomputed from box overlaps.
Floorplan load_floorplan(const std::filesystem::path& dir);

/// One training-style record: the crop around a pose of the scans accumulated
/// so far, the ground-truth TSDF crop, and the annotations touching the crop in
/// local coordinates.
struct Sample {
  LocalFrame frame;
  OccupancyGrid occupancy;
  TsdfGrid tsdf;
  BoxSet annotations;
};

std::vector<Sample> make_samples(const Floorplan& fp, const std::vector<CellIndex>& poses,
                                 int crop = 128, double gamma = kDefaultGamma,
                                 const LaserConfig& laser = {});

/// make_samples, then writes sample_<k>_occ.pgm, sample_<k>_tsdf.pgm and
/// sample_<k>.json into `dir`.
std::vector<Sample> export_samples(const Floorplan& fp, const std::vector<CellIndex>& poses,
                                   const std::filesystem::path& dir, int crop = 128,
                                   double gamma = kDefaultGamma);

/// Reads back one exported record.
Sample read_sample(const std::filesystem::path& dir, int index);

}  // namespace boxmap
