#pragma once

#include <filesystem>
#include <iosfwd>

#include "boxmap/grid.hpp"

namespace boxmap {

// Binary PGM (P5) encodings.
//   occupancy: 8-bit, 0 = OCCUPIED, 255 = FREE, 128 = UNKNOWN
//   tsdf:      16-bit big-endian, [-gamma, +gamma] mapped affinely onto [0, 65535]
// Geometry travels in header comments ("# resolution 0.14", "# gamma 10").

inline constexpr std::uint8_t kPgmOccupied = 0;
inline constexpr std::uint8_t kPgmFree = 255;
inline constexpr std::uint8_t kPgmUnknown = 128;

std::uint16_t encode_tsdf_value(double v, double gamma);
double decode_tsdf_value(std::uint16_t pixel, double gamma);

void write_pgm(std::ostream& os, const OccupancyGrid& grid);
void write_pgm(std::ostream& os, const TsdfGrid& tsdf);
void write_pgm(const std::filesystem::path& path, const OccupancyGrid& grid);
void write_pgm(const std::filesystem::path& path, const TsdfGrid& tsdf);

OccupancyGrid read_occupancy_pgm(std::istream& is);
TsdfGrid read_tsdf_pgm(std::istream& is);
OccupancyGrid read_occupancy_pgm(const std::filesystem::path& path);
TsdfGrid read_tsdf_pgm(const std::filesystem::path& path);

}  // namespace boxmap
