#include "boxmap/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "boxmap/error.hpp"

namespace boxmap {

std::uint16_t encode_tsdf_value(double v, double gamma) {
  const double t = (std::clamp(v, -gamma, gamma) + gamma) / (2.0 * gamma);
  return static_cast<std::uint16_t>(std::lround(t * 65535.0));
}

double decode_tsdf_value(std::uint16_t pixel, double gamma) {
  return pixel / 65535.0 * 2.0 * gamma - gamma;
}

namespace {

struct PgmHeader {
  int width = 0;
  int height = 0;
  int maxval = 0;
  std::map<std::string, std::string> comments;
};

void write_header(std::ostream& os, int w, int h, int maxval,
                  const std::vector<std::string>& comments) {
  os << "P5\n";
  for (const auto& c : comments) os << "# " << c << '\n';
  os << w << ' ' << h << '\n' << maxval << '\n';
}

// Reads the next header token, collecting "# key value" comments on the way.
std::string next_token(std::istream& is, PgmHeader& header) {
  std::string token;
  while (true) {
    const int c = is.peek();
    if (c == EOF) break;
    if (c == '#') {
      std::string line;
      std::getline(is, line);
      std::istringstream ls(line.substr(1));
      std::string key;
      if (ls >> key) {
        std::string rest;
        std::getline(ls, rest);
        const auto first = rest.find_first_not_of(' ');
        header.comments[key] = first == std::string::npos ? "" : rest.substr(first);
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      is.get();
      continue;
    }
    token.push_back(static_cast<char>(is.get()));
  }
  return token;
}

int parse_int(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw MalformedHeader(std::string("bad ") + what + ": " + s);
    return v;
  } catch (const std::logic_error&) {
    throw MalformedHeader(std::string("bad ") + what + ": '" + s + "'");
  }
}

PgmHeader read_header(std::istream& is) {
  PgmHeader header;
  if (next_token(is, header) != "P5") throw MalformedHeader("missing P5 magic");
  header.width = parse_int(next_token(is, header), "width");
  header.height = parse_int(next_token(is, header), "height");
  header.maxval = parse_int(next_token(is, header), "maxval");
  if (header.width <= 0 || header.height <= 0) throw MalformedHeader("non-positive dimensions");
  if (header.maxval <= 0 || header.maxval > 65535) throw MalformedHeader("maxval out of range");
  if (!std::isspace(is.get())) throw MalformedHeader("missing separator before raster");
  return header;
}

double comment_double(const PgmHeader& h, const std::string& key, double fallback) {
  const auto it = h.comments.find(key);
  if (it == h.comments.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::logic_error&) {
    throw MalformedHeader("bad '" + key + "' comment: " + it->second);
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_pgm(std::ostream& os, const OccupancyGrid& grid) {
  const GridGeometry& g = grid.geometry();
  write_header(os, g.width, g.height, 255,
               {"boxmap occupancy", "resolution " + format_double(g.resolution),
                "origin " + format_double(g.origin_x) + " " + format_double(g.origin_y)});
  std::vector<char> raster(g.size());
  std::size_t i = 0;
  for (Cell c : grid.cells()) {
    std::uint8_t px = kPgmUnknown;
    if (c == Cell::kFree) px = kPgmFree;
    if (c == Cell::kOccupied) px = kPgmOccupied;
    raster[i++] = static_cast<char>(px);
  }
  os.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

void write_pgm(std::ostream& os, const TsdfGrid& tsdf) {
  write_header(os, tsdf.width(), tsdf.height(), 65535,
               {"boxmap tsdf", "gamma " + format_double(tsdf.gamma())});
  std::vector<char> raster(tsdf.size() * 2);
  std::size_t i = 0;
  for (double v : tsdf.values()) {
    const std::uint16_t px = encode_tsdf_value(v, tsdf.gamma());
    raster[i++] = static_cast<char>(px >> 8);
    raster[i++] = static_cast<char>(px & 0xff);
  }
  os.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

OccupancyGrid read_occupancy_pgm(std::istream& is) {
  const PgmHeader h = read_header(is);
  if (h.maxval != 255) throw UnknownEncoding("occupancy PGM must be 8-bit (maxval 255)");
  GridGeometry geo{h.width, h.height};
  geo.resolution = comment_double(h, "resolution", kDefaultResolution);
  if (const auto it = h.comments.find("origin"); it != h.comments.end()) {
    std::istringstream os(it->second);
    if (!(os >> geo.origin_x >> geo.origin_y)) throw MalformedHeader("bad origin comment");
  }
  std::vector<char> raster(geo.size());
  if (!is.read(raster.data(), static_cast<std::streamsize>(raster.size()))) {
    throw MalformedHeader("truncated raster");
  }
  OccupancyGrid grid(geo);
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      const auto px = static_cast<std::uint8_t>(raster[static_cast<std::size_t>(y) * h.width + x]);
      switch (px) {
        case kPgmOccupied: grid.set(x, y, Cell::kOccupied); break;
        case kPgmFree: grid.set(x, y, Cell::kFree); break;
        case kPgmUnknown: grid.set(x, y, Cell::kUnknown); break;
        default:
          throw UnknownEncoding("pixel value " + std::to_string(px) + " at (" +
                                std::to_string(x) + ", " + std::to_string(y) + ")");
      }
    }
  }
  return grid;
}

TsdfGrid read_tsdf_pgm(std::istream& is) {
  const PgmHeader h = read_header(is);
  if (h.maxval != 65535) throw UnknownEncoding("TSDF PGM must be 16-bit (maxval 65535)");
  if (!h.comments.contains("gamma")) throw MalformedHeader("TSDF PGM lacks a gamma comment");
  const double gamma = comment_double(h, "gamma", kDefaultGamma);
  std::vector<char> raster(static_cast<std::size_t>(h.width) * h.height * 2);
  if (!is.read(raster.data(), static_cast<std::streamsize>(raster.size()))) {
    throw MalformedHeader("truncated raster");
  }
  TsdfGrid tsdf(h.width, h.height, gamma);
  std::size_t i = 0;
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      const auto hi = static_cast<std::uint8_t>(raster[i++]);
      const auto lo = static_cast<std::uint8_t>(raster[i++]);
      tsdf.set(x, y, decode_tsdf_value(static_cast<std::uint16_t>(hi << 8 | lo), gamma));
    }
  }
  return tsdf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  return is;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const OccupancyGrid& grid) {
  auto os = open_out(path);
  write_pgm(os, grid);
}

void write_pgm(const std::filesystem::path& path, const TsdfGrid& tsdf) {
  auto os = open_out(path);
  write_pgm(os, tsdf);
}

OccupancyGrid read_occupancy_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_occupancy_pgm(is);
}

TsdfGrid read_tsdf_pgm(const std::filesystem::path& path) {
  auto is = open_in(path);
  return read_tsdf_pgm(is);
}

}  // namespace boxmap
