#include <cstdio>

#include "CLI11.hpp"

#include "boxmap/floorgen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate an annotated floorplan (world.pgm, tsdf.pgm, annotations.json)"};
  std::uint64_t seed = 0;
  int rooms = 5;
  int size = 256;
  std::string out = "floorplan";
  app.add_option("--seed", seed, "Seed");
  app.add_option("--rooms", rooms, "Rooms");
  app.add_option("--size", size, "World side in cells");
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);
  try {
    boxmap::FloorgenConfig cfg;
    cfg.rooms = rooms;
    cfg.size = size;
    const boxmap::Floorplan fp = boxmap::generate(seed, cfg);
    boxmap::save_floorplan(fp, out);
    std::printf("%d rooms, %zu doors, wrote %s\n", fp.room_count(), fp.annotations.doors.size(), out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
