#include <filesystem>

#include "boxmap/error.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/pgm.hpp"
#include "doctest.h"

using namespace boxmap;

TEST_CASE("single-room plan is a hollow rectangle without doors") {
  const Floorplan fp = generate(3, 1, 128);
  REQUIRE(fp.annotations.rooms.size() == 1);
  CHECK(fp.annotations.doors.empty());
  const RoomBox& r = fp.annotations.rooms[0];
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      const bool interior = x > r.x0 && x < r.x1 && y > r.y0 && y < r.y1;
      CHECK((fp.world.at(x, y) == Cell::kFree) == interior);
    }
  }
}

TEST_CASE("generated plans satisfy their invariants") {
  int l_shapes = 0;
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const Floorplan fp = generate(seed);
    CAPTURE(seed);
    CHECK(fp.room_count() == 5);
    CHECK(rasterize(fp.annotations, fp.world.geometry(), Cell::kOccupied) == fp.world);
    CHECK(free_space_connected(fp.world));
    CHECK(int(fp.annotations.doors.size()) >= fp.room_count() - 1);
    CHECK_NOTHROW(fp.annotations.validate());
    if (fp.annotations.rooms.size() == 6) ++l_shapes;
    for (std::size_t i = 0; i < fp.annotations.rooms.size(); ++i) {
      const RoomBox& a = fp.annotations.rooms[i];
      CHECK(a.x0 >= 0);
      CHECK(a.y0 >= 0);
      CHECK(a.x1 <= 255);
      CHECK(a.y1 <= 255);
      for (std::size_t j = i + 1; j < fp.annotations.rooms.size(); ++j) {
        if (overlaps(a, fp.annotations.rooms[j])) CHECK(fp.groups[i] == fp.groups[j]);
      }
    }
    // Doors join rooms of different groups and open a gap in the wall.
    for (const DoorBox& d : fp.annotations.doors) {
      CHECK(fp.groups[d.rooms[0]] != fp.groups[d.rooms[1]]);
      CHECK(fp.world.at(nearest_cell(d.center)) == Cell::kFree);
    }
  }
  CHECK(l_shapes > 0);
}

TEST_CASE("generation is deterministic per seed") {
  const Floorplan a = generate(42);
  const Floorplan b = generate(42);
  CHECK(a.world == b.world);
  CHECK(a.annotations == b.annotations);
  CHECK(a.groups == b.groups);
  CHECK_FALSE(generate(43).world == a.world);
}

TEST_CASE("impossible requests fail") {
  FloorgenConfig cfg;
  cfg.rooms = 40;
  cfg.size = 128;
  cfg.max_retries = 3;
  CHECK_THROWS_AS(generate(1, cfg), GenerationFailed);
}

TEST_CASE("floorplans round-trip through disk") {
  const auto dir = std::filesystem::temp_directory_path() / "boxmap_floorgen_rt";
  std::filesystem::remove_all(dir);
  const Floorplan fp = generate(5);
  save_floorplan(fp, dir);
  const Floorplan back = load_floorplan(dir);
  CHECK(back.world == fp.world);
  CHECK(back.annotations == fp.annotations);
  CHECK(back.groups == fp.groups);
  CHECK(back.seed == fp.seed);
  const TsdfGrid t = read_tsdf_pgm(dir / "tsdf.pgm");
  CHECK(t.width() == 256);
  std::filesystem::remove(dir / "annotations.json");
  CHECK_THROWS_AS(load_floorplan(dir), MissingAnnotations);
  std::filesystem::remove_all(dir);
}

TEST_CASE("exported samples") {
  const Floorplan fp = generate(8);
  const RoomBox& r = fp.annotations.rooms[0];
  const CellIndex inside = nearest_cell(r.centroid());
  const auto dir = std::filesystem::temp_directory_path() / "boxmap_samples";
  std::filesystem::remove_all(dir);

  SUBCASE("a window covering the world reproduces the full TSDF") {
    const auto s = make_samples(fp, {inside}, 512);
    const TsdfGrid full = chamfer_tsdf(fp.world);
    const LocalFrame& f = s[0].frame;
    for (int y = 0; y < 256; y += 7) {
      for (int x = 0; x < 256; x += 5) {
        CHECK(s[0].tsdf.at(x - f.offset_x, y - f.offset_y) == full.at(x, y));
      }
    }
  }
  SUBCASE("wall cells carry zero TSDF at the same indices") {
    const auto s = make_samples(fp, {inside});
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        if (s[0].occupancy.at(x, y) == Cell::kOccupied) CHECK(s[0].tsdf.at(x, y) == 0.0);
      }
    }
  }
  SUBCASE("records read back identically") {
    const auto s = export_samples(fp, {inside, {inside.x + 3, inside.y}}, dir);
    for (int k = 0; k < 2; ++k) {
      const Sample b = read_sample(dir, k);
      CHECK(b.occupancy == s[k].occupancy);
      CHECK(b.annotations == s[k].annotations);
      CHECK(b.frame.offset_x == s[k].frame.offset_x);
      for (int i = 0; i < 128 * 128; i += 97) {
        CHECK(std::abs(b.tsdf.values()[i] - s[k].tsdf.values()[i]) <= 20.0 / 65535);
      }
    }
    std::filesystem::remove_all(dir);
  }
}
