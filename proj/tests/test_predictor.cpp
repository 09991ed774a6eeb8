#include <random>

#include "boxmap/error.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/predictor.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace boxmap;
using boxmap::testing::uniform;

namespace {

PredictorInput window_input(const OccupancyGrid& observed_world, CellIndex center, int size = 128) {
  PredictorInput in;
  CropResult c = crop_local(observed_world, center, size);
  in.frame = c.frame;
  in.laser = std::move(c.grid);
  in.prior = OccupancyGrid(in.laser.geometry(), Cell::kUnknown);
  return in;
}

}  // namespace

TEST_CASE("oracle reports everything on a fully observed world") {
  const Floorplan fp = generate(11);
  const OraclePredictor oracle(fp.annotations, fp.groups);
  const CellIndex c = nearest_cell(fp.annotations.rooms[0].centroid());
  const BoxSet out = oracle.predict(window_input(fp.world, c, 512));
  REQUIRE(out.budget() >= 6);
  for (std::size_t i = 0; i < fp.annotations.rooms.size(); ++i) {
    CHECK(out.rooms[i].q == 1.0);
    CHECK(out.rooms[i].x0 == fp.annotations.rooms[i].x0);
  }
  for (const DoorBox& d : out.doors) CHECK(d.q == 1.0);
}

TEST_CASE("first scan in a closed room reports only that room") {
  // Two rooms with no door between them.
  BoxSet ann;
  ann.rooms.push_back({10, 10, 40, 40, 1});
  ann.rooms.push_back({40, 10, 70, 40, 1});
  const OccupancyGrid world = rasterize(ann, GridGeometry{80, 50}, Cell::kOccupied);
  const OccupancyGrid scan = simulate_scan(world, CellIndex{25, 25});
  const OraclePredictor oracle(ann);
  PredictorInput in = window_input(scan, {25, 25});
  const BoxSet out = oracle.predict(in);
  CHECK(out.rooms[0].q == 1.0);
  CHECK(out.rooms[1].q == 0.0);
  CHECK(out.budget() == kDefaultBudget);
  for (int i = 2; i < out.budget(); ++i) CHECK(out.rooms[i].q == 0.0);
}

TEST_CASE("rooms behind a door of a reported room are reported") {
  // Chain 0 - 1 - 2 with the robot in room 0 and the door 0|1 out of sight.
  BoxSet ann;
  ann.rooms.push_back({10, 10, 40, 40, 1});
  ann.rooms.push_back({40, 10, 70, 40, 1});
  ann.rooms.push_back({70, 10, 100, 40, 1});
  ann.doors.push_back(DoorBox{{40, 14}, 6.0, 1.0, {0, 1}});
  ann.doors.push_back(DoorBox{{70, 25}, 6.0, 1.0, {1, 2}});
  OccupancyGrid seen(110, 50);
  for (int y = 20; y <= 39; ++y) {
    for (int x = 11; x <= 30; ++x) seen.set(x, y, Cell::kFree);
  }
  const LocalFrame frame{0, 0, 110};
  const PredictorInput in{OccupancyGrid(110, 50), seen, frame};
  const BoxSet out = OraclePredictor(ann).predict(in);
  CHECK(out.rooms[0].q == 1.0);
  CHECK(out.rooms[1].q == 1.0);
  CHECK(out.rooms[2].q == 0.0);  // one hop only
  CHECK(out.doors[0].q == 1.0);
  CHECK(out.doors[1].q == 0.0);
  OracleConfig off;
  off.reveal_neighbours = false;
  CHECK(OraclePredictor(ann, {}, off).predict(in).rooms[1].q == 0.0);
}

TEST_CASE("visibility threshold") {
  BoxSet ann;
  ann.rooms.push_back({0, 0, 11, 11, 1});  // 10 x 10 interior
  OccupancyGrid seen(20, 20);
  for (int y = 1; y <= 10; ++y) {
    for (int x = 1; x <= 4; ++x) seen.set(x, y, Cell::kFree);  // 40 cells
  }
  const LocalFrame frame{0, 0, 20};
  CHECK(visible_fraction(ann.rooms[0], seen, frame) == doctest::Approx(0.4));
  PredictorInput in{OccupancyGrid(20, 20), seen, frame};
  OracleConfig lo;
  lo.rho = 0.2;
  OracleConfig hi;
  hi.rho = 0.5;
  CHECK(OraclePredictor(ann, {}, lo).predict(in).rooms[0].q == 1.0);
  CHECK(OraclePredictor(ann, {}, hi).predict(in).rooms[0].q == 0.0);
}

TEST_CASE("oracle needs annotations") {
  CHECK_THROWS_AS(OraclePredictor(BoxSet{}), MissingAnnotations);
}

TEST_CASE("oracle output is a gated copy of the annotations") {
  const Floorplan fp = generate(4);
  const OraclePredictor oracle(fp.annotations, fp.groups);
  std::mt19937_64 rng(1);
  const TsdfGrid t = chamfer_tsdf(fp.world);
  for (int k = 0; k < 10; ++k) {
    CellIndex c;
    do {
      c = {int(uniform(rng, 0, 256)), int(uniform(rng, 0, 256))};
    } while (t.at(c.x, c.y) < 2);
    const BoxSet out = oracle.predict(window_input(simulate_scan(fp.world, c), c));
    for (std::size_t i = 0; i < fp.annotations.rooms.size(); ++i) {
      RoomBox r = out.rooms[i];
      CHECK((r.q == 0.0 || r.q == 1.0));
      r.q = 1.0;
      CHECK(r == fp.annotations.rooms[i]);
    }
    // Groups are reported together.
    for (std::size_t i = 0; i < fp.groups.size(); ++i) {
      for (std::size_t j = 0; j < fp.groups.size(); ++j) {
        if (fp.groups[i] == fp.groups[j]) CHECK(out.rooms[i].q == out.rooms[j].q);
      }
    }
  }
}

TEST_CASE("oracle noise is bounded and deterministic") {
  const Floorplan fp = generate(4);
  OracleConfig cfg;
  cfg.noise = 1.0;
  cfg.rho = 0.0;
  const OraclePredictor oracle(fp.annotations, fp.groups, cfg);
  const PredictorInput in = window_input(fp.world, {128, 128}, 256);
  const BoxSet a = oracle.predict(in);
  CHECK(a == oracle.predict(in));
  for (std::size_t i = 0; i < fp.annotations.rooms.size(); ++i) {
    CHECK(std::abs(a.rooms[i].x0 - fp.annotations.rooms[i].x0) <= 1.0);
    CHECK(std::abs(a.rooms[i].y1 - fp.annotations.rooms[i].y1) <= 1.0);
  }
}

TEST_CASE("projection keeps box invariants") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    BoxSet b;
    b.rooms.push_back({uniform(rng, -20, 60), uniform(rng, -20, 60), uniform(rng, -20, 60),
                       uniform(rng, -20, 60), uniform(rng, -1, 2)});
    b.rooms.push_back({});
    b.doors.push_back({{uniform(rng, -9, 60), uniform(rng, -9, 60)}, uniform(rng, -3, 9), uniform(rng, -1, 2), {0, 1}});
    const BoxSet p = project(b, 40, 30);
    CHECK_NOTHROW(p.validate());
    CHECK(p.rooms[0].x1 <= 39);
    CHECK(p.rooms[0].y0 >= 0);
  }
}

TEST_CASE("fitter recovers a single room") {
  BoxSet gt;
  gt.rooms.push_back({6, 5, 30, 25, 1});
  SUBCASE("exact truth, tight loss") {
    const TsdfGrid truth = composite_field(gt, 40, 32, 10);
    BoxSet init = gt;
    init.rooms[0].x0 += 2.5;
    init.rooms[0].y1 -= 3;
    init.rooms[0].x1 += 1.2;
    FitterConfig cfg;
    cfg.budget = 1;
    cfg.fit_doors = false;
    const FitResult r = fit_boxes(truth, cfg, init);
    CHECK(std::abs(r.boxes.rooms[0].x0 - 6) <= 0.5);
    CHECK(std::abs(r.boxes.rooms[0].y1 - 25) <= 0.5);
    CHECK(std::abs(r.boxes.rooms[0].x1 - 30) <= 0.5);
    CHECK(r.report.l_tsdf <= 1e-3);
    // Best-so-far trace is non-increasing.
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
      if (r.trace[i].phase == r.trace[i - 1].phase) CHECK(r.trace[i].best <= r.trace[i - 1].best);
    }
  }
  SUBCASE("deterministic for a fixed config") {
    const TsdfGrid truth = chamfer_tsdf(rasterize(gt, GridGeometry{40, 32}, Cell::kOccupied), 10);
    FitterConfig cfg;
    cfg.budget = 2;
    cfg.restarts = 2;
    cfg.max_iters = 300;
    cfg.seed = 5;
    const FitResult a = fit_boxes(truth, cfg);
    const FitResult b = fit_boxes(truth, cfg);
    CHECK(a.boxes == b.boxes);
    CHECK(a.report.total == b.report.total);
    CHECK_NOTHROW(a.boxes.validate());
  }
}

TEST_CASE("fitting from ground truth does not increase the loss") {
  BoxSet gt;
  gt.rooms.push_back({2, 2, 20, 22, 1});
  gt.rooms.push_back({20, 2, 38, 22, 1});
  gt.doors.push_back({{20, 12}, 6, 1, {0, 1}});
  const TsdfGrid truth = chamfer_tsdf(rasterize(gt, GridGeometry{40, 24}, Cell::kOccupied), 10);
  FitterConfig cfg;
  cfg.budget = 2;
  cfg.max_iters = 400;
  const double before = loss_total(gt, truth, WallMask::from_tsdf(truth)).total;
  const FitResult r = fit_boxes(truth, cfg, gt);
  CHECK(r.report.total <= before + 1e-12);
}

TEST_CASE("initial boxes split rooms at doorways") {
  BoxSet gt;
  gt.rooms.push_back({2, 2, 20, 22, 1});
  gt.rooms.push_back({20, 2, 38, 22, 1});
  gt.doors.push_back({{20, 12}, 6, 1, {0, 1}});
  const TsdfGrid truth = chamfer_tsdf(rasterize(gt, GridGeometry{40, 24}, Cell::kOccupied), 10);
  const BoxSet init = initial_boxes(truth, 6);
  CHECK(init.budget() == 6);
  CHECK(init.active_rooms() == 2);
}
