#include <random>
#include <vector>

#include "boxmap/losses.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace boxmap;
using boxmap::testing::uniform;

namespace {

// Truth field drawn straight from a box set, so the matching prediction is exact.
TsdfGrid field_of(const BoxSet& b, int w, int h, double gamma) {
  return composite_field(b, w, h, gamma);
}

BoxSet random_pred(std::mt19937_64& rng, int rooms, int doors, double size) {
  BoxSet b;
  for (int i = 0; i < rooms; ++i) {
    const double x0 = uniform(rng, 1, size / 2), y0 = uniform(rng, 1, size / 2);
    b.rooms.push_back({x0, y0, x0 + uniform(rng, 5, size / 2 - 1), y0 + uniform(rng, 5, size / 2 - 1),
                       uniform(rng, 0.55, 0.95)});
  }
  for (int j = 0; j < doors; ++j) {
    b.doors.push_back({{uniform(rng, 3, size - 3), uniform(rng, 3, size - 3)}, uniform(rng, 3, 8),
                       uniform(rng, 0.55, 0.95), {0, 1}});
  }
  return b;
}

// Two rooms side by side with a door in the shared wall, rasterized with a
// solid exterior.
struct TwoRooms {
  BoxSet boxes;
  TsdfGrid truth;
  WallMask walls;
};

TwoRooms two_rooms(double gamma = 6.0) {
  TwoRooms t;
  t.boxes.rooms.push_back({2, 2, 20, 22, 1});
  t.boxes.rooms.push_back({20, 2, 38, 22, 1});
  t.boxes.doors.push_back({{20, 12}, 6, 1, {0, 1}});
  const OccupancyGrid world = rasterize(t.boxes, GridGeometry{40, 24}, Cell::kOccupied);
  t.truth = chamfer_tsdf(world, gamma);
  t.walls = WallMask::from_occupancy(world);
  return t;
}

}  // namespace

TEST_CASE("loss_tsdf values") {
  const double gamma = 5.0;
  BoxSet b;
  b.rooms.push_back({2, 3, 15, 12, 1});
  const TsdfGrid truth = field_of(b, 20, 16, gamma);
  CHECK(loss_tsdf(b, truth).value == 0.0);

  const TsdfGrid plus(8, 8, gamma, gamma);
  CHECK(loss_tsdf(empty_box_set(), plus).value == doctest::Approx(4 * gamma * gamma));

  // Stationarity at the exact optimum.
  CHECK(loss_tsdf(b, truth).grad.max_abs() == 0.0);
}

TEST_CASE("loss_tsdf_wall values") {
  const double gamma = 5.0;
  const TsdfGrid truth(10, 10, gamma, 2.0);
  BoxSet b = empty_box_set(1);
  WallMask none(10, 10);
  CHECK(loss_tsdf_wall(b, truth, none).value == 0.0);
  WallMask one(10, 10);
  one.set(3, 4, true);
  // Single pixel, residual 2 - (-5) = 7.
  CHECK(loss_tsdf_wall(b, truth, one).value == doctest::Approx(49.0 / 100.0));
}

TEST_CASE("loss_gate examples") {
  const std::vector<double> zeros(6, 0.0), ones(6, 1.0), mixed{1, 1, 0, 0, 0, 0};
  CHECK(loss_gate(zeros).value == 0.0);
  CHECK(loss_gate(ones).value == doctest::Approx(1.0));
  CHECK(loss_gate(mixed).value == doctest::Approx(1.0 / 3.0));
  const std::vector<double> half{0.5, 0.5};
  CHECK(loss_gate(half).value == doctest::Approx(0.75));
}

TEST_CASE("loss_gate minimizers") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> q(6);
    for (double& v : q) v = uniform(rng, 0, 1);
    CHECK(loss_gate(q).value >= 0.0);
    // For a fixed active count, pushing active gates to 1 and inactive ones to
    // 0 never raises the bimodal part.
    std::vector<double> snapped(6);
    double bimodal = 0;
    for (int i = 0; i < 6; ++i) {
      snapped[i] = q[i] >= 0.5 ? 1.0 : 0.0;
      bimodal += q[i] * (1 - q[i]);
    }
    double snapped_bimodal = 0;
    for (double v : snapped) snapped_bimodal += v * (1 - v);
    CHECK(snapped_bimodal == 0.0);
    CHECK(bimodal >= snapped_bimodal);
  }
}

TEST_CASE("loss_iou") {
  BoxSet b;
  b.rooms.push_back({0, 0, 10, 10, 1});
  b.rooms.push_back({0, 0, 10, 10, 1});
  CHECK(loss_iou(b).value == doctest::Approx(1.0));
  b.rooms[1] = {20, 20, 30, 30, 1};
  CHECK(loss_iou(b).value == 0.0);
  // Overlapping pair: growing the left box's x1 increases overlap.
  b.rooms[1] = {5, 0, 15, 10, 1};
  const LossValue v = loss_iou(b);
  CHECK(v.value == doctest::Approx(1.0 / 3.0));
  CHECK(v.grad.rooms[0].x1 > 0);
  CHECK(v.grad.rooms[1].x0 < 0);
  // Inactive rooms do not count.
  b.rooms[1].q = 0.2;
  CHECK(loss_iou(b).value == 0.0);
}

TEST_CASE("door prediction and door loss") {
  const TwoRooms t = two_rooms();
  const double gamma = t.truth.gamma();
  // Door residual equals the diamond on the opened wall cells.
  BoxSet rooms_only = t.boxes;
  rooms_only.doors.clear();
  for (int y = 10; y <= 14; ++y) {
    const Point2 p{20, double(y)};
    const double residual = t.truth.at(20, y) - composite_tsdf(rooms_only, p, gamma);
    CHECK(residual == doctest::Approx(door_prediction(t.boxes, p, gamma)));
  }
  CHECK(door_prediction(rooms_only, {20, 12}, gamma) == 0.0);

  SUBCASE("no doors anywhere gives zero") {
    // Truth taken from the room boxes themselves (no corner mismatch).
    const TsdfGrid truth = field_of(rooms_only, 40, 24, gamma);
    CHECK(loss_door(rooms_only, truth, WallMask::from_tsdf(truth)).value == 0.0);
  }
  SUBCASE("displacement raises the loss monotonically") {
    double prev = -1.0;
    for (double shift : {0.0, 1.0, 2.0}) {
      BoxSet moved = t.boxes;
      moved.doors[0].center.y += shift;
      const double v = loss_door(moved, t.truth, t.walls).value;
      if (shift > 0) CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("loss_total composition") {
  const double gamma = 5.0;
  BoxSet b;
  b.rooms.push_back({2, 2, 12, 12, 1});
  b.rooms.push_back({14, 2, 26, 12, 1});
  const TsdfGrid truth = field_of(b, 30, 16, gamma);
  const WallMask walls = WallMask::from_tsdf(truth);
  const LossReport r = loss_total(b, truth, walls);
  CHECK(r.l_tsdf == 0.0);
  CHECK(r.l_tsdf_wall == 0.0);
  CHECK(r.l_door == 0.0);
  CHECK(r.l_iou == 0.0);
  CHECK(r.total == doctest::Approx(2.0 / 2.0));

  const LossReport z = loss_total(empty_box_set(), TsdfGrid(8, 8, gamma, gamma), WallMask(8, 8));
  CHECK(z.total == doctest::Approx(4 * gamma * gamma));

  std::mt19937_64 rng(31);
  for (int k = 0; k < 10; ++k) {
    const BoxSet p = random_pred(rng, 4, 2, 30);
    const LossReport q = loss_total(p, truth, walls);
    CHECK(q.total == q.l_tsdf + q.l_tsdf_wall + q.l_door + q.l_iou + q.l_gate);
    CHECK(q.l_tsdf == loss_tsdf(p, truth).value);
    CHECK(q.l_tsdf_wall == loss_tsdf_wall(p, truth, walls).value);
    CHECK(q.l_door == loss_door(p, truth, walls).value);
    CHECK(q.l_iou == loss_iou(p).value);
    CHECK(q.l_gate == loss_gate(p).value);
    for (double v : {q.l_tsdf, q.l_tsdf_wall, q.l_door, q.l_iou, q.l_gate}) CHECK(v >= 0.0);
  }
}

TEST_CASE("analytic gradients match finite differences") {
  const TwoRooms t = two_rooms();
  std::mt19937_64 rng(17);
  int passes = 0;
  for (int k = 0; k < 8; ++k) {
    const BoxSet p = random_pred(rng, 3, 2, 40);
    for (LossComponent c : {LossComponent::kTsdf, LossComponent::kTsdfWall, LossComponent::kDoor,
                            LossComponent::kIou, LossComponent::kGate, LossComponent::kTotal}) {
      const GradientCheckReport r = check_gradients(p, t.truth, t.walls, c);
      INFO(to_string(c), " max rel ", r.max_rel_error);
      CHECK(r.max_rel_error <= 1e-6);
      if (r.passed) ++passes;
    }
  }
  CHECK(passes > 0);
}

TEST_CASE("check_gradients skips coordinates sitting on a kink") {
  const double gamma = 5.0;
  BoxSet b;
  b.rooms.push_back({3, 3, 12, 12, 1});
  const TsdfGrid truth = field_of(b, 16, 16, gamma);
  BoxSet p = b;
  p.rooms[0].q = 0.8;  // x0 on an integer: ramp kinks pass through pixels
  const GradientCheckReport r =
      check_gradients(p, truth, WallMask::from_tsdf(truth), LossComponent::kTsdf);
  CHECK(r.skipped > 0);
  CHECK(r.parameters[0].skipped);
}

TEST_CASE("losses are translation equivariant") {
  // Everything stays more than gamma away from the canvas edge, so the field
  // outside is the constant -gamma before and after the shift.
  const double gamma = 4.0;
  std::mt19937_64 rng(23);
  for (int k = 0; k < 5; ++k) {
    BoxSet g;
    g.rooms.push_back({8, 8, 20, 22, 1});
    g.rooms.push_back({20, 8, 30, 22, 1});
    BoxSet p;
    p.rooms.push_back({uniform(rng, 7, 10), uniform(rng, 7, 10), uniform(rng, 18, 22), uniform(rng, 20, 23), 0.9});
    p.rooms.push_back({uniform(rng, 18, 22), uniform(rng, 7, 10), uniform(rng, 28, 31), uniform(rng, 20, 23), 0.8});
    p.doors.push_back({{uniform(rng, 18, 22), uniform(rng, 12, 18)}, uniform(rng, 3, 6), 0.9, {0, 1}});
    const int dx = 4, dy = -3;
    const TsdfGrid ta = field_of(g, 48, 40, gamma);
    const TsdfGrid tb = field_of(translated(g, dx, dy), 48, 40, gamma);
    const LossReport a = loss_total(p, ta, WallMask::from_tsdf(ta));
    const LossReport b = loss_total(translated(p, dx, dy), tb, WallMask::from_tsdf(tb));
    CHECK(a.l_tsdf == doctest::Approx(b.l_tsdf).epsilon(1e-12));
    CHECK(a.l_tsdf_wall == doctest::Approx(b.l_tsdf_wall).epsilon(1e-12));
    CHECK(a.l_door == doctest::Approx(b.l_door).epsilon(1e-12));
    CHECK(a.l_iou == doctest::Approx(b.l_iou).epsilon(1e-12));
    CHECK(a.l_gate == b.l_gate);
  }
}
