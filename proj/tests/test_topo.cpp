#include <algorithm>
#include <random>

#include "boxmap/error.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/topo.hpp"
#include "doctest.h"

using namespace boxmap;

namespace {

// Rooms [0,20]x[0,20] and [20,40]x[0,20] sharing a wall with a door at (20, 10).
BoxSet two_rooms_with_door() {
  BoxSet b;
  b.rooms = {RoomBox{0, 0, 20, 20, 1.0}, RoomBox{20, 0, 40, 20, 1.0}};
  b.doors = {DoorBox{{20, 10}, 6.0, 1.0, {0, 1}}};
  return b;
}

// Three rooms in a row, doors between neighbours.
BoxSet three_rooms_in_a_row() {
  BoxSet b;
  b.rooms = {RoomBox{0, 0, 20, 20, 1.0}, RoomBox{20, 0, 40, 20, 1.0}, RoomBox{40, 0, 60, 20, 1.0}};
  b.doors = {DoorBox{{20, 10}, 6.0, 1.0, {0, 1}}, DoorBox{{40, 6}, 6.0, 1.0, {1, 2}}};
  return b;
}

OccupancyGrid full_map(const BoxSet& b, int w, int h) {
  return rasterize(b, GridGeometry{w, h}, Cell::kOccupied);
}

int count_kind(const TopoGraph& t, TopoEdgeKind k) {
  return static_cast<int>(std::count_if(t.edges.begin(), t.edges.end(), [&](const TopoEdge& e) { return e.kind == k; }));
}

bool has_edge(const NavGraph& nav, int a, int b) {
  return std::any_of(nav.edges.begin(), nav.edges.end(), [&](const NavEdge& e) {
    return (e.a == a && e.b == b) || (e.a == b && e.b == a);
  });
}

}  // namespace

TEST_CASE("two rooms with an observed door give one door edge") {
  const BoxSet b = two_rooms_with_door();
  const TopoGraph t = build_topo(b, full_map(b, 41, 21));
  REQUIRE(t.nodes.size() == 2);
  CHECK(t.edges.size() == 1);
  CHECK(t.edges[0].kind == TopoEdgeKind::kDoor);
  CHECK(t.edges[0].door == 0);
  CHECK(t.group_count() == 2);
  CHECK(t.nodes[0].centroid == Point2{10, 10});
  CHECK(t.nodes[1].width == 20.0);
}

TEST_CASE("a door that has not been observed gives no edge") {
  const BoxSet b = two_rooms_with_door();
  CHECK(build_topo(b, OccupancyGrid(41, 21, Cell::kUnknown)).edges.empty());

  // Door cells walled off in the map.
  OccupancyGrid m = full_map(b, 41, 21);
  for (int y = 0; y < 21; ++y) m.set(20, y, Cell::kOccupied);
  CHECK(build_topo(b, m).edges.empty());
}

TEST_CASE("door_traversable needs both sides free and connected") {
  const BoxSet b = two_rooms_with_door();
  OccupancyGrid m = full_map(b, 41, 21);
  CHECK(door_traversable(b.doors[0], b, m));
  m.set(25, 10, Cell::kUnknown);  // far-side sample at s/2 + 2 = 5 cells
  CHECK_FALSE(door_traversable(b.doors[0], b, m));
}

TEST_CASE("overlapping boxes form one group with an overlap edge") {
  BoxSet b;
  b.rooms = {RoomBox{0, 0, 20, 40, 1.0}, RoomBox{0, 20, 40, 40, 1.0}};
  const TopoGraph t = build_topo(b, full_map(b, 41, 41));
  REQUIRE(t.nodes.size() == 2);
  CHECK(t.edges.size() == 1);
  CHECK(t.edges[0].kind == TopoEdgeKind::kOverlap);
  CHECK(t.group_count() == 1);
  CHECK(t.nodes[0].group == t.nodes[1].group);
}

TEST_CASE("inactive boxes are not nodes and nodes are ordered by top-left") {
  BoxSet b;
  b.rooms = {RoomBox{20, 0, 40, 20, 1.0}, RoomBox{0, 30, 10, 40, 0.2}, RoomBox{0, 0, 20, 20, 0.9}};
  const TopoGraph t = build_topo(b, OccupancyGrid(41, 41));
  REQUIRE(t.nodes.size() == 2);
  CHECK(t.nodes[0].box == 2);
  CHECK(t.nodes[1].box == 0);
  CHECK(t.node_of_box(1) == -1);
  CHECK(t.node_of_box(0) == 1);
}

TEST_CASE("nav graph of two rooms and one door") {
  const BoxSet b = two_rooms_with_door();
  const TopoGraph t = build_topo(b, full_map(b, 41, 21));
  const NavGraph nav = build_nav(t, Point2{5, 10});
  REQUIRE(nav.nodes.size() == 4);
  CHECK(nav.nodes[0].kind == NavNodeKind::kRoom);
  CHECK(nav.nodes[2].kind == NavNodeKind::kDoor);
  CHECK(nav.nodes[3].kind == NavNodeKind::kRobot);
  CHECK(nav.robot == 3);
  CHECK(nav.robot_inside);
  // Room positions move halfway toward their nearest door.
  CHECK(nav.nodes[0].position.x == doctest::Approx(15.0));
  CHECK(nav.nodes[1].position.x == doctest::Approx(25.0));
  CHECK(has_edge(nav, 0, 2));
  CHECK(has_edge(nav, 2, 1));
  CHECK(has_edge(nav, 3, 0));
  CHECK_FALSE(has_edge(nav, 3, 1));
  for (const NavEdge& e : nav.edges) {
    CHECK(e.weight == doctest::Approx(distance(nav.nodes[e.a].position, nav.nodes[e.b].position)));
  }
}

TEST_CASE("alpha zero keeps rooms at their centroids") {
  const BoxSet b = two_rooms_with_door();
  const TopoGraph t = build_topo(b, full_map(b, 41, 21));
  NavConfig cfg;
  cfg.alpha = 0.0;
  const NavGraph nav = build_nav(t, Point2{5, 10}, cfg);
  CHECK(nav.nodes[0].position == Point2{10, 10});
  CHECK(nav.nodes[1].position == Point2{30, 10});
}

TEST_CASE("doors of one room are linked to each other") {
  const BoxSet b = three_rooms_in_a_row();
  const TopoGraph t = build_topo(b, full_map(b, 61, 21));
  REQUIRE(count_kind(t, TopoEdgeKind::kDoor) == 2);
  const NavGraph nav = build_nav(t, Point2{5, 10});
  REQUIRE(nav.nodes.size() == 6);
  CHECK(has_edge(nav, 3, 4));
  // The middle room sits halfway to its nearer door (20, 10) vs (40, 6).
  CHECK(nav.nodes[1].position == Point2{25, 10});
}

TEST_CASE("robot outside every box") {
  const BoxSet b = two_rooms_with_door();
  const TopoGraph t = build_topo(b, full_map(b, 41, 21));
  const NavGraph nav = build_nav(t, Point2{38, 30});
  CHECK_FALSE(nav.robot_inside);
  CHECK(has_edge(nav, nav.robot, 1));
  NavConfig strict;
  strict.strict = true;
  CHECK_THROWS_AS(build_nav(t, Point2{38, 30}, strict), RobotOutsideGraph);
}

TEST_CASE("robot in one box of a group links to every box of the group") {
  BoxSet b;
  b.rooms = {RoomBox{0, 0, 20, 40, 1.0}, RoomBox{0, 20, 40, 40, 1.0}};
  const TopoGraph t = build_topo(b, full_map(b, 41, 41));
  const NavGraph nav = build_nav(t, Point2{5, 5});
  CHECK(has_edge(nav, nav.robot, 0));
  CHECK(has_edge(nav, nav.robot, 1));
}

TEST_CASE("mark_visited") {
  BoxSet b = two_rooms_with_door();
  b.rooms.push_back(RoomBox{40, 0, 60, 20, 1.0});
  b.rooms.push_back(RoomBox{40, 10, 70, 20, 1.0});  // overlaps the third box
  const TopoGraph t = build_topo(b, OccupancyGrid(71, 21));
  SUBCASE("pose at a room centre") {
    const TopoGraph v = mark_visited(t, {Point2{10, 10}});
    CHECK(v.nodes[0].visited);
    CHECK_FALSE(v.nodes[1].visited);
  }
  SUBCASE("no poses") {
    const TopoGraph v = mark_visited(t, {});
    for (const auto& n : v.nodes) CHECK_FALSE(n.visited);
  }
  SUBCASE("the boundary counts") {
    const TopoGraph v = mark_visited(t, {Point2{20, 10}});
    CHECK(v.nodes[0].visited);
    CHECK(v.nodes[1].visited);
  }
  SUBCASE("a pose in one box visits the whole group") {
    const TopoGraph v = mark_visited(t, {Point2{65, 15}});
    int visited = 0;
    for (const auto& n : v.nodes) visited += n.visited ? 1 : 0;
    CHECK(visited == 2);
  }
}

TEST_CASE("mark_visited is monotone in the pose set") {
  const Floorplan fp = generate(21);
  const TopoGraph t = build_topo(fp.annotations, fp.world);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 255.0);
  std::vector<Point2> poses;
  TopoGraph prev = mark_visited(t, poses);
  for (int i = 0; i < 30; ++i) {
    poses.push_back({u(rng), u(rng)});
    const TopoGraph next = mark_visited(t, poses);
    for (std::size_t k = 0; k < t.nodes.size(); ++k) {
      if (prev.nodes[k].visited) CHECK(next.nodes[k].visited);
    }
    prev = next;
  }
}

TEST_CASE("fully observed generated plans recover the annotated doors") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const Floorplan fp = generate(seed);
    const TopoGraph t = build_topo(fp.annotations, fp.world);
    std::vector<int> found;
    for (const TopoEdge& e : t.edges) {
      if (e.kind == TopoEdgeKind::kDoor) found.push_back(e.door);
    }
    std::sort(found.begin(), found.end());
    std::vector<int> want(fp.annotations.doors.size());
    for (std::size_t i = 0; i < want.size(); ++i) want[i] = static_cast<int>(i);
    CHECK(found == want);
  }
}

TEST_CASE("build_topo and build_nav are deterministic") {
  const Floorplan fp = generate(5);
  const TopoGraph a = build_topo(fp.annotations, fp.world);
  const TopoGraph b = build_topo(fp.annotations, fp.world);
  REQUIRE(a.nodes.size() == b.nodes.size());
  REQUIRE(a.edges.size() == b.edges.size());
  for (std::size_t i = 0; i < a.edges.size(); ++i) {
    CHECK(a.edges[i].a == b.edges[i].a);
    CHECK(a.edges[i].b == b.edges[i].b);
    CHECK(a.edges[i].door == b.edges[i].door);
  }
  const Point2 robot = fp.annotations.rooms[0].centroid();
  const NavGraph na = build_nav(a, robot);
  const NavGraph nb = build_nav(b, robot);
  REQUIRE(na.edges.size() == nb.edges.size());
  for (std::size_t i = 0; i < na.edges.size(); ++i) CHECK(na.edges[i].weight == nb.edges[i].weight);
}
