#pragma once

#include <vector>

#include "boxmap/boxes.hpp"
#include "boxmap/grid.hpp"

namespace boxmap {

struct TopoNode {
  int box = -1;  // index into the BoxSet rooms
  Point2 centroid;
  double width = 0.0;
  double height = 0.0;
  int group = -1;  // multi-box room id (connected components of overlap)
  bool visited = false;
};

enum class TopoEdgeKind { kOverlap, kDoor };

struct TopoEdge {
  TopoEdgeKind kind = TopoEdgeKind::kOverlap;
  int a = -1;  // node ids
  int b = -1;
  int door = -1;  // index into the BoxSet doors for door edges
};

/// Room-box nodes ordered row-major by top-left corner, with overlap and
/// verified door edges. Keeps a copy of the boxes it was built from.
struct TopoGraph {
  BoxSet boxes;
  std::vector<TopoNode> nodes;
  std::vector<TopoEdge> edges;

  int node_of_box(int box) const;  // -1 if the box is not a node
  int group_count() const;
};

struct TopoConfig {
  double side_offset = 2.0;  // samples sit s/2 + side_offset cells either side of a door
  int dilation = 2;          // BFS region = door square grown by this many cells
};

/// True when the cells s/2 + offset either side of the door (along its wall
/// normal) are FREE in `map` and 4-connected through FREE cells inside the
/// dilated door square.
bool door_traversable(const DoorBox& door, const BoxSet& boxes, const OccupancyGrid& map,
                      const TopoConfig& cfg = {});

TopoGraph build_topo(const BoxSet& boxes, const OccupancyGrid& accumulated, const TopoConfig& cfg = {});

/// Marks a node visited when a pose (cell coordinates) lies in its box,
/// boundary included, then spreads the flag across each multi-box group.
TopoGraph mark_visited(const TopoGraph& topo, const std::vector<Point2>& poses);

enum class NavNodeKind { kRoom, kDoor, kRobot };

struct NavNode {
  NavNodeKind kind = NavNodeKind::kRoom;
  Point2 position;
  int ref = -1;  // topo node id for rooms, BoxSet door index for doors
};

struct NavEdge {
  int a = -1;
  int b = -1;
  double weight = 0.0;
};

struct NavGraph {
  std::vector<NavNode> nodes;  // topo rooms first (same ids), then doors, then the robot
  std::vector<NavEdge> edges;
  int robot = -1;
  bool robot_inside = true;  // false when the robot was attached to the nearest room

  std::vector<std::vector<std::pair<int, double>>> adjacency() const;
};

struct NavConfig {
  double alpha = 0.5;   // room position = centroid + alpha * (nearest door - centroid)
  bool strict = false;  // throw RobotOutsideGraph instead of attaching to the nearest room
};

NavGraph build_nav(const TopoGraph& topo, Point2 robot, const NavConfig& cfg = {});

}  // namespace boxmap
