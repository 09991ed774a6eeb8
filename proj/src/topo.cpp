#include "boxmap/topo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "boxmap/error.hpp"

namespace boxmap {

int TopoGraph::node_of_box(int box) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].box == box) return static_cast<int>(i);
  }
  return -1;
}

int TopoGraph::group_count() const {
  std::set<int> g;
  for (const TopoNode& n : nodes) g.insert(n.group);
  return static_cast<int>(g.size());
}

bool door_traversable(const DoorBox& door, const BoxSet& boxes, const OccupancyGrid& map,
                      const TopoConfig& cfg) {
  const Point2 n = door_normal(door, boxes);
  const double reach = door.size / 2.0 + cfg.side_offset;
  const CellIndex a = nearest_cell(door.center + reach * n);
  const CellIndex b = nearest_cell(door.center - reach * n);
  auto free_at = [&](CellIndex c) { return map.contains(c) && map.at(c) == Cell::kFree; };
  if (!free_at(a) || !free_at(b)) return false;

  const CellIndex c = nearest_cell(door.center);
  const int r = std::max(static_cast<int>(std::ceil(door.size / 2.0)) + cfg.dilation,
                         static_cast<int>(std::ceil(reach)));
  auto in_region = [&](CellIndex p) { return std::abs(p.x - c.x) <= r && std::abs(p.y - c.y) <= r; };
  const int side = 2 * r + 1;
  std::vector<std::uint8_t> seen(std::size_t(side) * side, 0);
  auto mark = [&](CellIndex p) -> std::uint8_t& {
    return seen[std::size_t(p.y - c.y + r) * side + (p.x - c.x + r)];
  };
  std::queue<CellIndex> q;
  q.push(a);
  mark(a) = 1;
  while (!q.empty()) {
    const CellIndex p = q.front();
    q.pop();
    if (p == b) return true;
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const CellIndex nb{p.x + dx, p.y + dy};
      if (!in_region(nb) || !free_at(nb) || mark(nb)) continue;
      mark(nb) = 1;
      q.push(nb);
    }
  }
  return false;
}

namespace {

std::vector<int> overlap_groups(const BoxSet& boxes, const std::vector<int>& active) {
  std::vector<int> parent(active.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t j = i + 1; j < active.size(); ++j) {
      if (overlaps(boxes.rooms[active[i]], boxes.rooms[active[j]])) {
        const int a = find(int(i)), b = find(int(j));
        parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  // Relabel roots to 0..k-1 in node order.
  std::vector<int> label(active.size(), -1), out(active.size());
  int next = 0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const int root = find(int(i));
    if (label[root] < 0) label[root] = next++;
    out[i] = label[root];
  }
  return out;
}

}  // namespace

TopoGraph build_topo(const BoxSet& boxes, const OccupancyGrid& accumulated, const TopoConfig& cfg) {
  TopoGraph g;
  g.boxes = boxes;
  std::vector<int> active;
  for (int i = 0; i < boxes.budget(); ++i) {
    if (boxes.rooms[i].active()) active.push_back(i);
  }
  std::stable_sort(active.begin(), active.end(), [&](int a, int b) {
    const RoomBox& ra = boxes.rooms[a];
    const RoomBox& rb = boxes.rooms[b];
    if (ra.y0 != rb.y0) return ra.y0 < rb.y0;
    return ra.x0 < rb.x0;
  });
  const std::vector<int> groups = overlap_groups(boxes, active);
  for (std::size_t i = 0; i < active.size(); ++i) {
    const RoomBox& r = boxes.rooms[active[i]];
    g.nodes.push_back({active[i], r.centroid(), r.width(), r.height(), groups[i], false});
  }
  for (std::size_t i = 0; i < active.size(); ++i) {
    for (std::size_t j = i + 1; j < active.size(); ++j) {
      if (overlaps(boxes.rooms[active[i]], boxes.rooms[active[j]])) {
        g.edges.push_back({TopoEdgeKind::kOverlap, int(i), int(j), -1});
      }
    }
  }
  for (std::size_t k = 0; k < boxes.doors.size(); ++k) {
    const DoorBox& d = boxes.doors[k];
    if (!d.active()) continue;
    const int a = g.node_of_box(d.rooms[0]);
    const int b = g.node_of_box(d.rooms[1]);
    if (a < 0 || b < 0 || a == b) continue;
    if (!door_traversable(d, boxes, accumulated, cfg)) continue;
    g.edges.push_back({TopoEdgeKind::kDoor, std::min(a, b), std::max(a, b), int(k)});
  }
  return g;
}

TopoGraph mark_visited(const TopoGraph& topo, const std::vector<Point2>& poses) {
  TopoGraph out = topo;
  std::set<int> groups;
  for (TopoNode& n : out.nodes) {
    const RoomBox& r = out.boxes.rooms[n.box];
    for (const Point2& p : poses) {
      if (r.contains(p)) {
        n.visited = true;
        break;
      }
    }
    if (n.visited) groups.insert(n.group);
  }
  for (TopoNode& n : out.nodes) {
    if (groups.contains(n.group)) n.visited = true;
  }
  return out;
}

std::vector<std::vector<std::pair<int, double>>> NavGraph::adjacency() const {
  std::vector<std::vector<std::pair<int, double>>> adj(nodes.size());
  for (const NavEdge& e : edges) {
    adj[e.a].push_back({e.b, e.weight});
    adj[e.b].push_back({e.a, e.weight});
  }
  return adj;
}

NavGraph build_nav(const TopoGraph& topo, Point2 robot, const NavConfig& cfg) {
  NavGraph nav;
  const int n_rooms = static_cast<int>(topo.nodes.size());
  // Doors attached to each room node.
  std::vector<std::vector<int>> room_doors(n_rooms);
  std::vector<const TopoEdge*> door_edges;
  for (const TopoEdge& e : topo.edges) {
    if (e.kind != TopoEdgeKind::kDoor) continue;
    door_edges.push_back(&e);
    room_doors[e.a].push_back(int(door_edges.size()) - 1);
    room_doors[e.b].push_back(int(door_edges.size()) - 1);
  }
  for (int i = 0; i < n_rooms; ++i) {
    const TopoNode& t = topo.nodes[i];
    Point2 pos = t.centroid;
    double best = std::numeric_limits<double>::infinity();
    for (int k : room_doors[i]) {
      const Point2 c = topo.boxes.doors[door_edges[k]->door].center;
      if (distance(c, t.centroid) < best) {
        best = distance(c, t.centroid);
        pos = t.centroid + cfg.alpha * (c - t.centroid);
      }
    }
    nav.nodes.push_back({NavNodeKind::kRoom, pos, i});
  }
  auto add_edge = [&](int a, int b) {
    if (a == b) return;
    const double w = std::max(distance(nav.nodes[a].position, nav.nodes[b].position), 1e-9);
    nav.edges.push_back({std::min(a, b), std::max(a, b), w});
  };
  for (const TopoEdge& e : topo.edges) {
    if (e.kind == TopoEdgeKind::kOverlap) add_edge(e.a, e.b);
  }
  std::vector<int> door_node(door_edges.size());
  for (std::size_t k = 0; k < door_edges.size(); ++k) {
    const TopoEdge& e = *door_edges[k];
    door_node[k] = static_cast<int>(nav.nodes.size());
    nav.nodes.push_back({NavNodeKind::kDoor, topo.boxes.doors[e.door].center, e.door});
    add_edge(e.a, door_node[k]);
    add_edge(door_node[k], e.b);
  }
  // Doors of the same room (multi-box group) are linked directly.
  for (std::size_t k = 0; k < door_edges.size(); ++k) {
    for (std::size_t l = k + 1; l < door_edges.size(); ++l) {
      const TopoEdge& e = *door_edges[k];
      const TopoEdge& f = *door_edges[l];
      const std::set<int> ge{topo.nodes[e.a].group, topo.nodes[e.b].group};
      if (ge.contains(topo.nodes[f.a].group) || ge.contains(topo.nodes[f.b].group)) {
        add_edge(door_node[k], door_node[l]);
      }
    }
  }
  nav.robot = static_cast<int>(nav.nodes.size());
  nav.nodes.push_back({NavNodeKind::kRobot, robot, -1});
  std::set<int> groups;
  for (int i = 0; i < n_rooms; ++i) {
    if (topo.boxes.rooms[topo.nodes[i].box].contains(robot)) groups.insert(topo.nodes[i].group);
  }
  if (groups.empty()) {
    if (cfg.strict || n_rooms == 0) {
      throw RobotOutsideGraph("robot at (" + std::to_string(robot.x) + ", " + std::to_string(robot.y) +
                              ") lies in no active room box");
    }
    int nearest = 0;
    for (int i = 1; i < n_rooms; ++i) {
      if (distance(topo.nodes[i].centroid, robot) < distance(topo.nodes[nearest].centroid, robot)) {
        nearest = i;
      }
    }
    nav.robot_inside = false;
    add_edge(nav.robot, nearest);
    return nav;
  }
  // Containing boxes and the other boxes of their rooms.
  for (int i = 0; i < n_rooms; ++i) {
    if (groups.contains(topo.nodes[i].group)) add_edge(nav.robot, i);
  }
  return nav;
}

}  // namespace boxmap
