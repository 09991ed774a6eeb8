#include "boxmap/serialize.hpp"

#include "boxmap/error.hpp"

namespace boxmap {

void to_json(Json& j, const RoomBox& r) {
  j = Json{{"x0", r.x0}, {"y0", r.y0}, {"x1", r.x1}, {"y1", r.y1}, {"q", r.q}};
}

void from_json(const Json& j, RoomBox& r) {
  r.x0 = j.at("x0").get<double>();
  r.y0 = j.at("y0").get<double>();
  r.x1 = j.at("x1").get<double>();
  r.y1 = j.at("y1").get<double>();
  r.q = j.value("q", 1.0);
}

void to_json(Json& j, const DoorBox& d) {
  j = Json{{"cx", d.center.x}, {"cy", d.center.y}, {"s", d.size}, {"q", d.q},
           {"rooms", {d.rooms[0], d.rooms[1]}}};
}

void from_json(const Json& j, DoorBox& d) {
  d.center.x = j.at("cx").get<double>();
  d.center.y = j.at("cy").get<double>();
  d.size = j.at("s").get<double>();
  d.q = j.value("q", 1.0);
  const Json& rooms = j.at("rooms");
  if (!rooms.is_array() || rooms.size() != 2) throw InvalidBoxSet("door rooms must be a pair");
  d.rooms = {rooms[0].get<int>(), rooms[1].get<int>()};
}

void to_json(Json& j, const BoxSet& b) { j = Json{{"rooms", b.rooms}, {"doors", b.doors}}; }

void from_json(const Json& j, BoxSet& b) {
  b.rooms = j.at("rooms").get<std::vector<RoomBox>>();
  b.doors = j.contains("doors") ? j.at("doors").get<std::vector<DoorBox>>() : std::vector<DoorBox>{};
  b.validate();
}

void to_json(Json& j, const LossReport& r) {
  j = Json{{"l_tsdf", r.l_tsdf}, {"l_tsdf_wall", r.l_tsdf_wall}, {"l_door", r.l_door},
           {"l_iou", r.l_iou},   {"l_gate", r.l_gate},           {"total", r.total}};
}

void to_json(Json& j, const TopoGraph& t) {
  Json nodes = Json::array();
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const TopoNode& n = t.nodes[i];
    nodes.push_back({{"id", i}, {"box", n.box}, {"x", n.centroid.x}, {"y", n.centroid.y}, {"w", n.width},
                     {"h", n.height}, {"group", n.group}, {"visited", n.visited}});
  }
  Json edges = Json::array();
  for (const TopoEdge& e : t.edges) {
    Json je{{"kind", e.kind == TopoEdgeKind::kDoor ? "door" : "overlap"}, {"a", e.a}, {"b", e.b}};
    if (e.kind == TopoEdgeKind::kDoor) je["door"] = e.door;
    edges.push_back(std::move(je));
  }
  j = Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

void to_json(Json& j, const NavGraph& n) {
  static const char* kinds[] = {"room", "door", "robot"};
  Json nodes = Json::array();
  for (std::size_t i = 0; i < n.nodes.size(); ++i) {
    const NavNode& v = n.nodes[i];
    nodes.push_back({{"id", i}, {"kind", kinds[static_cast<int>(v.kind)]}, {"x", v.position.x},
                     {"y", v.position.y}, {"ref", v.ref}});
  }
  Json edges = Json::array();
  for (const NavEdge& e : n.edges) edges.push_back({{"a", e.a}, {"b", e.b}, {"w", e.weight}});
  j = Json{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}, {"robot", n.robot}};
}

void to_json(Json& j, const EpisodeResult& r) {
  Json poses = Json::array();
  for (const CellIndex& p : r.poses) poses.push_back({p.x, p.y});
  Json records = Json::array();
  for (const StepRecord& s : r.records) {
    records.push_back({{"update", s.update}, {"pose", {s.pose.x, s.pose.y}}, {"goal", s.goal},
                       {"moves", s.path_moves}, {"fallback", s.fallback}});
  }
  j = Json{{"strategy", to_string(r.strategy)},
           {"seed", r.seed},
           {"start", {r.start.x, r.start.y}},
           {"status", to_string(r.status)},
           {"steps", r.steps},
           {"updates", r.updates},
           {"rooms_total", r.rooms_total},
           {"rooms_visited", r.rooms_visited},
           {"poses", std::move(poses)},
           {"records", std::move(records)},
           {"boxes", r.final_boxes},
           {"graph", r.final_topo}};
}

Json box_map_json(const BoxSet& boxes, const TopoGraph& topo) {
  return Json{{"boxes", boxes}, {"graph", topo}};
}

std::string dump_compact(const Json& j) { return j.dump(); }

}  // namespace boxmap
