#pragma once

#include <string>

#include "json.hpp"

#include "boxmap/boxes.hpp"
#include "boxmap/explore.hpp"
#include "boxmap/losses.hpp"
#include "boxmap/topo.hpp"

namespace boxmap {

using Json = nlohmann::json;

// BoxSet schema:
//   {"rooms":[{"x0","y0","x1","y1","q"}...],
//    "doors":[{"cx","cy","s","q","rooms":[i,j]}...]}
void to_json(Json& j, const RoomBox& r);
void from_json(const Json& j, RoomBox& r);
void to_json(Json& j, const DoorBox& d);
void from_json(const Json& j, DoorBox& d);
void to_json(Json& j, const BoxSet& b);
void from_json(const Json& j, BoxSet& b);

void to_json(Json& j, const LossReport& r);

// Graph schema: nodes carry ids in their stored (row-major) order.
//   topo: {"nodes":[{"id","box","x","y","w","h","group","visited"}...],
//          "edges":[{"kind":"overlap"|"door","a","b","door"}...]}
//   nav:  {"nodes":[{"id","kind","x","y","ref"}...],"edges":[{"a","b","w"}...],"robot"}
void to_json(Json& j, const TopoGraph& t);
void to_json(Json& j, const NavGraph& n);

/// Summary of an episode: counters, pose log, final boxes and graph. The
/// accumulated map is left out.
void to_json(Json& j, const EpisodeResult& r);

/// The BoxMap map representation: {"boxes": ..., "graph": ...}.
Json box_map_json(const BoxSet& boxes, const TopoGraph& topo);

/// Compact one-line dump.
std::string dump_compact(const Json& j);

}  // namespace boxmap
