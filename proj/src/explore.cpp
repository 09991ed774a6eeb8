#include "boxmap/explore.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <tuple>

#include "boxmap/error.hpp"

namespace boxmap {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lexicographic (dx, dy) order; fixes the A* and BFS tie-breaks.
constexpr int kMoves[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}};

bool can_move(const OccupancyGrid& g, CellIndex c, int dx, int dy) {
  const int nx = c.x + dx;
  const int ny = c.y + dy;
  if (!g.contains(nx, ny) || g.at(nx, ny) != Cell::kFree) return false;
  if (dx != 0 && dy != 0) {
    return g.at(c.x + dx, c.y) == Cell::kFree && g.at(c.x, c.y + dy) == Cell::kFree;
  }
  return true;
}

std::size_t flat(const OccupancyGrid& g, CellIndex c) {
  return static_cast<std::size_t>(c.y) * g.width() + c.x;
}

int chebyshev(CellIndex a, CellIndex b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

}  // namespace

std::optional<std::vector<CellIndex>> find_path(const OccupancyGrid& grid, CellIndex from, CellIndex to) {
  if (!grid.contains(from) || !grid.contains(to)) return std::nullopt;
  if (grid.at(from) != Cell::kFree || grid.at(to) != Cell::kFree) return std::nullopt;
  if (from == to) return std::vector<CellIndex>{from};

  const std::size_t n = grid.geometry().size();
  std::vector<int> g(n, std::numeric_limits<int>::max());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<char> closed(n, 0);
  // (f, g, y, x): smaller f first, then larger g is not preferred; row-major order breaks ties.
  using Entry = std::tuple<int, int, int, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  g[flat(grid, from)] = 0;
  open.emplace(chebyshev(from, to), 0, from.y, from.x);
  while (!open.empty()) {
    const auto [f, gc, y, x] = open.top();
    open.pop();
    const CellIndex c{x, y};
    const std::size_t ci = flat(grid, c);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (c == to) break;
    for (const auto& m : kMoves) {
      if (!can_move(grid, c, m[0], m[1])) continue;
      const CellIndex nb{x + m[0], y + m[1]};
      const std::size_t ni = flat(grid, nb);
      if (closed[ni] || gc + 1 >= g[ni]) continue;
      g[ni] = gc + 1;
      parent[ni] = static_cast<std::int64_t>(ci);
      open.emplace(gc + 1 + chebyshev(nb, to), gc + 1, nb.y, nb.x);
    }
  }
  const std::size_t ti = flat(grid, to);
  if (!closed[ti]) return std::nullopt;
  std::vector<CellIndex> path;
  for (std::int64_t i = static_cast<std::int64_t>(ti); i >= 0; i = parent[static_cast<std::size_t>(i)]) {
    path.push_back({static_cast<int>(i % grid.width()), static_cast<int>(i / grid.width())});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<CellIndex> astar(const OccupancyGrid& grid, CellIndex from, CellIndex to) {
  auto p = find_path(grid, from, to);
  if (!p) throw NoPath("no path between the requested cells");
  return std::move(*p);
}

std::vector<int> grid_distances(const OccupancyGrid& grid, CellIndex from) {
  std::vector<int> dist(grid.geometry().size(), -1);
  if (!grid.contains(from) || grid.at(from) != Cell::kFree) return dist;
  std::deque<CellIndex> queue{from};
  dist[flat(grid, from)] = 0;
  while (!queue.empty()) {
    const CellIndex c = queue.front();
    queue.pop_front();
    const int d = dist[flat(grid, c)];
    for (const auto& m : kMoves) {
      if (!can_move(grid, c, m[0], m[1])) continue;
      const CellIndex nb{c.x + m[0], c.y + m[1]};
      int& nd = dist[flat(grid, nb)];
      if (nd >= 0) continue;
      nd = d + 1;
      queue.push_back(nb);
    }
  }
  return dist;
}

std::vector<double> dijkstra(const NavGraph& nav, int source) {
  const auto adj = nav.adjacency();
  std::vector<double> dist(nav.nodes.size(), kInf);
  if (source < 0 || source >= static_cast<int>(nav.nodes.size())) return dist;
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  dist[static_cast<std::size_t>(source)] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    for (const auto& [v, w] : adj[static_cast<std::size_t>(u)]) {
      const double nd = d + w;
      if (nd < dist[static_cast<std::size_t>(v)]) {
        dist[static_cast<std::size_t>(v)] = nd;
        pq.emplace(nd, v);
      }
    }
  }
  return dist;
}

Tour held_karp(const std::vector<std::vector<double>>& dist) {
  const int n = static_cast<int>(dist.size());
  Tour tour;
  if (n <= 1) return tour;
  const int k = n - 1;
  if (k > 16) throw TooManyRooms("held_karp supports at most 16 stops, got " + std::to_string(k));
  const std::size_t states = std::size_t{1} << k;
  std::vector<double> dp(states * k, kInf);
  std::vector<int> prev(states * k, -1);
  for (int j = 0; j < k; ++j) dp[(std::size_t{1} << j) * k + j] = dist[0][j + 1];
  for (std::size_t mask = 1; mask < states; ++mask) {
    for (int j = 0; j < k; ++j) {
      if (!(mask & (std::size_t{1} << j))) continue;
      const double cur = dp[mask * k + j];
      if (!std::isfinite(cur)) continue;
      for (int t = 0; t < k; ++t) {
        if (mask & (std::size_t{1} << t)) continue;
        const std::size_t next = mask | (std::size_t{1} << t);
        const double cand = cur + dist[j + 1][t + 1];
        if (cand < dp[next * k + t]) {
          dp[next * k + t] = cand;
          prev[next * k + t] = j;
        }
      }
    }
  }
  const std::size_t full = states - 1;
  int last = -1;
  double best = kInf;
  for (int j = 0; j < k; ++j) {
    if (dp[full * k + j] < best) {
      best = dp[full * k + j];
      last = j;
    }
  }
  if (last < 0) {
    tour.cost = kInf;
    return tour;
  }
  tour.cost = best;
  std::size_t mask = full;
  for (int j = last; j >= 0;) {
    tour.order.push_back(j + 1);
    const int p = prev[mask * k + j];
    mask &= ~(std::size_t{1} << j);
    j = p;
  }
  std::reverse(tour.order.begin(), tour.order.end());
  return tour;
}

std::vector<GoalChoice> candidate_rooms(const TopoGraph& topo, const NavGraph& nav,
                                        const std::set<int>& excluded) {
  const auto dist = dijkstra(nav, nav.robot);
  std::map<int, GoalChoice> by_group;
  for (std::size_t i = 0; i < topo.nodes.size(); ++i) {
    const TopoNode& node = topo.nodes[i];
    const int id = static_cast<int>(i);
    if (node.visited || excluded.count(id) || !std::isfinite(dist[i])) continue;
    auto it = by_group.find(node.group);
    if (it == by_group.end() || dist[i] < it->second.distance) {
      by_group[node.group] = GoalChoice{id, dist[i], 0.0};
    }
  }
  std::vector<GoalChoice> out;
  for (const auto& [g, c] : by_group) out.push_back(c);
  std::sort(out.begin(), out.end(), [](const GoalChoice& a, const GoalChoice& b) { return a.node < b.node; });
  return out;
}

std::optional<GoalChoice> step_greedy(const TopoGraph& topo, const NavGraph& nav, const std::set<int>& excluded) {
  const auto cands = candidate_rooms(topo, nav, excluded);
  std::optional<GoalChoice> best;
  for (const auto& c : cands) {
    if (!best || c.distance < best->distance) best = c;
  }
  return best;
}

std::optional<GoalChoice> step_rh(const TopoGraph& topo, const NavGraph& nav, const std::set<int>& excluded) {
  const auto cands = candidate_rooms(topo, nav, excluded);
  if (cands.empty()) return std::nullopt;
  if (cands.size() > 16) throw TooManyRooms("too many unvisited rooms for the exact tour: " + std::to_string(cands.size()));
  std::vector<int> stops{nav.robot};
  for (const auto& c : cands) stops.push_back(c.node);
  std::vector<std::vector<double>> dist(stops.size(), std::vector<double>(stops.size(), 0.0));
  for (std::size_t i = 0; i < stops.size(); ++i) {
    const auto d = dijkstra(nav, stops[i]);
    for (std::size_t j = 0; j < stops.size(); ++j) dist[i][j] = d[static_cast<std::size_t>(stops[j])];
  }
  const Tour t = held_karp(dist);
  if (t.order.empty()) return std::nullopt;
  GoalChoice out = cands[static_cast<std::size_t>(t.order.front() - 1)];
  out.tour_cost = t.cost;
  return out;
}

std::vector<Frontier> find_frontiers(const OccupancyGrid& map, int min_size) {
  const int w = map.width();
  const int h = map.height();
  auto is_frontier = [&](int x, int y) {
    if (map.at(x, y) != Cell::kFree) return false;
    constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    for (const auto& d : d4) {
      const int nx = x + d[0];
      const int ny = y + d[1];
      if (map.contains(nx, ny) && map.at(nx, ny) == Cell::kUnknown) return true;
    }
    return false;
  };
  std::vector<char> mark(map.geometry().size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) mark[static_cast<std::size_t>(y) * w + x] = is_frontier(x, y) ? 1 : 0;
  }
  std::vector<Frontier> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (mark[static_cast<std::size_t>(y) * w + x] != 1) continue;
      Frontier f;
      std::deque<CellIndex> queue{{x, y}};
      mark[static_cast<std::size_t>(y) * w + x] = 2;
      while (!queue.empty()) {
        const CellIndex c = queue.front();
        queue.pop_front();
        f.cells.push_back(c);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = c.x + dx;
            const int ny = c.y + dy;
            if (!map.contains(nx, ny)) continue;
            char& m = mark[static_cast<std::size_t>(ny) * w + nx];
            if (m != 1) continue;
            m = 2;
            queue.push_back({nx, ny});
          }
        }
      }
      if (static_cast<int>(f.cells.size()) < min_size) continue;
      std::sort(f.cells.begin(), f.cells.end(),
                [](CellIndex a, CellIndex b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); });
      Point2 mean{0.0, 0.0};
      for (const auto& c : f.cells) mean = mean + to_point(c);
      mean = (1.0 / static_cast<double>(f.cells.size())) * mean;
      double best = kInf;
      for (const auto& c : f.cells) {
        const double d = distance(to_point(c), mean);
        if (d < best) {
          best = d;
          f.candidate = c;
        }
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

namespace {

int unknown_within(const OccupancyGrid& map, CellIndex c, double radius) {
  const int r = static_cast<int>(std::floor(radius));
  const double r2 = radius * radius;
  int count = 0;
  for (int y = std::max(0, c.y - r); y <= std::min(map.height() - 1, c.y + r); ++y) {
    for (int x = std::max(0, c.x - r); x <= std::min(map.width() - 1, c.x + r); ++x) {
      const double dx = x - c.x;
      const double dy = y - c.y;
      if (dx * dx + dy * dy <= r2 && map.at(x, y) == Cell::kUnknown) ++count;
    }
  }
  return count;
}

}  // namespace

std::optional<Frontier> frontier_baseline_step(const OccupancyGrid& map, CellIndex robot, const FrontierConfig& cfg,
                                               const std::vector<CellIndex>& exclude_near) {
  if (cfg.lambda < 0.0) throw std::invalid_argument("frontier lambda must be non-negative");
  auto frontiers = find_frontiers(map, cfg.min_size);
  if (frontiers.empty()) return std::nullopt;
  const auto dist = grid_distances(map, robot);
  std::optional<Frontier> best;
  for (auto& f : frontiers) {
    const bool near_seen = std::any_of(exclude_near.begin(), exclude_near.end(),
                                       [&](CellIndex p) { return chebyshev(p, f.candidate) <= 2; });
    if (near_seen) continue;
    const int d = dist[flat(map, f.candidate)];
    if (d < 0) continue;
    f.distance = cfg.euclidean ? distance(to_point(robot), to_point(f.candidate)) : static_cast<double>(d);
    f.info = unknown_within(map, f.candidate, cfg.sensor_radius);
    f.reward = cfg.lambda * f.info - f.distance;
    if (!best || f.reward > best->reward || (f.reward == best->reward && f.distance < best->distance)) {
      best = f;
    }
  }
  return best;
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kGreedy: return "greedy";
    case Strategy::kRecedingHorizon: return "rh";
    case Strategy::kFrontier: return "frontier";
    case Strategy::kHybrid: return "hybrid";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& s) {
  if (s == "greedy") return Strategy::kGreedy;
  if (s == "rh") return Strategy::kRecedingHorizon;
  if (s == "frontier") return Strategy::kFrontier;
  if (s == "hybrid") return Strategy::kHybrid;
  throw std::invalid_argument("unknown strategy: " + s);
}

bool uses_boxes(Strategy s) { return s != Strategy::kFrontier; }

std::string to_string(EpisodeStatus s) { return s == EpisodeStatus::kComplete ? "complete" : "timeout"; }

BoxSet carry_over(const BoxSet& prev, const BoxSet& current, const LocalFrame& frame) {
  BoxSet out = current;
  const int n_prev = prev.budget();
  std::vector<int> map_to(static_cast<std::size_t>(n_prev), -1);
  auto inside_window = [&](const RoomBox& b) {
    return b.x0 >= frame.offset_x && b.y0 >= frame.offset_y && b.x1 <= frame.offset_x + frame.size - 1 &&
           b.y1 <= frame.offset_y + frame.size - 1;
  };
  auto best_active_match = [&](const RoomBox& b) {
    int idx = -1;
    double best = 0.5;
    for (int j = 0; j < out.budget(); ++j) {
      const RoomBox& c = out.rooms[static_cast<std::size_t>(j)];
      if (!c.active()) continue;
      const double v = iou(b, c);
      if (v > best) {
        best = v;
        idx = j;
      }
    }
    return idx;
  };
  for (int i = 0; i < n_prev; ++i) {
    const RoomBox& p = prev.rooms[static_cast<std::size_t>(i)];
    if (!p.active()) continue;
    const int match = best_active_match(p);
    if (match >= 0) {
      map_to[static_cast<std::size_t>(i)] = match;
      continue;
    }
    if (inside_window(p)) continue;
    // Reuse the inactive slot that best overlaps it, else an unused one, else append.
    auto referenced = [&](int j) {
      return std::any_of(out.doors.begin(), out.doors.end(), [&](const DoorBox& d) {
        return d.active() && (d.rooms[0] == j || d.rooms[1] == j);
      });
    };
    int slot = -1;
    double best = 0.5;
    for (int j = 0; j < out.budget(); ++j) {
      const RoomBox& c = out.rooms[static_cast<std::size_t>(j)];
      if (c.active()) continue;
      const double v = iou(p, c);
      if (v > best) {
        best = v;
        slot = j;
      }
    }
    for (int j = 0; slot < 0 && j < out.budget(); ++j) {
      const RoomBox& c = out.rooms[static_cast<std::size_t>(j)];
      if (!c.active() && c.area() == 0.0 && !referenced(j)) slot = j;
    }
    if (slot < 0) {
      out.rooms.push_back(p);
      slot = out.budget() - 1;
    } else {
      out.rooms[static_cast<std::size_t>(slot)] = p;
    }
    map_to[static_cast<std::size_t>(i)] = slot;
  }
  for (const DoorBox& d : prev.doors) {
    if (!d.active()) continue;
    const int a = map_to[static_cast<std::size_t>(d.rooms[0])];
    const int b = map_to[static_cast<std::size_t>(d.rooms[1])];
    if (a < 0 || b < 0 || a == b) continue;
    const bool present = std::any_of(out.doors.begin(), out.doors.end(), [&](const DoorBox& o) {
      return o.active() && std::abs(o.center.x - d.center.x) + std::abs(o.center.y - d.center.y) <= 2.0;
    });
    if (present) continue;
    DoorBox moved = d;
    moved.rooms = {a, b};
    out.doors.push_back(moved);
  }
  return out;
}

int rooms_covered(const Floorplan& fp, const std::vector<CellIndex>& poses) {
  std::set<int> groups;
  for (std::size_t i = 0; i < fp.annotations.rooms.size(); ++i) {
    const RoomBox& r = fp.annotations.rooms[i];
    if (!r.active()) continue;
    const int g = i < fp.groups.size() ? fp.groups[i] : static_cast<int>(i);
    for (const auto& p : poses) {
      if (r.contains(to_point(p))) {
        groups.insert(g);
        break;
      }
    }
  }
  return static_cast<int>(groups.size());
}

namespace {

std::vector<Point2> as_points(const std::vector<CellIndex>& cells) {
  std::vector<Point2> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(to_point(c));
  return out;
}

struct GoalCell {
  CellIndex cell;
  bool inside = false;
};

// Reachable FREE cell in the room box nearest to the target, else the
// reachable cell nearest to the target.
std::optional<GoalCell> choose_goal_cell(const OccupancyGrid& map, const std::vector<int>& dist,
                                         const RoomBox& box, Point2 target) {
  std::optional<GoalCell> inside, any;
  double best_in = kInf, best_any = kInf;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (dist[static_cast<std::size_t>(y) * map.width() + x] < 0) continue;
      const Point2 p{static_cast<double>(x), static_cast<double>(y)};
      const double d = distance(p, target);
      if (box.strictly_contains(p) && d < best_in) {
        best_in = d;
        inside = GoalCell{{x, y}, true};
      }
      if (d < best_any) {
        best_any = d;
        any = GoalCell{{x, y}, false};
      }
    }
  }
  return inside ? inside : any;
}

class EpisodeRunner {
 public:
  EpisodeRunner(const Floorplan& fp, CellIndex start, const Predictor& predictor, const EpisodeConfig& cfg,
                std::uint64_t seed, const FrameCallback& on_frame)
      : fp_(fp), predictor_(predictor), cfg_(cfg), on_frame_(on_frame) {
    result_.strategy = cfg.strategy;
    result_.seed = seed;
    result_.start = start;
    result_.rooms_total = fp.room_count();
    pose_ = start;
    accumulated_ = OccupancyGrid(fp.world.geometry(), Cell::kUnknown);
    boxes_ = empty_box_set(0);
  }

  EpisodeResult run() {
    if (!fp_.world.contains(pose_)) throw PoseOutOfBounds("episode start outside the world");
    if (fp_.world.at(pose_) != Cell::kFree) throw PoseInObstacle("episode start is not free");
    bool done = false;
    while (!done) {
      if (result_.updates >= cfg_.max_updates) {
        result_.status = EpisodeStatus::kTimeout;
        break;
      }
      scan();
      done = uses_boxes(cfg_.strategy) ? box_step() : frontier_step();
    }
    result_.final_boxes = boxes_;
    result_.final_map = accumulated_;
    if (uses_boxes(cfg_.strategy)) result_.final_topo = topo_;
    result_.rooms_visited = rooms_covered(fp_, result_.poses);
    return std::move(result_);
  }

 private:
  void scan() {
    last_scan_ = simulate_scan(fp_.world, pose_, cfg_.laser);
    accumulated_ = accumulate(accumulated_, last_scan_);
    result_.poses.push_back(pose_);
    ++result_.updates;
    if (uses_boxes(cfg_.strategy)) predict();
    if (on_frame_) on_frame_(result_.updates, accumulated_, boxes_);
  }

  void predict() {
    const OccupancyGrid prior_world = cfg_.strategy == Strategy::kHybrid
                                          ? accumulated_
                                          : rasterize(boxes_, fp_.world.geometry(), Cell::kUnknown);
    const CropResult prior = crop_local(prior_world, pose_, cfg_.crop);
    const CropResult laser = crop_local(last_scan_, pose_, cfg_.crop);
    PredictorInput in{prior.grid, laser.grid, prior.frame};
    BoxSet next = predictor_.predict(in);
    if (cfg_.carry_over && boxes_.budget() > 0) next = carry_over(boxes_, next, prior.frame);
    const OccupancyGrid evidence =
        cfg_.prior_as_evidence ? accumulate(accumulated_, prior_world) : accumulated_;
    boxes_ = std::move(next);
    topo_ = mark_visited(build_topo(boxes_, evidence, cfg_.topo), as_points(result_.poses));
  }

  // Returns true when the episode is over.
  bool box_step() {
    const OccupancyGrid plan = planning_map();
    const auto dist = grid_distances(plan, pose_);
    if (topo_.nodes.empty()) {
      // Nothing predicted yet; look around instead.
      const auto f = frontier_baseline_step(accumulated_, pose_, cfg_.frontier, result_.poses);
      if (!f) return true;
      move_towards(accumulated_, f->candidate, -1, true);
      return false;
    }
    for (;;) {
      const std::set<int> excluded = blacklisted_nodes();
      const NavGraph nav = build_nav(topo_, to_point(pose_), cfg_.nav);
      std::optional<GoalChoice> goal = cfg_.strategy == Strategy::kGreedy ? step_greedy(topo_, nav, excluded)
                                                                          : step_rh(topo_, nav, excluded);
      bool fallback = false;
      if (!goal) {
        goal = nearest_unlinked_room(nav, excluded);
        if (!goal) return true;
        fallback = true;
      }
      const TopoNode& node = topo_.nodes[static_cast<std::size_t>(goal->node)];
      const RoomBox& box = topo_.boxes.rooms[static_cast<std::size_t>(node.box)];
      const Point2 target = nav.nodes[static_cast<std::size_t>(goal->node)].position;
      const auto cell = choose_goal_cell(plan, dist, box, target);
      if (cell && cell->inside) {
        if (move_towards(plan, cell->cell, goal->node, fallback) > 0) {
          stuck_ = 0;
          return false;
        }
      } else if (cell && stuck_ + 1 < cfg_.stuck_limit && move_towards(plan, cell->cell, goal->node, true) > 0) {
        ++stuck_;
        return false;
      }
      stuck_ = 0;
      const auto f = frontier_baseline_step(accumulated_, pose_, cfg_.frontier, result_.poses);
      if (f) {
        move_towards(accumulated_, f->candidate, -1, true);
        return false;
      }
      // Nothing left to try for this room.
      blacklist_.push_back(box.centroid());
    }
  }

  // Accumulated map with UNKNOWN cells filled from the current boxes.
  OccupancyGrid planning_map() const {
    OccupancyGrid plan = accumulated_;
    const OccupancyGrid raster = rasterize(boxes_, plan.geometry(), Cell::kUnknown);
    for (int y = 0; y < plan.height(); ++y) {
      for (int x = 0; x < plan.width(); ++x) {
        if (plan.at(x, y) == Cell::kUnknown) plan.set(x, y, raster.at(x, y));
      }
    }
    return plan;
  }

  // Node ids change with every prediction, so blacklisted rooms are
  // remembered by box centre.
  std::set<int> blacklisted_nodes() const {
    std::set<int> out;
    for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
      for (const Point2& c : blacklist_) {
        if (distance(c, topo_.nodes[i].centroid) <= 2.0) out.insert(static_cast<int>(i));
      }
    }
    return out;
  }

  // Unvisited rooms with no verified route; the nearest one by straight line.
  std::optional<GoalChoice> nearest_unlinked_room(const NavGraph& nav, const std::set<int>& excluded) const {
    std::optional<GoalChoice> best;
    for (std::size_t i = 0; i < topo_.nodes.size(); ++i) {
      const int id = static_cast<int>(i);
      if (topo_.nodes[i].visited || excluded.count(id)) continue;
      const double d = distance(to_point(pose_), nav.nodes[i].position);
      if (!best || d < best->distance) best = GoalChoice{id, d, 0.0};
    }
    return best;
  }

  bool frontier_step() {
    const auto f = frontier_baseline_step(accumulated_, pose_, cfg_.frontier, result_.poses);
    if (!f) return true;
    move_towards(accumulated_, f->candidate, -1, false);
    return false;
  }

  // Plans on `plan` and walks the part of the path that is known FREE.
  int move_towards(const OccupancyGrid& plan, CellIndex cell, int goal, bool fallback) {
    const auto path = astar(plan, pose_, cell);
    std::size_t last = 0;
    while (last + 1 < path.size() && accumulated_.at(path[last + 1]) == Cell::kFree) ++last;
    const int moves = static_cast<int>(last);
    if (moves == 0) return 0;
    result_.steps += moves;
    result_.records.push_back(StepRecord{result_.updates, pose_, goal, moves, fallback});
    pose_ = path[last];
    return moves;
  }

  const Floorplan& fp_;
  const Predictor& predictor_;
  const EpisodeConfig& cfg_;
  const FrameCallback& on_frame_;
  EpisodeResult result_;
  CellIndex pose_;
  OccupancyGrid accumulated_;
  OccupancyGrid last_scan_;
  BoxSet boxes_;
  TopoGraph topo_;
  std::vector<Point2> blacklist_;
  int stuck_ = 0;
};

}  // namespace

EpisodeResult run_episode(const Floorplan& fp, CellIndex start, const Predictor& predictor,
                          const EpisodeConfig& cfg, std::uint64_t seed, const FrameCallback& on_frame) {
  EpisodeRunner runner(fp, start, predictor, cfg, seed, on_frame);
  return runner.run();
}

}  // namespace boxmap
