#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boxmap/boxes.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/grid.hpp"
#include "boxmap/predictor.hpp"
#include "boxmap/topo.hpp"

namespace boxmap {

// Grid search --------------------------------------------------------------

/// Shortest 8-connected path through FREE cells with unit cost per move.
/// Diagonal moves need both orthogonal neighbours FREE (no corner cutting).
/// Includes both endpoints. Throws NoPath.
std::vector<CellIndex> astar(const OccupancyGrid& grid, CellIndex from, CellIndex to);
std::optional<std::vector<CellIndex>> find_path(const OccupancyGrid& grid, CellIndex from, CellIndex to);

/// Move counts from `from` to every cell under the same move rule; -1 where
/// unreachable.
std::vector<int> grid_distances(const OccupancyGrid& grid, CellIndex from);

// Graph planning ------------------------------------------------------------

std::vector<double> dijkstra(const NavGraph& nav, int source);

struct Tour {
  std::vector<int> order;  // indices into the distance matrix, excluding the start
  double cost = 0.0;
};

/// Exact open-path TSP from index 0 through every other index. Throws
/// TooManyRooms above 16 stops.
Tour held_karp(const std::vector<std::vector<double>>& dist);

struct GoalChoice {
  int node = -1;           // topo / nav room node id
  double distance = 0.0;   // nav distance from the robot
  double tour_cost = 0.0;  // receding horizon only
};

/// Rooms eligible as goals: unvisited, not excluded, one per multi-box room
/// (the member nearest the robot on the graph). Unreachable rooms are dropped.
std::vector<GoalChoice> candidate_rooms(const TopoGraph& topo, const NavGraph& nav,
                                        const std::set<int>& excluded = {});

/// Closest unvisited room on the nav graph; ties by node id.
std::optional<GoalChoice> step_greedy(const TopoGraph& topo, const NavGraph& nav,
                                      const std::set<int>& excluded = {});

/// First room of the shortest open tour over all unvisited rooms.
std::optional<GoalChoice> step_rh(const TopoGraph& topo, const NavGraph& nav,
                                  const std::set<int>& excluded = {});

// Frontier baseline ---------------------------------------------------------

struct FrontierConfig {
  double lambda = 0.02;
  double sensor_radius = 64.0;  // cells
  int min_size = 8;             // smaller frontier segments are ignored
  bool euclidean = false;       // distance term: path length (default) or straight line
};

struct Frontier {
  std::vector<CellIndex> cells;
  CellIndex candidate;
  int info = 0;
  double distance = 0.0;
  double reward = 0.0;
};

/// FREE cells 4-adjacent to UNKNOWN, grouped 8-connected, with size >= min_size.
std::vector<Frontier> find_frontiers(const OccupancyGrid& map, int min_size = 8);

/// Highest-reward reachable frontier, R = lambda * I - d. Frontiers whose
/// candidate is in `exclude_near` (within 2 cells) are skipped.
std::optional<Frontier> frontier_baseline_step(const OccupancyGrid& map, CellIndex robot,
                                               const FrontierConfig& cfg = {},
                                               const std::vector<CellIndex>& exclude_near = {});

// Episodes ------------------------------------------------------------------

enum class Strategy { kGreedy, kRecedingHorizon, kFrontier, kHybrid };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& s);
bool uses_boxes(Strategy s);

struct EpisodeConfig {
  Strategy strategy = Strategy::kGreedy;
  int max_updates = 50;
  int crop = 128;
  LaserConfig laser;
  TopoConfig topo;
  NavConfig nav;
  FrontierConfig frontier;
  int stuck_limit = 2;
  bool prior_as_evidence = true;  // rasterized prior counts as door evidence
  bool carry_over = true;         // keep rooms that left the crop window
};

enum class EpisodeStatus { kComplete, kTimeout };

std::string to_string(EpisodeStatus s);

struct StepRecord {
  int update = 0;
  CellIndex pose;
  int goal = -1;       // topo node id, -1 for frontier moves
  int path_moves = 0;
  bool fallback = false;
};

struct EpisodeResult {
  Strategy strategy = Strategy::kGreedy;
  std::uint64_t seed = 0;
  CellIndex start;
  EpisodeStatus status = EpisodeStatus::kComplete;
  int steps = 0;
  int updates = 0;
  std::vector<CellIndex> poses;  // measurement poses
  std::vector<StepRecord> records;
  BoxSet final_boxes;
  TopoGraph final_topo;
  OccupancyGrid final_map;  // accumulated scans
  int rooms_total = 0;
  int rooms_visited = 0;  // ground-truth rooms containing a measurement pose
};

/// Called after each update with the update index, accumulated map and boxes.
using FrameCallback = std::function<void(int, const OccupancyGrid&, const BoxSet&)>;

/// Merges rooms of `prev` that are not fully inside `frame` into `current`
/// when no active current room matches them (IoU > 0.5), with their doors.
BoxSet carry_over(const BoxSet& prev, const BoxSet& current, const LocalFrame& frame);

/// Runs the exploration loop from `start` until no unvisited rooms (or
/// frontiers) remain or max_updates scans have been taken.
EpisodeResult run_episode(const Floorplan& fp, CellIndex start, const Predictor& predictor,
                          const EpisodeConfig& cfg, std::uint64_t seed = 0,
                          const FrameCallback& on_frame = {});

/// Ground-truth rooms (groups) whose boxes contain any of the poses.
int rooms_covered(const Floorplan& fp, const std::vector<CellIndex>& poses);

}  // namespace boxmap
