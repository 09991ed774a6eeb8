#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "boxmap/boxes.hpp"
#include "boxmap/grid.hpp"
#include "boxmap/losses.hpp"

namespace boxmap {

/// Robot-centred inputs of one mapping step. Both grids share the crop frame.
struct PredictorInput {
  OccupancyGrid prior;  // rasterized graph from the previous step (or M^occ for the hybrid)
  OccupancyGrid laser;  // current scan
  LocalFrame frame;
};

/// Box prediction contract. Output boxes are in world cell coordinates.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual BoxSet predict(const PredictorInput& input) const = 0;
  virtual std::string name() const = 0;
};

struct OracleConfig {
  double rho = 0.2;         // visible fraction needed to report a room
  double noise = 0.0;       // uniform coordinate jitter, +-cells
  std::uint64_t seed = 0;   // for the jitter
  int budget = kDefaultBudget;
  bool doors_reveal_rooms = true;  // a visible door reports both of its rooms
  bool reveal_neighbours = true;   // rooms one door away from a reported room are reported too
};

/// Fraction of the cells strictly inside `room` that are known (non-UNKNOWN)
/// in `observed`, a grid in `frame`. Cells outside the frame count as unknown.
double visible_fraction(const RoomBox& room, const OccupancyGrid& observed, const LocalFrame& frame);

/// Ground-truth rooms and doors filtered by what the inputs have observed.
/// Indices follow the annotations; unseen rooms keep their geometry with q = 0
/// and the set is padded with empty boxes up to the budget.
class OraclePredictor : public Predictor {
 public:
  /// `groups` assigns each annotation room box to a room; boxes of one room
  /// are reported together. Empty means one room per box.
  OraclePredictor(BoxSet annotations, std::vector<int> groups = {}, OracleConfig cfg = {});

  BoxSet predict(const PredictorInput& input) const override;
  std::string name() const override { return "oracle"; }

  const OracleConfig& config() const { return cfg_; }

 private:
  BoxSet annotations_;
  std::vector<int> groups_;
  OracleConfig cfg_;
};

struct FitterConfig {
  int budget = kDefaultBudget;
  int max_iters = 2000;          // per phase
  double step = 0.5;             // cells
  double decay = 0.5;
  int decay_every = 200;
  double gate_step_scale = 0.1;  // gate steps are this fraction of the coordinate step
  int restarts = 1;
  double jitter = 2.0;           // restart jitter, +-cells
  std::uint64_t seed = 0;
  double tol = 1e-6;             // relative improvement counted as progress
  int patience = 450;            // stop a phase after this many iterations without progress
  double init_level = 3.5;       // truth superlevel used to split rooms at doorways
  double door_size = 6.0;        // door size when seeding doors from residuals
  bool fit_doors = true;
  LossConfig loss;
};

struct FitTraceEntry {
  int phase = 1;   // 1 rooms, 2 doors
  int iter = 0;
  double loss = 0.0;
  double best = 0.0;
};

struct FitResult {
  BoxSet boxes;
  LossReport report;                 // full loss_total at the result
  std::vector<FitTraceEntry> trace;  // winning restart
  int restart = 0;
};

/// Initial rooms from the truth: connected components of {truth >= level},
/// bounding-boxed and grown by ceil(level), largest first, padded to `budget`.
BoxSet initial_boxes(const TsdfGrid& truth, int budget, double level = 3.5);

/// Projected sign-subgradient descent on loss_total. Phase 1 fits rooms and
/// gates without the door term; phase 2 fits doors with rooms frozen. Throws
/// Diverged on a non-finite loss.
FitResult fit_boxes(const TsdfGrid& truth, const FitterConfig& cfg = {},
                    const std::optional<BoxSet>& init = std::nullopt);

/// Clamps every parameter into the box invariants and the grid bounds.
BoxSet project(const BoxSet& boxes, int width, int height);

/// Fits boxes to the chamfer TSDF of the observed window (UNKNOWN treated as
/// solid) and returns them in world coordinates.
class FitterPredictor : public Predictor {
 public:
  explicit FitterPredictor(FitterConfig cfg = {}, double gamma = kDefaultGamma)
      : cfg_(cfg), gamma_(gamma) {}

  BoxSet predict(const PredictorInput& input) const override;
  std::string name() const override { return "fitter"; }

 private:
  FitterConfig cfg_;
  double gamma_;
};

}  // namespace boxmap
