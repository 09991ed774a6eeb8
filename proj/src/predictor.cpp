#include "boxmap/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <thread>

#include "boxmap/error.hpp"

namespace boxmap {

// ---------------------------------------------------------------------------
// Oracle

double visible_fraction(const RoomBox& room, const OccupancyGrid& observed, const LocalFrame& frame) {
  const int xa = static_cast<int>(std::floor(room.x0)) + 1;
  const int xb = static_cast<int>(std::ceil(room.x1)) - 1;
  const int ya = static_cast<int>(std::floor(room.y0)) + 1;
  const int yb = static_cast<int>(std::ceil(room.y1)) - 1;
  std::size_t total = 0;
  std::size_t known = 0;
  for (int y = ya; y <= yb; ++y) {
    for (int x = xa; x <= xb; ++x) {
      if (!room.strictly_contains({double(x), double(y)})) continue;
      ++total;
      const CellIndex l = frame.to_local(CellIndex{x, y});
      if (observed.contains(l) && observed.at(l) != Cell::kUnknown) ++known;
    }
  }
  return total == 0 ? 0.0 : double(known) / double(total);
}

namespace {

double door_visible_fraction(const DoorBox& d, const OccupancyGrid& observed, const LocalFrame& frame) {
  const int half = static_cast<int>(std::floor(d.size / 2.0));
  const CellIndex c = nearest_cell(d.center);
  std::size_t total = 0;
  std::size_t known = 0;
  for (int y = c.y - half; y <= c.y + half; ++y) {
    for (int x = c.x - half; x <= c.x + half; ++x) {
      ++total;
      const CellIndex l = frame.to_local(CellIndex{x, y});
      if (observed.contains(l) && observed.at(l) != Cell::kUnknown) ++known;
    }
  }
  return double(known) / double(total);
}

}  // namespace

OraclePredictor::OraclePredictor(BoxSet annotations, std::vector<int> groups, OracleConfig cfg)
    : annotations_(std::move(annotations)), groups_(std::move(groups)), cfg_(cfg) {
  if (annotations_.rooms.empty()) throw MissingAnnotations("oracle predictor needs annotated rooms");
  if (groups_.empty()) {
    groups_.resize(annotations_.rooms.size());
    for (std::size_t i = 0; i < groups_.size(); ++i) groups_[i] = static_cast<int>(i);
  }
  if (groups_.size() != annotations_.rooms.size()) {
    throw InvalidBoxSet("oracle groups must list one id per room box");
  }
}

BoxSet OraclePredictor::predict(const PredictorInput& input) const {
  if (input.prior.width() != input.laser.width() || input.prior.height() != input.laser.height()) {
    throw GeometryMismatch("predictor inputs differ in size");
  }
  const OccupancyGrid observed = accumulate(input.prior, input.laser);
  const std::size_t n = annotations_.rooms.size();
  std::vector<bool> seen(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    seen[i] = visible_fraction(annotations_.rooms[i], observed, input.frame) >= cfg_.rho;
  }
  if (cfg_.doors_reveal_rooms) {
    for (const DoorBox& d : annotations_.doors) {
      if (door_visible_fraction(d, observed, input.frame) >= cfg_.rho) {
        seen[d.rooms[0]] = true;
        seen[d.rooms[1]] = true;
      }
    }
  }
  auto spread_groups = [&] {
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (groups_[j] == groups_[i]) seen[j] = true;
      }
    }
  };
  spread_groups();
  if (cfg_.reveal_neighbours) {
    const std::vector<bool> direct = seen;
    for (const DoorBox& d : annotations_.doors) {
      if (direct[d.rooms[0]] || direct[d.rooms[1]]) {
        seen[d.rooms[0]] = true;
        seen[d.rooms[1]] = true;
      }
    }
    spread_groups();
  }

  BoxSet out = annotations_;
  for (std::size_t i = 0; i < n; ++i) out.rooms[i].q = seen[i] ? 1.0 : 0.0;
  for (DoorBox& d : out.doors) d.q = seen[d.rooms[0]] && seen[d.rooms[1]] ? 1.0 : 0.0;
  if (cfg_.noise > 0.0) {
    std::mt19937_64 rng(cfg_.seed ^ (std::uint64_t(std::uint32_t(input.frame.offset_x)) << 32 |
                                     std::uint32_t(input.frame.offset_y)));
    std::uniform_real_distribution<double> jitter(-cfg_.noise, cfg_.noise);
    for (RoomBox& r : out.rooms) {
      r.x0 += jitter(rng);
      r.y0 += jitter(rng);
      r.x1 += jitter(rng);
      r.y1 += jitter(rng);
      if (r.x0 > r.x1) r.x0 = r.x1 = (r.x0 + r.x1) / 2.0;
      if (r.y0 > r.y1) r.y0 = r.y1 = (r.y0 + r.y1) / 2.0;
    }
    for (DoorBox& d : out.doors) d.center = d.center + Point2{jitter(rng), jitter(rng)};
  }
  while (out.budget() < cfg_.budget) out.rooms.push_back(RoomBox{});
  return out;
}

// ---------------------------------------------------------------------------
// Fitter

BoxSet project(const BoxSet& boxes, int width, int height) {
  BoxSet out = boxes;
  const double xmax = width - 1;
  const double ymax = height - 1;
  for (RoomBox& r : out.rooms) {
    r.x0 = std::clamp(r.x0, 0.0, xmax);
    r.x1 = std::clamp(r.x1, 0.0, xmax);
    r.y0 = std::clamp(r.y0, 0.0, ymax);
    r.y1 = std::clamp(r.y1, 0.0, ymax);
    if (r.x0 > r.x1) r.x0 = r.x1 = (r.x0 + r.x1) / 2.0;
    if (r.y0 > r.y1) r.y0 = r.y1 = (r.y0 + r.y1) / 2.0;
    r.q = std::clamp(r.q, 0.0, 1.0);
  }
  for (DoorBox& d : out.doors) {
    d.center.x = std::clamp(d.center.x, 0.0, xmax);
    d.center.y = std::clamp(d.center.y, 0.0, ymax);
    d.size = std::clamp(d.size, 1.0, double(std::max(width, height)));
    d.q = std::clamp(d.q, 0.0, 1.0);
  }
  return out;
}

namespace {

struct Component {
  int min_x, min_y, max_x, max_y;
  std::size_t cells;
  double sum_x, sum_y;
};

template <typename Pred>
std::vector<Component> components(int w, int h, Pred inside) {
  std::vector<std::uint8_t> seen(std::size_t(w) * h, 0);
  std::vector<Component> out;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (seen[std::size_t(y) * w + x] || !inside(x, y)) continue;
      Component c{x, y, x, y, 0, 0.0, 0.0};
      std::queue<CellIndex> q;
      q.push({x, y});
      seen[std::size_t(y) * w + x] = 1;
      while (!q.empty()) {
        const CellIndex p = q.front();
        q.pop();
        ++c.cells;
        c.sum_x += p.x;
        c.sum_y += p.y;
        c.min_x = std::min(c.min_x, p.x);
        c.max_x = std::max(c.max_x, p.x);
        c.min_y = std::min(c.min_y, p.y);
        c.max_y = std::max(c.max_y, p.y);
        for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          const int nx = p.x + dx, ny = p.y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          auto& s = seen[std::size_t(ny) * w + nx];
          if (s || !inside(nx, ny)) continue;
          s = 1;
          q.push({nx, ny});
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

double sign(double v) { return v > 0.0 ? 1.0 : v < 0.0 ? -1.0 : 0.0; }

// Distance from p to the outline of b.
double boundary_distance(const RoomBox& b, Point2 p) {
  const double dx = std::max({b.x0 - p.x, 0.0, p.x - b.x1});
  const double dy = std::max({b.y0 - p.y, 0.0, p.y - b.y1});
  if (dx > 0.0 || dy > 0.0) return std::hypot(dx, dy);
  return std::min({p.x - b.x0, b.x1 - p.x, p.y - b.y0, b.y1 - p.y});
}

std::vector<DoorBox> seed_doors(const BoxSet& rooms, const TsdfGrid& truth, const FitterConfig& cfg) {
  const double gamma = truth.gamma();
  const int w = truth.width(), h = truth.height();
  std::vector<double> residual(std::size_t(w) * h);
  std::vector<std::uint8_t> band(std::size_t(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double c = composite_tsdf(rooms, {double(x), double(y)}, gamma);
      residual[std::size_t(y) * w + x] = truth.at(x, y) - c;
      band[std::size_t(y) * w + x] = std::abs(c) <= cfg.loss.wall_band;
    }
  }
  std::vector<DoorBox> doors;
  const auto comps = components(w, h, [&](int x, int y) {
    const std::size_t i = std::size_t(y) * w + x;
    return band[i] && residual[i] > 0.5;
  });
  for (const Component& c : comps) {
    if (c.cells < 2) continue;
    const Point2 center{c.sum_x / c.cells, c.sum_y / c.cells};
    std::vector<std::pair<double, int>> near;
    for (int i = 0; i < rooms.budget(); ++i) {
      if (!rooms.rooms[i].active()) continue;
      const double d = boundary_distance(rooms.rooms[i], center);
      if (d <= 1.5) near.push_back({d, i});
    }
    if (near.size() < 2) continue;
    std::sort(near.begin(), near.end());
    DoorBox d;
    d.center = center;
    d.size = cfg.door_size;
    d.q = 1.0;
    d.rooms = {near[0].second, near[1].second};
    doors.push_back(d);
  }
  return doors;
}

BoxSet jittered(const BoxSet& b, std::mt19937_64& rng, double amount) {
  std::uniform_real_distribution<double> u(-amount, amount);
  BoxSet out = b;
  for (RoomBox& r : out.rooms) {
    if (!r.active()) continue;
    r.x0 += u(rng);
    r.y0 += u(rng);
    r.x1 += u(rng);
    r.y1 += u(rng);
  }
  for (DoorBox& d : out.doors) d.center = d.center + Point2{u(rng), u(rng)};
  return out;
}

struct PhaseResult {
  BoxSet best;
  double best_loss;
};

// Sign steps with a per-parameter length: a sign flip halves that parameter's
// step and skips its update, agreement grows it back toward the scheduled cap.
PhaseResult descend(BoxSet cur, const TsdfGrid& truth, const WallMask& walls, const FitterConfig& cfg,
                    int phase, std::vector<FitTraceEntry>& trace) {
  LossTerms terms;
  if (phase == 1) {
    terms.door = false;
  } else {
    terms = LossTerms{false, false, true, false, false};
  }
  // Parameters updated in this phase, by index into pack(): rooms first, then doors.
  const std::size_t n_room = cur.rooms.size() * 5;
  const std::size_t n_all = n_room + cur.doors.size() * 4;
  const std::size_t lo = phase == 1 ? 0 : n_room;
  const std::size_t hi = phase == 1 ? n_room : n_all;
  auto is_gate = [&](std::size_t k) { return k < n_room ? k % 5 == 4 : (k - n_room) % 4 == 3; };

  std::vector<double> steps(n_all, cfg.step);
  std::vector<double> prev(n_all, 0.0);
  PhaseResult out{cur, std::numeric_limits<double>::infinity()};
  int last_improve = 0;
  for (int it = 0; it < cfg.max_iters; ++it) {
    const LossReport rep = loss_total(cur, truth, walls, cfg.loss, terms);
    if (!std::isfinite(rep.total)) {
      throw Diverged("phase " + std::to_string(phase) + " iteration " + std::to_string(it));
    }
    if (rep.total < out.best_loss - cfg.tol * std::max(1.0, std::abs(rep.total))) {
      out.best_loss = rep.total;
      out.best = cur;
      last_improve = it;
    }
    trace.push_back({phase, it, rep.total, out.best_loss});
    if (it - last_improve > cfg.patience) break;
    const double cap = cfg.step * std::pow(cfg.decay, it / cfg.decay_every);
    std::vector<double> theta = pack(cur);
    const std::vector<double> grad = pack(rep.gradient);
    for (std::size_t k = lo; k < hi; ++k) {
      const double g = sign(grad[k]);
      if (g * prev[k] < 0.0) {
        steps[k] = std::max(steps[k] * 0.5, 1e-6);
        prev[k] = 0.0;
        continue;
      }
      steps[k] = std::min(steps[k] * 1.2, cap);
      theta[k] -= (is_gate(k) ? cfg.gate_step_scale : 1.0) * steps[k] * g;
      prev[k] = g;
    }
    cur = project(unpack(cur, theta), truth.width(), truth.height());
  }
  return out;
}

FitResult fit_once(const BoxSet& start, const TsdfGrid& truth, const WallMask& walls,
                   const FitterConfig& cfg, bool seed_door_phase) {
  FitResult r;
  BoxSet cur = project(start, truth.width(), truth.height());
  PhaseResult p1 = descend(cur, truth, walls, cfg, 1, r.trace);
  cur = p1.best;
  if (cfg.fit_doors) {
    const std::vector<DoorBox> seeds = seed_doors(cur, truth, cfg);
    if (seed_door_phase) {
      cur.doors = seeds;
    } else {
      // A diamond that misses the opening sees a flat loss, so provided doors
      // start from the nearest residual blob when one is close.
      for (DoorBox& d : cur.doors) {
        const DoorBox* best = nullptr;
        for (const DoorBox& s : seeds) {
          if (distance(s.center, d.center) <= d.size + 3.0 &&
              (!best || distance(s.center, d.center) < distance(best->center, d.center))) {
            best = &s;
          }
        }
        if (best) d.center = best->center;
      }
    }
    if (!cur.doors.empty()) cur = descend(cur, truth, walls, cfg, 2, r.trace).best;
  }
  r.boxes = cur;
  r.report = loss_total(cur, truth, walls, cfg.loss);
  if (!std::isfinite(r.report.total)) throw Diverged("final loss is not finite");
  return r;
}

}  // namespace

BoxSet initial_boxes(const TsdfGrid& truth, int budget, double level) {
  auto comps = components(truth.width(), truth.height(),
                          [&](int x, int y) { return truth.at(x, y) >= level; });
  std::erase_if(comps, [](const Component& c) { return c.cells < 4; });
  std::stable_sort(comps.begin(), comps.end(), [](const Component& a, const Component& b) {
    return (a.max_x - a.min_x + 1) * (a.max_y - a.min_y + 1) >
           (b.max_x - b.min_x + 1) * (b.max_y - b.min_y + 1);
  });
  const double grow = std::ceil(level);
  BoxSet out;
  for (const Component& c : comps) {
    if (out.budget() >= budget) break;
    out.rooms.push_back({c.min_x - grow, c.min_y - grow, c.max_x + grow, c.max_y + grow, 1.0});
  }
  while (out.budget() < budget) out.rooms.push_back(RoomBox{});
  return project(out, truth.width(), truth.height());
}

FitResult fit_boxes(const TsdfGrid& truth, const FitterConfig& cfg, const std::optional<BoxSet>& init) {
  if (cfg.max_iters < 1) throw Error("FitterConfig: max_iters must be >= 1");
  if (cfg.restarts < 1) throw Error("FitterConfig: restarts must be >= 1");
  const WallMask walls = WallMask::from_tsdf(truth);
  BoxSet start = init ? *init : initial_boxes(truth, cfg.budget, cfg.init_level);
  start.validate();
  while (start.budget() < cfg.budget) start.rooms.push_back(RoomBox{});
  const bool seed_door_phase = !init || init->doors.empty();

  std::vector<FitResult> results(cfg.restarts);
  std::vector<std::exception_ptr> errors(cfg.restarts);
  auto run = [&](int r) {
    try {
      BoxSet s = start;
      if (r > 0) {
        std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(r));
        s = jittered(start, rng, cfg.jitter);
      }
      results[r] = fit_once(s, truth, walls, cfg, seed_door_phase);
      results[r].restart = r;
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };
  if (cfg.restarts == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int r = 0; r < cfg.restarts; ++r) pool.emplace_back(run, r);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r) {
    if (results[r].report.total < results[best].report.total) best = r;
  }
  return std::move(results[best]);
}

BoxSet FitterPredictor::predict(const PredictorInput& input) const {
  OccupancyGrid solid = accumulate(input.prior, input.laser);
  bool any_free = false;
  for (int y = 0; y < solid.height(); ++y) {
    for (int x = 0; x < solid.width(); ++x) {
      if (solid.at(x, y) == Cell::kUnknown) solid.set(x, y, Cell::kOccupied);
      any_free = any_free || solid.at(x, y) == Cell::kFree;
    }
  }
  if (!any_free) return empty_box_set(cfg_.budget);
  const TsdfGrid truth = chamfer_tsdf(solid, gamma_);
  const FitResult r = fit_boxes(truth, cfg_);
  return translated(r.boxes, input.frame.offset_x, input.frame.offset_y);
}

}  // namespace boxmap
