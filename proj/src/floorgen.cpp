#include "boxmap/floorgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <set>

#include "boxmap/error.hpp"
#include "boxmap/pgm.hpp"
#include "boxmap/serialize.hpp"

namespace boxmap {

int Floorplan::room_count() const {
  return static_cast<int>(std::set<int>(groups.begin(), groups.end()).size());
}

namespace {

struct Rect {
  int x0, y0, x1, y1;
  int w() const { return x1 - x0; }
  int h() const { return y1 - y0; }
};

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

// Wall segment shared by two rectangles: a vertical wall at x = `at` spanning
// y in [lo, hi], or a horizontal one at y = `at` spanning x in [lo, hi].
struct Segment {
  bool vertical;
  int at, lo, hi;
};

bool shared_segment(const Rect& a, const Rect& b, Segment& s) {
  if (a.x1 == b.x0 || a.x0 == b.x1) {
    s = {true, a.x1 == b.x0 ? a.x1 : a.x0, std::max(a.y0, b.y0), std::min(a.y1, b.y1)};
    return s.hi > s.lo;
  }
  if (a.y1 == b.y0 || a.y0 == b.y1) {
    s = {false, a.y1 == b.y0 ? a.y1 : a.y0, std::max(a.x0, b.x0), std::min(a.x1, b.x1)};
    return s.hi > s.lo;
  }
  return false;
}

std::vector<Rect> guillotine(std::mt19937_64& rng, const Rect& building, int n, int min_side) {
  std::vector<Rect> rects{building};
  while (static_cast<int>(rects.size()) < n) {
    int pick = -1;
    for (int i = 0; i < static_cast<int>(rects.size()); ++i) {
      const Rect& r = rects[i];
      if (r.w() < 2 * min_side && r.h() < 2 * min_side) continue;
      if (pick < 0 || r.w() * r.h() > rects[pick].w() * rects[pick].h()) pick = i;
    }
    if (pick < 0) return {};
    const Rect r = rects[pick];
    bool vertical_cut;
    if (r.w() >= 2 * min_side && r.h() >= 2 * min_side) {
      vertical_cut = r.w() == r.h() ? chance(rng, 0.5) : r.w() > r.h();
    } else {
      vertical_cut = r.w() >= 2 * min_side;
    }
    Rect a = r, b = r;
    if (vertical_cut) {
      const int cut = uniform_int(rng, r.x0 + min_side, r.x1 - min_side);
      a.x1 = cut;
      b.x0 = cut;
    } else {
      const int cut = uniform_int(rng, r.y0 + min_side, r.y1 - min_side);
      a.y1 = cut;
      b.y0 = cut;
    }
    rects[pick] = a;
    rects.push_back(b);
  }
  return rects;
}

std::optional<Floorplan> attempt(std::mt19937_64& rng, std::uint64_t seed, const FloorgenConfig& cfg) {
  const int n = cfg.rooms;
  const int base = static_cast<int>(30.0 * std::sqrt(double(n)) + 20.0);
  const int max_side = cfg.size - 2;
  const int w = std::min(max_side, uniform_int(rng, base, base + 40));
  const int h = std::min(max_side, uniform_int(rng, base, base + 40));
  if (w < cfg.min_side || h < cfg.min_side) return std::nullopt;
  const Rect building{(cfg.size - w) / 2, (cfg.size - h) / 2, (cfg.size - w) / 2 + w,
                      (cfg.size - h) / 2 + h};
  // An L-shaped room consumes two rectangles of the partition.
  const bool want_l = n >= 2 && chance(rng, cfg.p_l_shape);
  const std::vector<Rect> rects = guillotine(rng, building, n + (want_l ? 1 : 0), cfg.min_side);
  if (rects.empty()) return std::nullopt;

  Floorplan fp;
  fp.seed = seed;
  std::vector<int> group(rects.size());
  std::iota(group.begin(), group.end(), 0);
  std::vector<Rect> boxes = rects;

  // Optional L-shaped room: B's shared edge lies within A's and is shorter, so
  // the union is an L (or T). B is stretched into A so the two boxes overlap.
  if (want_l) {
    struct Pair { int a, b; Segment s; };
    std::vector<Pair> pairs;
    for (int a = 0; a < int(rects.size()); ++a) {
      for (int b = 0; b < int(rects.size()); ++b) {
        Segment s;
        if (a == b || !shared_segment(rects[a], rects[b], s)) continue;
        const Rect& rb = rects[b];
        const Rect& ra = rects[a];
        const int b_len = s.vertical ? rb.h() : rb.w();
        const int a_len = s.vertical ? ra.h() : ra.w();
        if (s.hi - s.lo == b_len && b_len < a_len) pairs.push_back({a, b, s});
      }
    }
    if (pairs.empty()) return std::nullopt;
    {
      const Pair p = pairs[uniform_int(rng, 0, int(pairs.size()) - 1)];
      const Rect& ra = rects[p.a];
      Rect& rb = boxes[p.b];
      const int depth = p.s.vertical ? ra.w() : ra.h();
      const int ext = std::min(10, depth / 2);
      if (p.s.vertical) {
        if (rb.x0 == p.s.at) rb.x0 -= ext; else rb.x1 += ext;
      } else {
        if (rb.y0 == p.s.at) rb.y0 -= ext; else rb.y1 += ext;
      }
      group[p.b] = group[p.a];
    }
  }

  // Candidate door walls between boxes of different groups.
  struct Candidate { int i, j; Segment s; };
  std::vector<std::vector<std::vector<Candidate>>> by_pair(
      rects.size(), std::vector<std::vector<Candidate>>(rects.size()));
  const int clear = cfg.door_end_clearance;
  for (int i = 0; i < int(rects.size()); ++i) {
    for (int j = i + 1; j < int(rects.size()); ++j) {
      if (group[i] == group[j]) continue;
      Segment s;
      if (!shared_segment(rects[i], rects[j], s) || s.hi - s.lo < 2 * clear) continue;
      const int gi = std::min(group[i], group[j]);
      const int gj = std::max(group[i], group[j]);
      by_pair[gi][gj].push_back({i, j, s});
    }
  }
  std::vector<std::pair<int, int>> group_pairs;
  for (int a = 0; a < int(rects.size()); ++a) {
    for (int b = a + 1; b < int(rects.size()); ++b) {
      if (!by_pair[a][b].empty()) group_pairs.push_back({a, b});
    }
  }
  std::shuffle(group_pairs.begin(), group_pairs.end(), rng);

  BoxSet ann;
  for (const Rect& r : boxes) {
    ann.rooms.push_back({double(r.x0), double(r.y0), double(r.x1), double(r.y1), 1.0});
  }
  auto add_door = [&](int ga, int gb) {
    const auto& cands = by_pair[ga][gb];
    const Candidate& c = cands[uniform_int(rng, 0, int(cands.size()) - 1)];
    const int pos = uniform_int(rng, c.s.lo + clear, c.s.hi - clear);
    DoorBox d;
    d.center = c.s.vertical ? Point2{double(c.s.at), double(pos)} : Point2{double(pos), double(c.s.at)};
    d.size = cfg.door_size;
    d.q = 1.0;
    d.rooms = {c.i, c.j};
    ann.doors.push_back(d);
  };
  UnionFind uf(int(rects.size()));
  for (auto [a, b] : group_pairs) {
    if (uf.unite(a, b)) {
      add_door(a, b);
    } else if (chance(rng, cfg.p_extra_door)) {
      add_door(a, b);
    }
  }
  const std::set<int> distinct(group.begin(), group.end());
  for (int g : distinct) {
    if (uf.find(g) != uf.find(*distinct.begin())) return std::nullopt;
  }

  fp.annotations = std::move(ann);
  fp.groups = group;
  fp.world = rasterize(fp.annotations, GridGeometry{cfg.size, cfg.size}, Cell::kOccupied);
  if (!free_space_connected(fp.world)) return std::nullopt;
  return fp;
}

std::vector<int> groups_from_overlap(const BoxSet& boxes) {
  UnionFind uf(boxes.budget());
  for (int i = 0; i < boxes.budget(); ++i) {
    for (int j = i + 1; j < boxes.budget(); ++j) {
      if (overlaps(boxes.rooms[i], boxes.rooms[j])) uf.unite(i, j);
    }
  }
  std::vector<int> g(boxes.rooms.size());
  for (int i = 0; i < boxes.budget(); ++i) g[i] = uf.find(i);
  return g;
}

}  // namespace

Floorplan generate(std::uint64_t seed, const FloorgenConfig& cfg) {
  if (cfg.rooms < 1) throw GenerationFailed("need at least one room");
  if (cfg.size < cfg.min_side + 2) throw GenerationFailed("world too small");
  std::mt19937_64 rng(seed);
  for (int r = 0; r < cfg.max_retries; ++r) {
    if (auto fp = attempt(rng, seed, cfg)) return std::move(*fp);
  }
  throw GenerationFailed("seed " + std::to_string(seed) + ": no valid plan after " +
                         std::to_string(cfg.max_retries) + " attempts");
}

Floorplan generate(std::uint64_t seed, int rooms, int size) {
  FloorgenConfig cfg;
  cfg.rooms = rooms;
  cfg.size = size;
  return generate(seed, cfg);
}

bool free_space_connected(const OccupancyGrid& grid) {
  const std::size_t total = grid.count(Cell::kFree);
  if (total == 0) return true;
  std::vector<std::uint8_t> seen(grid.geometry().size(), 0);
  std::queue<CellIndex> q;
  for (int y = 0; y < grid.height() && q.empty(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.at(x, y) == Cell::kFree) {
        q.push({x, y});
        seen[std::size_t(y) * grid.width() + x] = 1;
        break;
      }
    }
  }
  std::size_t reached = 0;
  while (!q.empty()) {
    const CellIndex c = q.front();
    q.pop();
    ++reached;
    for (auto [dx, dy] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const CellIndex n{c.x + dx, c.y + dy};
      if (!grid.contains(n) || grid.at(n) != Cell::kFree) continue;
      auto& s = seen[std::size_t(n.y) * grid.width() + n.x];
      if (s) continue;
      s = 1;
      q.push(n);
    }
  }
  return reached == total;
}

void save_floorplan(const Floorplan& fp, const std::filesystem::path& dir, double gamma) {
  std::filesystem::create_directories(dir);
  write_pgm(dir / "world.pgm", fp.world);
  write_pgm(dir / "tsdf.pgm", chamfer_tsdf(fp.world, gamma));
  Json j = fp.annotations;
  j["groups"] = fp.groups;
  j["seed"] = fp.seed;
  std::ofstream os(dir / "annotations.json");
  if (!os) throw Error("cannot write " + (dir / "annotations.json").string());
  os << j.dump(2) << '\n';
}

Floorplan load_floorplan(const std::filesystem::path& dir) {
  Floorplan fp;
  fp.world = read_occupancy_pgm(dir / "world.pgm");
  std::ifstream is(dir / "annotations.json");
  if (!is) throw MissingAnnotations("no annotations.json in " + dir.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception& e) {
    throw MissingAnnotations(std::string("unreadable annotations.json: ") + e.what());
  }
  fp.annotations = j.get<BoxSet>();
  if (j.contains("groups")) {
    fp.groups = j.at("groups").get<std::vector<int>>();
    if (fp.groups.size() != fp.annotations.rooms.size()) {
      throw InvalidBoxSet("groups must list one id per room box");
    }
  } else {
    fp.groups = groups_from_overlap(fp.annotations);
  }
  fp.seed = j.value("seed", std::uint64_t{0});
  return fp;
}

namespace {

BoxSet annotations_in_frame(const BoxSet& ann, const LocalFrame& frame) {
  BoxSet out;
  std::vector<int> remap(ann.rooms.size(), -1);
  const RoomBox window{double(frame.offset_x), double(frame.offset_y),
                       double(frame.offset_x + frame.size - 1), double(frame.offset_y + frame.size - 1), 1};
  for (std::size_t i = 0; i < ann.rooms.size(); ++i) {
    const RoomBox& r = ann.rooms[i];
    if (r.x1 < window.x0 || r.x0 > window.x1 || r.y1 < window.y0 || r.y0 > window.y1) continue;
    remap[i] = out.budget();
    out.rooms.push_back(r);
  }
  for (const DoorBox& d : ann.doors) {
    if (remap[d.rooms[0]] < 0 || remap[d.rooms[1]] < 0) continue;
    DoorBox nd = d;
    nd.rooms = {remap[d.rooms[0]], remap[d.rooms[1]]};
    out.doors.push_back(nd);
  }
  return translated(out, -frame.offset_x, -frame.offset_y);
}

}  // namespace

std::vector<Sample> make_samples(const Floorplan& fp, const std::vector<CellIndex>& poses,
                                 int crop, double gamma, const LaserConfig& laser) {
  const TsdfGrid truth = chamfer_tsdf(fp.world, gamma);
  OccupancyGrid seen(fp.world.geometry(), Cell::kUnknown);
  std::vector<Sample> out;
  for (const CellIndex& p : poses) {
    seen = accumulate(seen, simulate_scan(fp.world, p, laser));
    CropResult c = crop_local(seen, p, crop);
    Sample s;
    s.frame = c.frame;
    s.occupancy = std::move(c.grid);
    s.tsdf = crop_tsdf(truth, s.frame);
    s.annotations = annotations_in_frame(fp.annotations, s.frame);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sample> export_samples(const Floorplan& fp, const std::vector<CellIndex>& poses,
                                   const std::filesystem::path& dir, int crop, double gamma) {
  std::vector<Sample> samples = make_samples(fp, poses, crop, gamma);
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const std::string stem = "sample_" + std::to_string(k);
    write_pgm(dir / (stem + "_occ.pgm"), samples[k].occupancy);
    write_pgm(dir / (stem + "_tsdf.pgm"), samples[k].tsdf);
    Json j = samples[k].annotations;
    j["frame"] = {{"offset_x", samples[k].frame.offset_x},
                  {"offset_y", samples[k].frame.offset_y},
                  {"size", samples[k].frame.size}};
    std::ofstream os(dir / (stem + ".json"));
    os << j.dump() << '\n';
  }
  return samples;
}

Sample read_sample(const std::filesystem::path& dir, int index) {
  const std::string stem = "sample_" + std::to_string(index);
  Sample s;
  s.occupancy = read_occupancy_pgm(dir / (stem + "_occ.pgm"));
  s.tsdf = read_tsdf_pgm(dir / (stem + "_tsdf.pgm"));
  std::ifstream is(dir / (stem + ".json"));
  if (!is) throw MissingAnnotations("missing " + stem + ".json");
  const Json j = Json::parse(is);
  s.annotations = j.get<BoxSet>();
  const Json& f = j.at("frame");
  s.frame = {f.at("offset_x").get<int>(), f.at("offset_y").get<int>(), f.at("size").get<int>()};
  return s;
}

}  // namespace boxmap
