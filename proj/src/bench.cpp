#include "boxmap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "boxmap/floorgen.hpp"
#include "boxmap/predictor.hpp"

namespace boxmap {

void to_json(Json& j, const BenchConfig& c) {
  std::vector<std::string> names;
  for (Strategy s : c.strategies) names.push_back(to_string(s));
  j = Json{{"envs", c.envs},         {"starts", c.starts},   {"strategies", names},
           {"predictor", c.predictor}, {"seed", c.seed},       {"rooms", c.rooms},
           {"size", c.size},         {"max_updates", c.max_updates}, {"lambda", c.lambda},
           {"rho", c.rho},           {"noise", c.noise},     {"threads", c.threads},
           {"out", c.out}};
}

namespace {

std::vector<Strategy> parse_strategy_list(const std::string& s) {
  std::vector<Strategy> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_strategy(item));
  }
  return out;
}

}  // namespace

void from_json(const Json& j, BenchConfig& c) {
  if (!j.is_object()) throw std::invalid_argument("bench config must be a JSON object");
  c.envs = j.value("envs", c.envs);
  c.starts = j.value("starts", c.starts);
  if (j.contains("strategies")) {
    const Json& s = j.at("strategies");
    if (s.is_string()) {
      c.strategies = parse_strategy_list(s.get<std::string>());
    } else {
      c.strategies.clear();
      for (const auto& v : s) c.strategies.push_back(parse_strategy(v.get<std::string>()));
    }
  }
  c.predictor = j.value("predictor", c.predictor);
  c.seed = j.value("seed", c.seed);
  c.rooms = j.value("rooms", c.rooms);
  c.size = j.value("size", c.size);
  c.max_updates = j.value("max_updates", c.max_updates);
  c.lambda = j.value("lambda", c.lambda);
  c.rho = j.value("rho", c.rho);
  c.noise = j.value("noise", c.noise);
  c.threads = j.value("threads", c.threads);
  c.out = j.value("out", c.out);
}

void to_json(Json& j, const RunRow& r) {
  j = Json{{"env", r.env},
           {"env_seed", r.env_seed},
           {"start_index", r.start_index},
           {"start_x", r.start.x},
           {"start_y", r.start.y},
           {"strategy", to_string(r.strategy)},
           {"predictor", r.predictor},
           {"status", to_string(r.status)},
           {"steps", r.steps},
           {"updates", r.updates},
           {"memory_bytes", r.memory_bytes},
           {"grid_bytes", r.grid_bytes},
           {"ssim", r.ssim},
           {"hamming", r.hamming},
           {"rooms_total", r.rooms_total},
           {"rooms_visited", r.rooms_visited}};
}

void from_json(const Json& j, RunRow& r) {
  r.env = j.at("env").get<int>();
  r.env_seed = j.at("env_seed").get<std::uint64_t>();
  r.start_index = j.at("start_index").get<int>();
  r.start = {j.at("start_x").get<int>(), j.at("start_y").get<int>()};
  r.strategy = parse_strategy(j.at("strategy").get<std::string>());
  r.predictor = j.at("predictor").get<std::string>();
  r.status = j.at("status").get<std::string>() == "timeout" ? EpisodeStatus::kTimeout : EpisodeStatus::kComplete;
  r.steps = j.at("steps").get<int>();
  r.updates = j.at("updates").get<int>();
  r.memory_bytes = j.at("memory_bytes").get<std::size_t>();
  r.grid_bytes = j.at("grid_bytes").get<std::size_t>();
  r.ssim = j.at("ssim").get<double>();
  r.hamming = j.at("hamming").get<double>();
  r.rooms_total = j.at("rooms_total").get<int>();
  r.rooms_visited = j.at("rooms_visited").get<int>();
}

Stats describe(std::vector<double> v) {
  Stats s;
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(v.size()));
  s.min = v.front();
  s.max = v.back();
  const std::size_t n = v.size();
  s.median = n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
  return s;
}

const StrategySummary& RunSummary::of(Strategy s) const {
  for (const auto& x : strategies) {
    if (x.strategy == s) return x;
  }
  throw std::out_of_range("strategy not in summary: " + to_string(s));
}

namespace {

Json stats_json(const Stats& s) {
  return Json{{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"median", s.median}, {"max", s.max}};
}

}  // namespace

void to_json(Json& j, const StrategySummary& s) {
  j = Json{{"strategy", to_string(s.strategy)},  {"runs", s.runs},
           {"timeouts", s.timeouts},             {"steps", stats_json(s.steps)},
           {"updates", stats_json(s.updates)},   {"memory_bytes", stats_json(s.memory_bytes)},
           {"ssim", stats_json(s.ssim)},         {"hamming", stats_json(s.hamming)}};
}

std::vector<StrategySummary> summarize(const std::vector<RunRow>& rows) {
  std::vector<Strategy> order;
  for (const RunRow& r : rows) {
    if (std::find(order.begin(), order.end(), r.strategy) == order.end()) order.push_back(r.strategy);
  }
  std::vector<StrategySummary> out;
  for (Strategy s : order) {
    StrategySummary sum;
    sum.strategy = s;
    std::vector<double> steps, updates, mem, ssim_v, ham;
    for (const RunRow& r : rows) {
      if (r.strategy != s) continue;
      ++sum.runs;
      if (r.status == EpisodeStatus::kTimeout) ++sum.timeouts;
      steps.push_back(r.steps);
      updates.push_back(r.updates);
      mem.push_back(static_cast<double>(r.memory_bytes));
      ssim_v.push_back(r.ssim);
      ham.push_back(r.hamming);
    }
    sum.steps = describe(steps);
    sum.updates = describe(updates);
    sum.memory_bytes = describe(mem);
    sum.ssim = describe(ssim_v);
    sum.hamming = describe(ham);
    out.push_back(sum);
  }
  return out;
}

std::uint64_t env_seed(std::uint64_t seed, int env) {
  // splitmix64 step over the pair.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(env) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<CellIndex> pick_starts(const Floorplan& fp, int count, std::uint64_t seed) {
  std::vector<CellIndex> free_cells;
  for (int y = 0; y < fp.world.height(); ++y) {
    for (int x = 0; x < fp.world.width(); ++x) {
      if (fp.world.at(x, y) == Cell::kFree) free_cells.push_back({x, y});
    }
  }
  if (free_cells.empty()) throw std::invalid_argument("world has no free cells");
  std::mt19937_64 rng(seed);
  std::vector<CellIndex> out;
  for (int i = 0; i < count; ++i) out.push_back(free_cells[rng() % free_cells.size()]);
  return out;
}

int worker_count(int requested) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("BOXMAP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, n);
}

namespace {

std::unique_ptr<Predictor> make_predictor(const BenchConfig& cfg, const Floorplan& fp, std::uint64_t seed) {
  if (cfg.predictor == "oracle") {
    OracleConfig oc;
    oc.rho = cfg.rho;
    oc.noise = cfg.noise;
    oc.seed = seed;
    return std::make_unique<OraclePredictor>(fp.annotations, fp.groups, oc);
  }
  if (cfg.predictor == "fitter") {
    FitterConfig fc;
    fc.seed = seed;
    return std::make_unique<FitterPredictor>(fc);
  }
  throw std::invalid_argument("unknown predictor: " + cfg.predictor);
}

}  // namespace

RunSummary run_matrix(const BenchConfig& cfg, const ProgressFn& progress) {
  if (cfg.envs < 0 || cfg.starts < 0) throw std::invalid_argument("envs and starts must be non-negative");
  if (cfg.strategies.empty()) throw std::invalid_argument("no strategies requested");
  RunSummary summary;
  summary.config = cfg;

  FloorgenConfig gen;
  gen.rooms = cfg.rooms;
  gen.size = cfg.size;
  std::vector<Floorplan> worlds;
  std::vector<std::vector<CellIndex>> starts;
  for (int e = 0; e < cfg.envs; ++e) {
    const std::uint64_t s = env_seed(cfg.seed, e);
    worlds.push_back(generate(s, gen));
    starts.push_back(pick_starts(worlds.back(), cfg.starts, s ^ 0x5354415254ULL));
  }

  struct Task {
    int env;
    int start;
    Strategy strategy;
  };
  std::vector<Task> tasks;
  for (int e = 0; e < cfg.envs; ++e) {
    for (int k = 0; k < cfg.starts; ++k) {
      for (Strategy s : cfg.strategies) tasks.push_back({e, k, s});
    }
  }
  summary.rows.resize(tasks.size());
  summary.episodes.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mu;
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const Task& t = tasks[i];
        const Floorplan& fp = worlds[static_cast<std::size_t>(t.env)];
        const std::uint64_t seed = env_seed(cfg.seed, t.env) + static_cast<std::uint64_t>(t.start);
        const auto predictor = make_predictor(cfg, fp, seed);
        EpisodeConfig ec;
        ec.strategy = t.strategy;
        ec.max_updates = cfg.max_updates;
        ec.frontier.lambda = cfg.lambda;
        const CellIndex start = starts[static_cast<std::size_t>(t.env)][static_cast<std::size_t>(t.start)];
        const EpisodeResult r = run_episode(fp, start, *predictor, ec, seed);
        const EpisodeMetrics m = evaluate(r, fp);
        RunRow row;
        row.env = t.env;
        row.env_seed = fp.seed;
        row.start_index = t.start;
        row.start = start;
        row.strategy = t.strategy;
        row.predictor = cfg.predictor;
        row.status = r.status;
        row.steps = m.steps;
        row.updates = m.updates;
        row.memory_bytes = m.memory_bytes;
        row.grid_bytes = map_memory(fp.world);
        row.ssim = m.ssim;
        row.hamming = m.hamming;
        row.rooms_total = r.rooms_total;
        row.rooms_visited = r.rooms_visited;
        summary.rows[i] = row;
        summary.episodes[i] = r;
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
      const int d = ++done;
      if (progress) {
        std::lock_guard<std::mutex> lock(progress_mu);
        progress(d, static_cast<int>(tasks.size()));
      }
    }
  };
  const int n = std::min<int>(worker_count(cfg.threads), static_cast<int>(std::max<std::size_t>(tasks.size(), 1)));
  std::vector<std::thread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);

  summary.strategies = summarize(summary.rows);
  if (!cfg.out.empty()) write_outputs(summary, cfg.out);
  return summary;
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* kCsvColumns =
    "env,env_seed,start_index,start_x,start_y,strategy,predictor,status,steps,updates,memory_bytes,grid_bytes,"
    "ssim,hamming,rooms_total,rooms_visited";

}  // namespace

void write_csv(std::ostream& os, const std::vector<RunRow>& rows) {
  os << kCsvSchema << '\n' << kCsvColumns << '\n';
  for (const RunRow& r : rows) {
    os << r.env << ',' << r.env_seed << ',' << r.start_index << ',' << r.start.x << ',' << r.start.y << ','
       << to_string(r.strategy) << ',' << r.predictor << ',' << to_string(r.status) << ',' << r.steps << ','
       << r.updates << ',' << r.memory_bytes << ',' << r.grid_bytes << ',' << fmt_double(r.ssim) << ','
       << fmt_double(r.hamming) << ',' << r.rooms_total << ',' << r.rooms_visited << '\n';
  }
}

std::vector<RunRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvSchema) throw std::runtime_error("missing CSV schema line");
  if (!std::getline(is, line) || line != kCsvColumns) throw std::runtime_error("unexpected CSV columns");
  std::vector<RunRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (f.size() != 16) throw std::runtime_error("bad CSV row: " + line);
    RunRow r;
    r.env = std::stoi(f[0]);
    r.env_seed = std::stoull(f[1]);
    r.start_index = std::stoi(f[2]);
    r.start = {std::stoi(f[3]), std::stoi(f[4])};
    r.strategy = parse_strategy(f[5]);
    r.predictor = f[6];
    r.status = f[7] == "timeout" ? EpisodeStatus::kTimeout : EpisodeStatus::kComplete;
    r.steps = std::stoi(f[8]);
    r.updates = std::stoi(f[9]);
    r.memory_bytes = std::stoull(f[10]);
    r.grid_bytes = std::stoull(f[11]);
    r.ssim = std::stod(f[12]);
    r.hamming = std::stod(f[13]);
    r.rooms_total = std::stoi(f[14]);
    r.rooms_visited = std::stoi(f[15]);
    rows.push_back(r);
  }
  return rows;
}

void write_outputs(const RunSummary& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "runs.csv");
    write_csv(os, s.rows);
  }
  {
    std::ofstream os(dir / "runs.jsonl");
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      Json line = s.rows[i];
      if (i < s.episodes.size()) line["episode"] = s.episodes[i];
      os << dump_compact(line) << '\n';
    }
  }
  {
    std::ofstream os(dir / "summary.json");
    os << Json{{"config", s.config}, {"strategies", s.strategies}}.dump(2) << '\n';
  }
}

}  // namespace boxmap
