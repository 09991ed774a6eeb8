#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "boxmap/explore.hpp"
#include "boxmap/metrics.hpp"
#include "boxmap/serialize.hpp"

namespace boxmap {

inline constexpr const char* kCsvSchema = "# boxmap-runs v1";

struct BenchConfig {
  int envs = 40;
  int starts = 3;
  std::vector<Strategy> strategies{Strategy::kGreedy, Strategy::kRecedingHorizon, Strategy::kFrontier,
                                   Strategy::kHybrid};
  std::string predictor = "oracle";  // oracle | fitter
  std::uint64_t seed = 7;
  int rooms = 5;
  int size = 256;
  int max_updates = 50;
  double lambda = 0.02;
  double rho = 0.2;
  double noise = 0.0;
  int threads = 0;  // 0: hardware concurrency, capped by BOXMAP_THREADS
  std::string out;  // output directory, empty for none
};

void to_json(Json& j, const BenchConfig& c);
void from_json(const Json& j, BenchConfig& c);

/// One episode of the matrix.
struct RunRow {
  int env = 0;
  std::uint64_t env_seed = 0;
  int start_index = 0;
  CellIndex start;
  Strategy strategy = Strategy::kGreedy;
  std::string predictor;
  EpisodeStatus status = EpisodeStatus::kComplete;
  int steps = 0;
  int updates = 0;
  std::size_t memory_bytes = 0;
  std::size_t grid_bytes = 0;  // payload of the world grid, for the memory ratio
  double ssim = 0.0;
  double hamming = 0.0;
  int rooms_total = 0;
  int rooms_visited = 0;

  friend bool operator==(const RunRow&, const RunRow&) = default;
};

void to_json(Json& j, const RunRow& r);
void from_json(const Json& j, RunRow& r);

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

Stats describe(std::vector<double> values);

struct StrategySummary {
  Strategy strategy = Strategy::kGreedy;
  int runs = 0;
  int timeouts = 0;
  Stats steps;
  Stats updates;
  Stats memory_bytes;
  Stats ssim;
  Stats hamming;
};

struct RunSummary {
  BenchConfig config;
  std::vector<RunRow> rows;  // env-major, then start, then strategy order of the config
  std::vector<StrategySummary> strategies;
  std::vector<Json> episodes;  // EpisodeResult JSON, parallel to rows

  const StrategySummary& of(Strategy s) const;
};

void to_json(Json& j, const StrategySummary& s);

/// Per-strategy aggregates, in order of first appearance.
std::vector<StrategySummary> summarize(const std::vector<RunRow>& rows);

/// Seed of environment `env` derived from the matrix seed.
std::uint64_t env_seed(std::uint64_t seed, int env);

/// Start cells: uniformly random FREE cells, seeded per environment.
std::vector<CellIndex> pick_starts(const Floorplan& fp, int count, std::uint64_t seed);

/// Worker count: cfg.threads (or hardware concurrency) capped by BOXMAP_THREADS.
int worker_count(int requested);

using ProgressFn = std::function<void(int done, int total)>;

/// Environments x starts x strategies, episodes run in parallel. Writes the
/// outputs when cfg.out is set.
RunSummary run_matrix(const BenchConfig& cfg, const ProgressFn& progress = {});

void write_csv(std::ostream& os, const std::vector<RunRow>& rows);
std::vector<RunRow> read_csv(std::istream& is);

/// runs.csv, runs.jsonl and summary.json under `dir`.
void write_outputs(const RunSummary& s, const std::filesystem::path& dir);

}  // namespace boxmap
