#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "boxmap/bench.hpp"
#include "boxmap/floorgen.hpp"
#include "boxmap/metrics.hpp"
#include "boxmap/pgm.hpp"
#include "boxmap/predictor.hpp"
#include "boxmap/serialize.hpp"

using namespace boxmap;
namespace fs = std::filesystem;

namespace {

Json load_config(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  return Json::parse(is);
}

// Value from the command line if given, else from the config, else the default.
template <typename T>
void merge(T& target, const CLI::Option* opt, const T& cli_value, const Json& config, const char* key) {
  if (opt->count() > 0) {
    target = cli_value;
  } else if (config.contains(key)) {
    target = config.at(key).get<T>();
  }
}

template <typename T>
void override_if_set(T& target, const CLI::Option* opt, const T& cli_value) {
  if (opt->count() > 0) target = cli_value;
}

void print_summary(const RunSummary& s) {
  std::printf("%-9s %5s %9s %8s %10s %7s %8s %8s\n", "strategy", "runs", "steps", "updates", "memory", "ssim",
              "hamming", "timeout");
  for (const auto& x : s.strategies) {
    std::printf("%-9s %5d %9.1f %8.2f %10.0f %7.4f %8.4f %8d\n", to_string(x.strategy).c_str(), x.runs,
                x.steps.mean, x.updates.mean, x.memory_bytes.mean, x.ssim.mean, x.hamming.mean, x.timeouts);
  }
}

struct BenchArgs {
  std::string config;
  BenchConfig cfg;
  std::string strategies = "greedy,rh,frontier,hybrid";
  bool quiet = false;
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* cmd = app.add_subcommand("bench", "Run the environment x start x strategy matrix");
  cmd->add_option("--config", a.config, "JSON file with the same keys as the flags");
  cmd->add_option("--envs", a.cfg.envs, "Number of generated environments");
  cmd->add_option("--starts", a.cfg.starts, "Random starts per environment");
  cmd->add_option("--strategies", a.strategies, "Comma-separated: greedy,rh,frontier,hybrid");
  cmd->add_option("--predictor", a.cfg.predictor, "oracle or fitter");
  cmd->add_option("--seed", a.cfg.seed, "Matrix seed");
  cmd->add_option("--rooms", a.cfg.rooms, "Rooms per environment");
  cmd->add_option("--size", a.cfg.size, "World side in cells");
  cmd->add_option("--max-updates", a.cfg.max_updates, "Scan cap per episode");
  cmd->add_option("--lambda", a.cfg.lambda, "Frontier information weight");
  cmd->add_option("--rho", a.cfg.rho, "Oracle visibility threshold");
  cmd->add_option("--noise", a.cfg.noise, "Oracle coordinate noise, cells");
  cmd->add_option("--threads", a.cfg.threads, "Worker threads (0 = all)");
  cmd->add_option("--out", a.cfg.out, "Output directory");
  cmd->add_flag("--quiet", a.quiet, "No progress output");
  cmd->callback([&a, cmd] {
    const Json config = load_config(a.config);
    BenchConfig cfg;
    if (!config.empty()) cfg = config.get<BenchConfig>();
    override_if_set(cfg.envs, cmd->get_option("--envs"), a.cfg.envs);
    override_if_set(cfg.starts, cmd->get_option("--starts"), a.cfg.starts);
    if (cmd->get_option("--strategies")->count() > 0) {
      cfg.strategies = Json{{"strategies", a.strategies}}.get<BenchConfig>().strategies;
    }
    override_if_set(cfg.predictor, cmd->get_option("--predictor"), a.cfg.predictor);
    override_if_set(cfg.seed, cmd->get_option("--seed"), a.cfg.seed);
    override_if_set(cfg.rooms, cmd->get_option("--rooms"), a.cfg.rooms);
    override_if_set(cfg.size, cmd->get_option("--size"), a.cfg.size);
    override_if_set(cfg.max_updates, cmd->get_option("--max-updates"), a.cfg.max_updates);
    override_if_set(cfg.lambda, cmd->get_option("--lambda"), a.cfg.lambda);
    override_if_set(cfg.rho, cmd->get_option("--rho"), a.cfg.rho);
    override_if_set(cfg.noise, cmd->get_option("--noise"), a.cfg.noise);
    override_if_set(cfg.threads, cmd->get_option("--threads"), a.cfg.threads);
    override_if_set(cfg.out, cmd->get_option("--out"), a.cfg.out);
    ProgressFn progress;
    if (!a.quiet) {
      progress = [](int done, int total) {
        std::fprintf(stderr, "\r%d/%d episodes", done, total);
        if (done == total) std::fprintf(stderr, "\n");
      };
    }
    const RunSummary s = run_matrix(cfg, progress);
    print_summary(s);
    if (!cfg.out.empty()) std::printf("wrote %s\n", (fs::path(cfg.out) / "runs.csv").string().c_str());
  });
}

struct FitArgs {
  std::string config;
  std::string tsdf;
  std::string out;
  FitterConfig cfg;
};

void add_fit(CLI::App& app, FitArgs& a) {
  auto* cmd = app.add_subcommand("fit", "Fit boxes to a TSDF image");
  cmd->add_option("--config", a.config, "JSON file with the same keys as the flags");
  cmd->add_option("--tsdf", a.tsdf, "TSDF PGM (16-bit)");
  cmd->add_option("--out", a.out, "Output boxes JSON (stdout if empty)");
  cmd->add_option("--budget", a.cfg.budget, "Query budget M");
  cmd->add_option("--iters", a.cfg.max_iters, "Iterations per phase");
  cmd->add_option("--restarts", a.cfg.restarts, "Jittered restarts");
  cmd->add_option("--seed", a.cfg.seed, "Restart seed");
  cmd->callback([&a, cmd] {
    const Json config = load_config(a.config);
    std::string tsdf = a.tsdf, out = a.out;
    FitterConfig cfg;
    merge(tsdf, cmd->get_option("--tsdf"), a.tsdf, config, "tsdf");
    merge(out, cmd->get_option("--out"), a.out, config, "out");
    merge(cfg.budget, cmd->get_option("--budget"), a.cfg.budget, config, "budget");
    merge(cfg.max_iters, cmd->get_option("--iters"), a.cfg.max_iters, config, "iters");
    merge(cfg.restarts, cmd->get_option("--restarts"), a.cfg.restarts, config, "restarts");
    merge(cfg.seed, cmd->get_option("--seed"), a.cfg.seed, config, "seed");
    if (tsdf.empty()) throw CLI::RequiredError("--tsdf");
    const TsdfGrid truth = read_tsdf_pgm(fs::path(tsdf));
    const FitResult r = fit_boxes(truth, cfg);
    const Json j{{"boxes", r.boxes}, {"loss", r.report}, {"restart", r.restart}};
    if (out.empty()) {
      std::cout << j.dump(2) << '\n';
    } else {
      std::ofstream(out) << j.dump(2) << '\n';
      std::printf("loss %.6g, %d active rooms, wrote %s\n", r.report.total, r.boxes.active_rooms(), out.c_str());
    }
  });
}

struct DemoArgs {
  std::string config;
  std::uint64_t seed = 1;
  std::string strategy = "greedy";
  std::string predictor = "oracle";
  int rooms = 5;
  int size = 256;
  int start_index = 0;
  std::string dump_dir;
  bool dump = false;
  std::string out;
};

void add_demo(CLI::App& app, DemoArgs& a) {
  auto* cmd = app.add_subcommand("demo", "Run one episode on a generated world");
  cmd->add_option("--config", a.config, "JSON file with the same keys as the flags");
  cmd->add_option("--seed", a.seed, "World seed");
  cmd->add_option("--strategy", a.strategy, "greedy, rh, frontier or hybrid");
  cmd->add_option("--predictor", a.predictor, "oracle or fitter");
  cmd->add_option("--rooms", a.rooms, "Rooms");
  cmd->add_option("--size", a.size, "World side in cells");
  cmd->add_option("--start", a.start_index, "Index of the random start");
  cmd->add_flag("--dump-frames", a.dump, "Write per-update PGM snapshots");
  cmd->add_option("--frames-dir", a.dump_dir, "Snapshot directory (default frames/)");
  cmd->add_option("--out", a.out, "Episode JSON file (stdout summary only if empty)");
  cmd->callback([&a, cmd] {
    const Json config = load_config(a.config);
    DemoArgs d = a;
    merge(d.seed, cmd->get_option("--seed"), a.seed, config, "seed");
    merge(d.strategy, cmd->get_option("--strategy"), a.strategy, config, "strategy");
    merge(d.predictor, cmd->get_option("--predictor"), a.predictor, config, "predictor");
    merge(d.rooms, cmd->get_option("--rooms"), a.rooms, config, "rooms");
    merge(d.size, cmd->get_option("--size"), a.size, config, "size");
    merge(d.start_index, cmd->get_option("--start"), a.start_index, config, "start");
    merge(d.dump, cmd->get_option("--dump-frames"), a.dump, config, "dump_frames");
    merge(d.dump_dir, cmd->get_option("--frames-dir"), a.dump_dir, config, "frames_dir");
    merge(d.out, cmd->get_option("--out"), a.out, config, "out");
    if (d.dump && d.dump_dir.empty()) d.dump_dir = "frames";

    FloorgenConfig gen;
    gen.rooms = d.rooms;
    gen.size = d.size;
    const Floorplan fp = generate(d.seed, gen);
    const auto starts = pick_starts(fp, d.start_index + 1, d.seed);
    std::unique_ptr<Predictor> predictor;
    if (d.predictor == "oracle") {
      predictor = std::make_unique<OraclePredictor>(fp.annotations, fp.groups);
    } else if (d.predictor == "fitter") {
      predictor = std::make_unique<FitterPredictor>();
    } else {
      throw std::invalid_argument("unknown predictor: " + d.predictor);
    }
    EpisodeConfig ec;
    ec.strategy = parse_strategy(d.strategy);
    FrameCallback on_frame;
    if (d.dump) {
      fs::create_directories(d.dump_dir);
      on_frame = [&](int update, const OccupancyGrid& map, const BoxSet& boxes) {
        char name[64];
        std::snprintf(name, sizeof name, "frame_%03d", update);
        const fs::path base = fs::path(d.dump_dir) / name;
        write_pgm(fs::path(base.string() + "_map.pgm"), map);
        if (uses_boxes(ec.strategy)) {
          write_pgm(fs::path(base.string() + "_boxes.pgm"), rasterize(boxes, map.geometry(), Cell::kUnknown));
          std::ofstream(base.string() + "_boxes.json") << Json(boxes).dump() << '\n';
        }
      };
    }
    const EpisodeResult r = run_episode(fp, starts.back(), *predictor, ec, d.seed, on_frame);
    const EpisodeMetrics m = evaluate(r, fp);
    std::printf("strategy %s status %s steps %d updates %d rooms %d/%d ssim %.4f hamming %.4f memory %zu\n",
                to_string(r.strategy).c_str(), to_string(r.status).c_str(), r.steps, r.updates, r.rooms_visited,
                r.rooms_total, m.ssim, m.hamming, m.memory_bytes);
    if (!d.out.empty()) std::ofstream(d.out) << Json(r).dump(2) << '\n';
  });
}

struct FloorgenArgs {
  std::string config;
  std::uint64_t seed = 0;
  int rooms = 5;
  int size = 256;
  std::string out = "floorplan";
  int samples = 0;
};

void add_floorgen(CLI::App& app, FloorgenArgs& a) {
  auto* cmd = app.add_subcommand("floorgen", "Generate an annotated floorplan");
  cmd->add_option("--config", a.config, "JSON file with the same keys as the flags");
  cmd->add_option("--seed", a.seed, "Seed");
  cmd->add_option("--rooms", a.rooms, "Rooms");
  cmd->add_option("--size", a.size, "World side in cells");
  cmd->add_option("--out", a.out, "Output directory");
  cmd->add_option("--samples", a.samples, "Also export this many random-pose training samples");
  cmd->callback([&a, cmd] {
    const Json config = load_config(a.config);
    FloorgenArgs d = a;
    merge(d.seed, cmd->get_option("--seed"), a.seed, config, "seed");
    merge(d.rooms, cmd->get_option("--rooms"), a.rooms, config, "rooms");
    merge(d.size, cmd->get_option("--size"), a.size, config, "size");
    merge(d.out, cmd->get_option("--out"), a.out, config, "out");
    merge(d.samples, cmd->get_option("--samples"), a.samples, config, "samples");
    FloorgenConfig gen;
    gen.rooms = d.rooms;
    gen.size = d.size;
    const Floorplan fp = generate(d.seed, gen);
    save_floorplan(fp, d.out);
    if (d.samples > 0) export_samples(fp, pick_starts(fp, d.samples, d.seed), d.out);
    std::printf("%d rooms, %zu doors, wrote %s\n", fp.room_count(), fp.annotations.doors.size(), d.out.c_str());
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-based room maps and room-level exploration"};
  app.require_subcommand(1);
  BenchArgs bench;
  FitArgs fit;
  DemoArgs demo;
  FloorgenArgs floorgen;
  add_bench(app, bench);
  add_fit(app, fit);
  add_demo(app, demo);
  add_floorgen(app, floorgen);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
