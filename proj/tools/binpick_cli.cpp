#include "binpick/config.hpp"
#include "binpick/error.hpp"
#include "binpick/orchestrator.hpp"
#include "binpick/runlog.hpp"
#include "binpick/scoring.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace binpick;

namespace {

struct Options {
  std::string task = "stow";
  std::uint64_t seed = 1;
  std::size_t batch = 1;
  std::string config = std::string(BINPICK_CONFIG_DIR) + "/default.json";
  std::string score_table;
  std::string out = "out";
  bool no_timestamp = false;
  std::optional<double> sim_hours;
  std::vector<std::string> overrides;
  bool validate = false;
  std::string corpus;
  std::string write_corpus;
  std::size_t corpus_scenes = 67;
  std::string dump_grasps;
};

struct RunOutput {
  MetricsReport metrics;
  bool aborted = false;
  std::string error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(path.string() + ": cannot write");
  os << text;
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunOutput run_one(const Config& cfg, const Options& opt, std::uint64_t seed, const fs::path& dir) {
  RunOutput r;
  RunLog log;
  Json summary;
  if (opt.task == "longrun") {
    LongrunParams lr = cfg.longrun;
    if (opt.sim_hours) lr.sim_hours = *opt.sim_hours;
    LongrunResult res;
    log = run_longrun(cfg.longrun_catalog, cfg.params, lr, seed, &res);
    r.aborted = res.aborted;
    summary = Json{{"stow_tasks", res.stow_tasks}, {"pick_tasks", res.pick_tasks}};
  } else {
    const Phase phase = *parse_phase(opt.task);
    const TaskSpec spec = cfg.task ? *cfg.task : make_task(phase, *cfg.catalog, cfg.tasks, seed);
    TaskResult res;
    log = run_task(spec, cfg.catalog, cfg.params, seed, &res);
    r.aborted = res.aborted;
    summary = Json{{"timed_out", res.timed_out}};
  }
  r.metrics = compute_metrics(log, cfg.score_table);

  fs::create_directories(dir);
  std::optional<Json> header;
  if (!opt.no_timestamp)
    header = Json{{"tool", "binpick"}, {"task", opt.task}, {"seed", seed}, {"created", timestamp()}};
  {
    std::ofstream os(dir / "events.ndjson", std::ios::binary);
    write_ndjson(os, log, header);
  }
  Json m = to_json(r.metrics);
  m["task"] = opt.task;
  m["seed"] = seed;
  m["aborted"] = r.aborted;
  for (const auto& [k, v] : summary.items()) m[k] = v;
  write_text(dir / "metrics.json", m.dump(2) + "\n");
  write_text(dir / "trace.csv", trace_csv(score_run(log, cfg.score_table)));
  return r;
}

int run_corpus(const Config& cfg, const Options& opt) {
  if (!opt.write_corpus.empty()) {
    const auto scenes = generate_corpus(*cfg.catalog, opt.corpus_scenes, 1, 20, opt.seed, cfg.params.world);
    std::ofstream os(opt.write_corpus, std::ios::binary);
    if (!os) throw Error(opt.write_corpus + ": cannot write");
    write_corpus(os, scenes);
    std::cout << "wrote " << scenes.size() << " scenes to " << opt.write_corpus << "\n";
    return 0;
  }
  const auto scenes = read_corpus(fs::path(opt.corpus));
  const auto scores = evaluate_corpus(scenes, cfg.catalog, cfg.params.perception, cfg.params.world);
  std::map<std::size_t, std::pair<double, std::size_t>> by_clutter;
  double total = 0.0;
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    total += scores[i];
    auto& slot = by_clutter[scenes[i].items.size()];
    slot.first += scores[i];
    ++slot.second;
  }
  Json j;
  j["scenes"] = scenes.size();
  j["mean_f_half"] = scenes.empty() ? 0.0 : total / static_cast<double>(scenes.size());
  Json per = Json::object();
  for (const auto& [n, s] : by_clutter) per[std::to_string(n)] = s.first / static_cast<double>(s.second);
  j["mean_f_half_by_clutter"] = per;
  std::cout << j.dump(2) << "\n";
  return 0;
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

/// Scored surface-normal candidates for every percept in the first view of
/// the task's source container, one record per candidate.
int run_dump_grasps(const Config& cfg, const Options& opt) {
  const Phase phase = opt.task == "longrun" ? Phase::Stow : *parse_phase(opt.task);
  const TaskSpec spec = cfg.task ? *cfg.task : make_task(phase, *cfg.catalog, cfg.tasks, opt.seed);
  WorldState world = spawn_scene(spec, cfg.catalog, default_layout(), cfg.params.world, opt.seed);
  const std::size_t source = world.require_container(spec.manifest.empty() ? "tote" : spec.manifest.front().container);
  const auto camera = viewpoints_for(world, source).front();
  RngStream rng(opt.seed, "dump_grasps");
  const auto percepts = segment_scene(world, camera, cfg.params.perception, rng);

  std::ofstream os(opt.dump_grasps, std::ios::binary);
  if (!os) throw Error(opt.dump_grasps + ": cannot write");
  const Container& box = world.containers[source];
  std::size_t records = 0;
  for (const auto& p : percepts) {
    const auto valid = depth_valid_points(p.points);
    std::vector<GraspCandidate> ranked;
    try {
      ranked = score_candidates(valid, box, cfg.params.grasp);
    } catch (const StrategyInvalid&) {
    }
    const auto chosen = select_diverse(ranked, cfg.params.grasp.max_candidates, cfg.params.grasp.diversity_min_dist);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      const bool selected = std::any_of(chosen.begin(), chosen.end(),
                                        [&](const GraspCandidate& c) { return c.position == ranked[r].position; });
      os << Json{{"label", p.label},
                 {"container", box.id},
                 {"rank", r},
                 {"score", ranked[r].score},
                 {"position", vec_json(ranked[r].position)},
                 {"approach", vec_json(ranked[r].approach)},
                 {"selected", selected}}
                .dump()
         << '\n';
      ++records;
    }
  }
  std::cout << "wrote " << records << " candidates for " << percepts.size() << " percepts to " << opt.dump_grasps
            << "\n";
  return 0;
}

int run(const Options& opt) {
  std::vector<std::string> overrides = opt.overrides;
  if (opt.validate) {
    const auto diags = validate_config(opt.config, overrides);
    for (const auto& d : diags) std::cout << d << "\n";
    if (diags.empty()) std::cout << opt.config << ": ok\n";
    return diags.empty() ? 0 : 2;
  }
  Config cfg = load_config(opt.config, overrides);
  if (!opt.score_table.empty()) cfg.score_table = load_score_table(opt.score_table);
  if (!opt.corpus.empty() || !opt.write_corpus.empty()) return run_corpus(cfg, opt);
  if (!opt.dump_grasps.empty()) return run_dump_grasps(cfg, opt);

  const fs::path out(opt.out);
  if (opt.batch == 1) {
    const RunOutput r = run_one(cfg, opt, opt.seed, out);
    std::cout << to_json(r.metrics).dump() << "\n";
    return r.aborted ? 1 : 0;
  }

  std::vector<RunOutput> runs(opt.batch);
  const auto n = static_cast<std::ptrdiff_t>(opt.batch);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run_%04td", i);
    try {
      runs[static_cast<std::size_t>(i)] = run_one(cfg, opt, opt.seed + static_cast<std::uint64_t>(i), out / name);
    } catch (const std::exception& e) {
      runs[static_cast<std::size_t>(i)].aborted = true;
      runs[static_cast<std::size_t>(i)].error = e.what();
    }
  }
  std::vector<MetricsReport> reports;
  std::size_t aborted = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].error.empty()) std::cerr << "run " << i << ": " << runs[i].error << "\n";
    aborted += runs[i].aborted ? 1 : 0;
    reports.push_back(runs[i].metrics);
  }
  const MetricsReport total = merge_metrics(reports);
  Json m = to_json(total);
  m["task"] = opt.task;
  m["base_seed"] = opt.seed;
  m["batch"] = opt.batch;
  m["aborted_runs"] = aborted;
  m["manual_intervention_fraction"] =
      static_cast<double>(total.manual_interventions) / static_cast<double>(opt.batch);
  write_text(out / "metrics.json", m.dump(2) + "\n");
  std::cout << m.dump() << "\n";
  return aborted == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Simulated bin-picking work cell"};
  app.add_option("--task", opt.task, "stow, pick, finals or longrun")
      ->check(CLI::IsMember({"stow", "pick", "finals", "longrun"}));
  app.add_option("--seed", opt.seed, "Base seed; batch run i uses seed + i");
  app.add_option("--batch", opt.batch, "Number of independent runs")->check(CLI::PositiveNumber);
  app.add_option("--config", opt.config, "Configuration file");
  app.add_option("--score-table", opt.score_table, "Score table overriding the configured one");
  app.add_option("--out", opt.out, "Output directory");
  app.add_flag("--no-timestamp", opt.no_timestamp, "Omit the header line from events.ndjson");
  app.add_option("--sim-hours", opt.sim_hours, "Simulated budget for longrun")->check(CLI::PositiveNumber);
  app.add_option("--set", opt.overrides, "Override a config field, e.g. --set world.scale_noise_g=1");
  app.add_flag("--validate", opt.validate, "Print configuration diagnostics and exit");
  app.add_option("--corpus", opt.corpus, "Evaluate top-view F0.5 over a scene corpus");
  app.add_option("--write-corpus", opt.write_corpus, "Generate a scene corpus from the catalog");
  app.add_option("--corpus-scenes", opt.corpus_scenes, "Scene count for --write-corpus");
  app.add_option("--dump-grasps", opt.dump_grasps, "Write scored grasp candidates of the first view as NDJSON");
  CLI11_PARSE(app, argc, argv);

  try {
    return run(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
