#pragma once

#include "binpick/orchestrator.hpp"
#include "binpick/runlog.hpp"
#include "binpick/scoring.hpp"
#include "binpick/task.hpp"
#include "binpick/world.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace binpick {

inline constexpr int kSchemaVersion = 1;

/// Sizes and limits for generated competition-style tasks.
struct TaskDefaults {
  std::size_t stow_items = 20;
  double stow_time_limit = 900.0;
  std::size_t pick_storage_items = 32;
  std::size_t order_size = 10;
  std::vector<std::size_t> box_split{2, 3, 5};  // order lines per shipping box
  double pick_time_limit = 900.0;
  std::size_t finals_storage_items = 16;
  std::size_t finals_tote_items = 16;
  double finals_time_limit = 1800.0;
};

struct Config {
  std::filesystem::path path;
  std::shared_ptr<const Catalog> catalog;
  std::shared_ptr<const Catalog> longrun_catalog;
  ScoreTable score_table = ScoreTable::calibration();
  SimParams params;
  LongrunParams longrun;
  TaskDefaults tasks;
  std::optional<TaskSpec> task;  // explicit task overriding generation
};

/// Parses `dotted.path=value`; the value is read as JSON and falls back to a
/// plain string.
void apply_override(Json& doc, const std::string& assignment);

/// Schema and cross-reference diagnostics, each prefixed with its field path.
/// An empty list means the file is valid. Throws ConfigError if unreadable.
std::vector<std::string> validate_config(const std::filesystem::path& path,
                                         const std::vector<std::string>& overrides = {});

/// Throws ConfigError listing every diagnostic.
Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

std::vector<std::string> parse_catalog(const Json& doc, std::vector<ItemSpec>& out, const std::string& where);
std::shared_ptr<const Catalog> load_catalog(const std::filesystem::path& path);
Json to_json(const ItemSpec& s);

ScoreTable load_score_table(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);

/// Random competition-style task drawn from the catalog. Deterministic in seed.
TaskSpec make_task(Phase phase, const Catalog& catalog, const TaskDefaults& d, std::uint64_t seed);

/// A labelled scene for perception calibration.
struct CorpusScene {
  int id = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> items;
};

std::vector<CorpusScene> read_corpus(std::istream& is);
std::vector<CorpusScene> read_corpus(const std::filesystem::path& path);
void write_corpus(std::ostream& os, const std::vector<CorpusScene>& scenes);

/// Scenes whose item counts cycle through [lo, hi]; every scene fits the tote.
std::vector<CorpusScene> generate_corpus(const Catalog& catalog, std::size_t n, std::size_t lo, std::size_t hi,
                                         std::uint64_t seed, const WorldConfig& world);

/// Top-view F0.5 of one scene laid out in the tote.
double evaluate_scene(const CorpusScene& scene, std::shared_ptr<const Catalog> catalog,
                      const PerceptionParams& perception, const WorldConfig& world);

/// Per-scene scores computed in parallel; the result does not depend on the
/// thread count.
std::vector<double> evaluate_corpus(const std::vector<CorpusScene>& scenes, std::shared_ptr<const Catalog> catalog,
                                    const PerceptionParams& perception, const WorldConfig& world);

}  // namespace binpick
