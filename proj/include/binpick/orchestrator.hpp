#pragma once

#include "binpick/grasp.hpp"
#include "binpick/motion.hpp"
#include "binpick/perception.hpp"
#include "binpick/runlog.hpp"
#include "binpick/task.hpp"
#include "binpick/world.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace binpick {

struct SelectionParams {
  double height_bin = 0.03;         // metres per height group
  int blacklist_after = 3;          // consecutive failed attempts
  std::size_t min_segment_area = 12;
  double min_confidence = 0.2;
  std::size_t double_check_threshold = 5;
  double weight_tolerance_g = 5.0;
  int max_search_moves = 6;         // fruitless moves before an order line is abandoned
  int max_empty_perceives = 3;      // consecutive views with nothing selectable
};

std::vector<std::string> check_selection_params(const SelectionParams& p);

/// Everything a run needs besides the catalog and the task.
struct SimParams {
  WorldConfig world;
  PerceptionParams perception;
  GraspScoringParams grasp;
  MotionParams motion;
  SelectionParams selection;
  double finals_stow_fraction = 0.5;  // share of the finals time limit reserved for stowing

  /// Perfect perception, exact scales, no drops or double picks.
  static SimParams zero_noise();
};

struct ItemBelief {
  std::string container;
  int consecutive_failures = 0;
  std::optional<Vec3> last_seen;
  std::string last_seen_container;
  std::string last_seen_view;
  int sightings = 0;
  // Double-check detections outside the believed container.
  std::string elsewhere_container;
  int elsewhere_streak = 0;
};

struct Reclassification {
  double time_s = 0.0;
  std::string from;
  std::string to;
  std::string container;
  std::string via;  // "weight" or "side_camera"
};

/// The controller's internal model of where every manifest item is.
struct Belief {
  std::map<std::string, ItemBelief> items;
  std::vector<Reclassification> reclassifications;

  static Belief from_world(const WorldState& world);

  std::vector<std::string> in_container(std::string_view id) const;
  std::string location_of(std::string_view label) const;
  void move(const std::string& label, const std::string& container);
  /// Every listed item has exactly one believed location and nothing else is tracked.
  bool is_partition(std::span<const std::string> manifest) const;
  /// Labels whose believed location differs from ground truth.
  std::vector<std::string> mismatches(const WorldState& world) const;
  /// Overwrites beliefs with ground truth; used when a human steps in.
  void reset_to(const WorldState& world);
};

/// Mean height of the depth-valid points above floor_z; 0 when none are valid.
double percept_height(const SegmentPercept& p, double floor_z = 0.0);

struct Selection {
  std::size_t index = 0;  // into the percept list
  std::string label;
  int height_bin = 0;
  bool relaxed = false;   // a filter had to be dropped to find a target
};

/// Highest 3 cm height group first, then confidence, then label. Percepts
/// whose label is not wanted are ignored. Blacklist, area and confidence
/// filters are relaxed in that order when they leave nothing.
std::optional<Selection> select_next_item(std::span<const SegmentPercept> percepts, const Belief& belief,
                                          const std::set<std::string>& wanted, const SelectionParams& params,
                                          double floor_z = 0.0);

enum class VerifyKind { Confirmed, Reclassified, SecondLook, Replace };
std::string_view to_string(VerifyKind k);

struct ScaleData {
  std::optional<double> pre_g;
  std::optional<double> post_g;
};

struct VerifyResult {
  VerifyKind kind = VerifyKind::Replace;
  std::string label;                    // confirmed or reclassified label
  std::vector<std::string> candidates;  // for SecondLook
  double delta_g = 0.0;
};

/// Weight consensus for a lifted item. Throws PreconditionError without both
/// scale readings.
VerifyResult verify_grasp(const Catalog& catalog, const std::string& expected, const std::string& source,
                          const Belief& belief, const ScaleData& scales, double tolerance_g);

struct PerceiveResult {
  std::vector<SegmentPercept> percepts;
  std::vector<View> views;
  bool used_closeups = false;
};

/// Top view first; when it shows no wanted item both close-ups are taken and
/// all views are merged by label keeping the most confident percept.
PerceiveResult active_perceive(WorldState& world, std::size_t compartment, const std::set<std::string>& wanted,
                               const SimParams& params, RunLog* log = nullptr);

struct SearchMove {
  std::size_t percept = 0;
  std::string label;
  std::string source;
  std::string destination;
  bool near_sighting = false;
};

/// Chooses an unwanted item to move out of the way when no wanted item is
/// visible. Returns nullopt when nothing can be moved.
std::optional<SearchMove> directed_search(const WorldState& world, std::size_t compartment,
                                          std::span<const SegmentPercept> percepts,
                                          const std::set<std::string>& wanted, const Belief& belief);

struct Correction {
  std::string label;
  std::string from;
  std::string to;
};

/// Re-images the tote and both compartments when at most
/// double_check_threshold items remain. A label seen in the same unexpected
/// container on two consecutive checks, and not in its believed one, is moved
/// there in the belief. Returns the applied corrections.
std::vector<Correction> double_check(WorldState& world, Belief& belief, std::size_t remaining,
                                     const SimParams& params, RunLog* log = nullptr);

struct TaskResult {
  bool timed_out = false;
  bool aborted = false;
  bool manual_intervention = false;
  std::size_t attempts = 0;
};

/// Runs one stow, pick or finals task on an existing world.
TaskResult run_task(WorldState& world, Belief& belief, const TaskSpec& spec, const SimParams& params, RunLog& log);

/// Spawns the world from the spec and seed, then runs it.
RunLog run_task(const TaskSpec& spec, std::shared_ptr<const Catalog> catalog, const SimParams& params,
                std::uint64_t seed, TaskResult* result = nullptr);

struct LongrunParams {
  double sim_hours = 7.2;
  double task_time_limit = 1200.0;
};

struct LongrunResult {
  std::size_t stow_tasks = 0;
  std::size_t pick_tasks = 0;
  std::size_t manual_interventions = 0;
  bool aborted = false;
};

/// Alternates stowing every tote item and picking every stored item back into
/// the tote until the simulated budget is spent. Belief errors found at the
/// end of a task are logged, fixed by hand and the run continues.
RunLog run_longrun(std::shared_ptr<const Catalog> catalog, const SimParams& params, const LongrunParams& lr,
                   std::uint64_t seed, LongrunResult* result = nullptr);

}  // namespace binpick
