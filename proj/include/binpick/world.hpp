#pragma once

#include "binpick/grasp_types.hpp"
#include "binpick/motion.hpp"
#include "binpick/rng.hpp"
#include "binpick/task.hpp"
#include "binpick/types.hpp"

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace binpick {

struct ItemSpec {
  std::string id;
  double mass_g = 0.0;
  Vec3 bbox_mm = Vec3::Zero();  // x, y footprint and z height when resting
  Rigidity rigidity = Rigidity::Rigid;
  VisualClass visual_class = VisualClass::Opaque;
  bool suckable = true;
  bool grippable = false;
  Tool preferred_tool = Tool::Suction;
  std::array<double, 2> tool_success_prob{0.0, 0.0};  // indexed by Tool
  std::optional<Strategy> forced_strategy;
  double drop_prob = 0.03;

  /// Zero for a tool the item cannot be handled with.
  double success_prob(Tool tool) const;
  bool usable_with(Tool tool) const { return tool == Tool::Suction ? suckable : grippable; }
};

/// Returns a list of human-readable invariant violations (empty when valid).
std::vector<std::string> check_item_spec(const ItemSpec& spec);

class Catalog {
 public:
  Catalog() = default;
  explicit Catalog(std::vector<ItemSpec> items);

  const ItemSpec* find(std::string_view id) const;
  const ItemSpec& at(std::string_view id) const;
  const std::vector<ItemSpec>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }

  /// Smallest absolute mass difference between any two items.
  double min_mass_gap() const;

 private:
  std::vector<ItemSpec> items_;
  std::map<std::string, std::size_t, std::less<>> index_;  // first occurrence wins
};

struct Container {
  std::string id;
  ContainerKind kind = ContainerKind::Tote;
  Vec3 origin = Vec3::Zero();   // interior minimum corner; z is the floor
  Vec2 interior{0.5, 0.35};     // metres
  double wall_height = 0.3;     // metres

  double floor_z() const { return origin.z(); }
  double top_z() const { return origin.z() + wall_height; }
  Vec2 centre() const { return origin.head<2>() + 0.5 * interior; }
  bool contains_xy(const Vec2& xy, double margin = 0.0) const;
  /// Horizontal distance to the nearest interior wall; negative outside.
  double distance_to_wall(const Vec2& xy) const;
};

/// Tote, two storage compartments and three shipping boxes laid out inside a
/// 1.0 x 1.0 m gantry footprint. The storage compartments are tote sized.
std::vector<Container> default_layout();

inline constexpr std::size_t kInGripper = std::numeric_limits<std::size_t>::max();

struct ItemInstance {
  std::string spec_id;
  Pose pose;  // footprint centre; z is the resting bottom height
  std::size_t location = 0;  // container index or kInGripper
  double top_height = 0.0;   // above the container floor
  std::vector<std::size_t> occluded_by;
  bool protruding = false;

  bool in_gripper() const { return location == kInGripper; }
};

/// Rotated rectangular footprint of a resting item.
struct Footprint {
  Vec2 centre = Vec2::Zero();
  double yaw = 0.0;
  double half_x = 0.0;
  double half_y = 0.0;

  bool contains(const Vec2& xy, double eps = 1e-9) const;
  /// Half extents of the axis-aligned bounding box.
  Vec2 aabb_half() const;
  bool aabb_overlaps(const Footprint& other) const;
};

struct WorldConfig {
  double scale_noise_g = 2.0;      // uniform +- bound per reading
  double occlusion_penalty = 0.5;
  double edge_penalty = 0.8;
  double edge_distance = 0.04;     // metres from a wall
  double double_pick_prob = 0.01;  // suction lifts a touching neighbour too
  double drop_prob_scale = 1.5;    // multiplies every item's drop_prob
  double approach_clearance = 0.05;
  double contact_resolution = 0.005;
  double place_grid = 0.01;
  double spawn_slack = 0.02;  // spawn picks any spot at most this far above the lowest
};

struct GripperState {
  std::vector<std::size_t> held;  // usually zero or one instance
  Tool active_tool = Tool::Suction;
  Pose wrist;
};

struct WorldState {
  std::shared_ptr<const Catalog> catalog;
  WorldConfig config;
  std::vector<Container> containers;
  std::vector<ItemInstance> items;
  GripperState gripper;
  bool vacuum_sealed = false;
  double clock = 0.0;
  RngStreams rng;

  const ItemSpec& spec_of(std::size_t instance) const;
  Footprint footprint(std::size_t instance) const;
  double height_of(std::size_t instance) const;

  std::optional<std::size_t> container_index(std::string_view id) const;
  std::size_t require_container(std::string_view id) const;
  std::vector<std::size_t> items_in(std::size_t container) const;
  std::optional<std::size_t> instance_of(std::string_view spec_id) const;

  /// Topmost instance in the container whose footprint contains xy.
  std::optional<std::size_t> topmost_at(std::size_t container, const Vec2& xy) const;
  /// Height of the exposed surface at xy (item top or container floor).
  double surface_z(std::size_t container, const Vec2& xy) const;

  void advance(double seconds);
  /// Moves the wrist and advances the clock by the motion time.
  void move_wrist(const Pose& to, const MotionParams& motion);
};

/// Lays out the manifest with random quasi-static stacking. Deterministic in
/// (task, catalog, layout, config, seed). Throws PlacementError when an item
/// cannot rest below its container's wall.
WorldState spawn_scene(const TaskSpec& task, std::shared_ptr<const Catalog> catalog,
                       std::vector<Container> layout, const WorldConfig& config, std::uint64_t seed);

struct GraspRequest {
  std::size_t source = 0;
  std::string target;  // the label the orchestrator believes it is grasping
};

struct ProbeRecord {
  bool success = false;
  std::optional<FailureCause> cause;
  std::optional<std::size_t> hit_instance;
  double contact_height = 0.0;  // above the container floor
};

struct GraspOutcome {
  OutcomeKind kind = OutcomeKind::FailedGrasp;
  std::optional<FailureCause> cause;
  std::optional<std::size_t> grasped_instance;
  std::vector<ProbeRecord> probes;
};

/// Executes one grasp attempt. Success per probe is sampled from the hit
/// item's tool probability degraded by occlusion and wall proximity; suction
/// tries up to three candidates in order. Advances the clock.
GraspOutcome apply_grasp(WorldState& world, const GraspPlan& plan, const GraspRequest& request,
                         const MotionParams& motion);

/// Places everything held into dest at the lowest free spot. Advances the
/// clock when motion is given.
void place_item(WorldState& world, std::size_t dest, double aligned_yaw,
                const MotionParams* motion = nullptr);

/// Lets the held items fall back into a container. The vacuum seal is lost.
void drop_held(WorldState& world, std::size_t container);

double read_scale(WorldState& world, std::size_t container);
double true_mass_in(const WorldState& world, std::size_t container);

/// Pressure-switch reading. Throws PreconditionError unless suction is active.
bool vacuum_state(const WorldState& world);

/// Every instance is in exactly one container or held by the gripper.
bool conservation_holds(const WorldState& world);

void recompute_occlusion(WorldState& world, std::size_t container);

}  // namespace binpick
