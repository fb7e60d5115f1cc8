#include "binpick/world.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <tuple>
#include <cmath>
#include <numbers>

namespace binpick {

namespace {

constexpr double kStackEps = 1e-9;

std::size_t tool_index(Tool t) { return t == Tool::Suction ? 0 : 1; }

}  // namespace

double ItemSpec::success_prob(Tool tool) const {
  return usable_with(tool) ? tool_success_prob[tool_index(tool)] : 0.0;
}

std::vector<std::string> check_item_spec(const ItemSpec& spec) {
  std::vector<std::string> out;
  if (spec.id.empty()) out.emplace_back("empty item id");
  if (!(spec.mass_g > 0.0)) out.push_back(spec.id + ": mass must be > 0");
  if (!(spec.bbox_mm.minCoeff() > 0.0)) out.push_back(spec.id + ": bbox dimensions must be > 0");
  if (!spec.suckable && !spec.grippable) out.push_back(spec.id + ": must be suckable or grippable");
  if (!spec.usable_with(spec.preferred_tool))
    out.push_back(spec.id + ": preferred tool cannot handle the item");
  for (double p : spec.tool_success_prob)
    if (!(p >= 0.0 && p <= 1.0)) out.push_back(spec.id + ": tool success probability outside [0,1]");
  if (!(spec.drop_prob >= 0.0 && spec.drop_prob <= 1.0))
    out.push_back(spec.id + ": drop probability outside [0,1]");
  return out;
}

Catalog::Catalog(std::vector<ItemSpec> items) : items_(std::move(items)) {
  for (std::size_t i = 0; i < items_.size(); ++i) index_.emplace(items_[i].id, i);
}

const ItemSpec* Catalog::find(std::string_view id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &items_[it->second];
}

const ItemSpec& Catalog::at(std::string_view id) const {
  if (const auto* s = find(id)) return *s;
  throw PreconditionError("unknown item '" + std::string(id) + "'");
}

double Catalog::min_mass_gap() const {
  std::vector<double> m;
  m.reserve(items_.size());
  for (const auto& s : items_) m.push_back(s.mass_g);
  std::sort(m.begin(), m.end());
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < m.size(); ++i) gap = std::min(gap, m[i] - m[i - 1]);
  return gap;
}

bool Container::contains_xy(const Vec2& xy, double margin) const {
  return distance_to_wall(xy) >= margin;
}

double Container::distance_to_wall(const Vec2& xy) const {
  const Vec2 lo = origin.head<2>();
  const Vec2 hi = lo + interior;
  return std::min({xy.x() - lo.x(), hi.x() - xy.x(), xy.y() - lo.y(), hi.y() - xy.y()});
}

std::vector<Container> default_layout() {
  auto make = [](std::string id, ContainerKind kind, double x, double y, double w, double d, double wall) {
    Container c;
    c.id = std::move(id);
    c.kind = kind;
    c.origin = Vec3(x, y, 0.0);
    c.interior = Vec2(w, d);
    c.wall_height = wall;
    return c;
  };
  return {
      make("tote", ContainerKind::Tote, 0.62, 0.03, 0.35, 0.55, 0.30),
      make("storage_a", ContainerKind::StorageCompartment, 0.03, 0.03, 0.55, 0.35, 0.30),
      make("storage_b", ContainerKind::StorageCompartment, 0.03, 0.41, 0.55, 0.35, 0.30),
      make("box_1", ContainerKind::ShippingBox, 0.03, 0.80, 0.26, 0.17, 0.15),
      make("box_2", ContainerKind::ShippingBox, 0.32, 0.80, 0.26, 0.17, 0.15),
      make("box_3", ContainerKind::ShippingBox, 0.62, 0.62, 0.35, 0.35, 0.15),
  };
}

bool Footprint::contains(const Vec2& xy, double eps) const {
  const Vec2 d = xy - centre;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double lx = c * d.x() + s * d.y();
  const double ly = -s * d.x() + c * d.y();
  return std::abs(lx) <= half_x + eps && std::abs(ly) <= half_y + eps;
}

Vec2 Footprint::aabb_half() const {
  const double c = std::abs(std::cos(yaw)), s = std::abs(std::sin(yaw));
  return {c * half_x + s * half_y, s * half_x + c * half_y};
}

bool Footprint::aabb_overlaps(const Footprint& other) const {
  const Vec2 a = aabb_half(), b = other.aabb_half();
  return std::abs(centre.x() - other.centre.x()) < a.x() + b.x() - kStackEps &&
         std::abs(centre.y() - other.centre.y()) < a.y() + b.y() - kStackEps;
}

const ItemSpec& WorldState::spec_of(std::size_t instance) const {
  return catalog->at(items.at(instance).spec_id);
}

Footprint WorldState::footprint(std::size_t instance) const {
  const auto& inst = items.at(instance);
  const auto& spec = spec_of(instance);
  return {inst.pose.position.head<2>(), inst.pose.yaw, 0.5e-3 * spec.bbox_mm.x(), 0.5e-3 * spec.bbox_mm.y()};
}

double WorldState::height_of(std::size_t instance) const { return 1e-3 * spec_of(instance).bbox_mm.z(); }

std::optional<std::size_t> WorldState::container_index(std::string_view id) const {
  for (std::size_t i = 0; i < containers.size(); ++i)
    if (containers[i].id == id) return i;
  return std::nullopt;
}

std::size_t WorldState::require_container(std::string_view id) const {
  if (auto i = container_index(id)) return *i;
  throw PreconditionError("unknown container '" + std::string(id) + "'");
}

std::vector<std::size_t> WorldState::items_in(std::size_t container) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].location == container) out.push_back(i);
  return out;
}

std::optional<std::size_t> WorldState::instance_of(std::string_view spec_id) const {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (items[i].spec_id == spec_id) return i;
  return std::nullopt;
}

std::optional<std::size_t> WorldState::topmost_at(std::size_t container, const Vec2& xy) const {
  std::optional<std::size_t> best;
  double best_top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].location != container) continue;
    const double top = items[i].pose.position.z() + height_of(i);
    if (top > best_top && footprint(i).contains(xy)) {
      best = i;
      best_top = top;
    }
  }
  return best;
}

double WorldState::surface_z(std::size_t container, const Vec2& xy) const {
  if (auto i = topmost_at(container, xy)) return items[*i].pose.position.z() + height_of(*i);
  return containers.at(container).floor_z();
}

void WorldState::advance(double seconds) {
  if (seconds > 0.0) clock += seconds;
}

void WorldState::move_wrist(const Pose& to, const MotionParams& motion) {
  advance(move_time(gripper.wrist, to, motion));
  gripper.wrist = to;
}

namespace {

/// Resting bottom height for a footprint dropped into a container.
double rest_height(const WorldState& w, std::size_t container, const Footprint& fp,
                   std::size_t ignore = kInGripper) {
  double z = w.containers[container].floor_z();
  for (std::size_t i = 0; i < w.items.size(); ++i) {
    if (i == ignore || w.items[i].location != container) continue;
    if (fp.aabb_overlaps(w.footprint(i))) z = std::max(z, w.items[i].pose.position.z() + w.height_of(i));
  }
  return z;
}

void set_resting(WorldState& w, std::size_t inst, std::size_t container, const Vec2& xy, double yaw) {
  auto& item = w.items[inst];
  item.location = container;
  item.pose.position = Vec3(xy.x(), xy.y(), 0.0);
  item.pose.yaw = yaw;
  const double z = rest_height(w, container, w.footprint(inst), inst);
  item.pose.position.z() = z;
  const auto& c = w.containers[container];
  item.top_height = z + w.height_of(inst) - c.floor_z();
  item.protruding = c.kind == ContainerKind::StorageCompartment && item.top_height > c.wall_height + kStackEps;
}

/// Quasi-static re-settling after an item is removed from under others.
void settle(WorldState& w, std::size_t container) {
  auto members = w.items_in(container);
  std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
    return w.items[a].pose.position.z() < w.items[b].pose.position.z();
  });
  const auto& c = w.containers[container];
  std::vector<std::size_t> settled;
  for (std::size_t inst : members) {
    const Footprint fp = w.footprint(inst);
    double z = c.floor_z();
    for (std::size_t other : settled)
      if (fp.aabb_overlaps(w.footprint(other)))
        z = std::max(z, w.items[other].pose.position.z() + w.height_of(other));
    auto& item = w.items[inst];
    item.pose.position.z() = z;
    item.top_height = z + w.height_of(inst) - c.floor_z();
    item.protruding = c.kind == ContainerKind::StorageCompartment && item.top_height > c.wall_height + kStackEps;
    settled.push_back(inst);
  }
  recompute_occlusion(w, container);
}

Vec2 clamp_into(const Container& c, const Vec2& half, const Vec2& xy) {
  Vec2 out = xy;
  for (int k = 0; k < 2; ++k) {
    const double lo = c.origin[k] + half[k];
    const double hi = c.origin[k] + c.interior[k] - half[k];
    out[k] = lo <= hi ? std::clamp(xy[k], lo, hi) : c.origin[k] + 0.5 * c.interior[k];
  }
  return out;
}

}  // namespace

void recompute_occlusion(WorldState& w, std::size_t container) {
  const auto members = w.items_in(container);
  for (std::size_t a : members) {
    auto& occ = w.items[a].occluded_by;
    occ.clear();
    const double top = w.items[a].pose.position.z() + w.height_of(a);
    const Footprint fa = w.footprint(a);
    for (std::size_t b : members) {
      if (a == b) continue;
      if (w.items[b].pose.position.z() >= top - kStackEps && fa.aabb_overlaps(w.footprint(b))) occ.push_back(b);
    }
  }
}

WorldState spawn_scene(const TaskSpec& task, std::shared_ptr<const Catalog> catalog,
                       std::vector<Container> layout, const WorldConfig& config, std::uint64_t seed) {
  WorldState w;
  w.catalog = std::move(catalog);
  w.config = config;
  w.containers = std::move(layout);
  w.rng = RngStreams(seed);
  w.gripper.wrist.position = Vec3(0.5, 0.5, 0.8);

  for (const auto& entry : task.manifest) {
    const ItemSpec& spec = w.catalog->at(entry.item);
    const std::size_t c = w.require_container(entry.container);
    const Container& box = w.containers[c];

    ItemInstance inst;
    inst.spec_id = spec.id;
    inst.location = c;
    w.items.push_back(inst);
    const std::size_t idx = w.items.size() - 1;

    const double u = w.rng.placement.uniform(0.0, std::numbers::pi);
    const double half_pi = 0.5 * std::numbers::pi;
    const double yaws[4] = {u, std::fmod(u + half_pi, std::numbers::pi), 0.0, half_pi};
    std::vector<std::tuple<double, Vec2, double>> spots;
    double lowest = std::numeric_limits<double>::infinity();
    const double step = config.place_grid;
    for (const double yaw : yaws) {
      Footprint fp{Vec2::Zero(), yaw, 0.5e-3 * spec.bbox_mm.x(), 0.5e-3 * spec.bbox_mm.y()};
      const Vec2 half = fp.aabb_half();
      for (double x = box.origin.x() + half.x(); x <= box.origin.x() + box.interior.x() - half.x() + 1e-12; x += step)
        for (double y = box.origin.y() + half.y(); y <= box.origin.y() + box.interior.y() - half.y() + 1e-12;
             y += step) {
          fp.centre = Vec2(x, y);
          const double z = rest_height(w, c, fp, idx);
          spots.emplace_back(z, fp.centre, yaw);
          lowest = std::min(lowest, z);
        }
    }
    Vec2 best_xy = box.centre();
    double yaw = u;
    std::vector<std::size_t> low;
    for (std::size_t k = 0; k < spots.size(); ++k)
      if (std::get<0>(spots[k]) <= lowest + config.spawn_slack + kStackEps) low.push_back(k);
    if (!low.empty()) {
      const auto& pick = spots[low[w.rng.placement.index(low.size())]];
      best_xy = std::get<1>(pick);
      yaw = std::get<2>(pick);
    }
    set_resting(w, idx, c, best_xy, yaw);
    if (w.items[idx].top_height > box.wall_height + kStackEps)
      throw PlacementError("manifest exceeds capacity of '" + box.id + "' while placing '" + spec.id + "'");
  }
  for (std::size_t c = 0; c < w.containers.size(); ++c) recompute_occlusion(w, c);
  return w;
}

namespace {

struct ProbeResult {
  bool success = false;
  std::optional<FailureCause> cause;
};

/// Samples the three degradation factors in a fixed order so the stream
/// position does not depend on the outcome.
ProbeResult sample_probe(WorldState& w, std::size_t source, const GraspCandidate& cand, Tool tool,
                         const std::optional<std::size_t>& hit, const std::string& target) {
  const double u_occ = w.rng.grasp.uniform();
  const double u_edge = w.rng.grasp.uniform();
  const double u_pose = w.rng.grasp.uniform();
  if (!hit) return {false, FailureCause::Perception};

  const bool wrong_item = w.items[*hit].spec_id != target;
  auto fail = [&](FailureCause c) { return ProbeResult{false, wrong_item ? FailureCause::Perception : c}; };

  const bool occluded = !w.items[*hit].occluded_by.empty();
  if (occluded && u_occ >= 1.0 - w.config.occlusion_penalty) return fail(FailureCause::PhysicalOcclusion);
  const bool near_wall = w.containers[source].distance_to_wall(cand.position.head<2>()) < w.config.edge_distance;
  if (near_wall && u_edge >= w.config.edge_penalty) return fail(FailureCause::Unreachable);
  if (u_pose >= w.spec_of(*hit).success_prob(tool)) return fail(FailureCause::GraspPoseFailure);
  return {true, std::nullopt};
}

}  // namespace

GraspOutcome apply_grasp(WorldState& w, const GraspPlan& plan, const GraspRequest& request,
                         const MotionParams& motion) {
  if (!w.gripper.held.empty()) throw PreconditionError("apply_grasp: gripper is not empty");
  if (plan.candidates.empty()) throw PreconditionError("apply_grasp: empty grasp plan");
  if (request.source >= w.containers.size()) throw PreconditionError("apply_grasp: unknown source container");
  const Container& src = w.containers[request.source];
  if (src.kind == ContainerKind::ShippingBox) throw PreconditionError("apply_grasp: cannot grasp from a shipping box");
  for (const auto& c : plan.candidates)
    if (!src.contains_xy(c.position.head<2>(), -1e-9))
      throw PreconditionError("apply_grasp: candidate outside the believed container '" + src.id + "'");

  if (plan.tool != w.gripper.active_tool) {
    w.advance(tool_change_time(w.gripper.active_tool, plan.tool, motion));
    w.gripper.active_tool = plan.tool;
  }

  GraspOutcome out;
  const std::size_t tries = plan.tool == Tool::Suction ? std::min<std::size_t>(3, plan.candidates.size()) : 1;
  const double approach_z = std::min(src.top_z() + w.config.approach_clearance, motion.workspace.z());

  for (std::size_t k = 0; k < tries; ++k) {
    const GraspCandidate& cand = plan.candidates[k];
    const Vec2 xy = cand.position.head<2>();
    const double yaw = plan.tool == Tool::Gripper ? cand.gripper_yaw : w.gripper.wrist.yaw;
    const Pose above{Vec3(xy.x(), xy.y(), approach_z), yaw};
    w.move_wrist(above, motion);

    const auto hit = w.topmost_at(request.source, xy);
    const double surface = w.surface_z(request.source, xy);
    double contact_z = std::clamp(cand.position.z(), src.floor_z(), approach_z);
    if (plan.descend_until_contact) {
      const double res = w.config.contact_resolution;
      const double steps = std::ceil((approach_z - surface) / res - 1e-9);
      contact_z = std::max(src.floor_z(), approach_z - steps * res);
    }
    w.move_wrist(Pose{Vec3(xy.x(), xy.y(), contact_z), yaw}, motion);
    w.advance(motion.grasp_probe_time);

    const ProbeResult r = sample_probe(w, request.source, cand, plan.tool, hit, request.target);
    out.probes.push_back({r.success, r.cause, hit, contact_z - src.floor_z()});

    if (!r.success) {
      w.move_wrist(above, motion);
      continue;
    }

    // Lift.
    std::vector<std::size_t> lifted{*hit};
    if (plan.tool == Tool::Suction && w.rng.grasp.bernoulli(w.config.double_pick_prob)) {
      const Footprint fp = w.footprint(*hit);
      for (std::size_t other : w.items_in(request.source))
        if (other != *hit && fp.aabb_overlaps(w.footprint(other))) {
          lifted.push_back(other);
          break;
        }
    }
    for (std::size_t i : lifted) w.items[i].location = kInGripper;
    w.gripper.held = lifted;
    w.vacuum_sealed = plan.tool == Tool::Suction;
    settle(w, request.source);
    w.move_wrist(above, motion);

    out.grasped_instance = *hit;
    if (w.rng.grasp.bernoulli(w.spec_of(*hit).drop_prob * w.config.drop_prob_scale)) {
      drop_held(w, request.source);
      out.kind = OutcomeKind::DroppedItem;
    } else {
      out.kind = OutcomeKind::Success;
    }
    return out;
  }

  out.kind = OutcomeKind::FailedGrasp;
  out.cause = out.probes.front().cause;
  return out;
}

namespace {

Vec2 lowest_spot(const WorldState& w, std::size_t dest, Footprint fp, std::size_t self) {
  const Container& c = w.containers[dest];
  const Vec2 half = fp.aabb_half();
  const double step = w.config.place_grid;
  Vec2 best = clamp_into(c, half, c.centre());
  fp.centre = best;
  double best_z = rest_height(w, dest, fp, self);
  double best_d = 0.0;
  const Vec2 lo = c.origin.head<2>() + half;
  const Vec2 hi = c.origin.head<2>() + c.interior - half;
  if (lo.x() > hi.x() || lo.y() > hi.y()) return best;
  for (double x = lo.x(); x <= hi.x() + 1e-12; x += step) {
    for (double y = lo.y(); y <= hi.y() + 1e-12; y += step) {
      fp.centre = Vec2(x, y);
      const double z = rest_height(w, dest, fp, self);
      const double d = (fp.centre - c.centre()).squaredNorm();
      if (z < best_z - kStackEps || (z < best_z + kStackEps && d < best_d)) {
        best_z = z;
        best_d = d;
        best = fp.centre;
      }
    }
  }
  return best;
}

}  // namespace

void place_item(WorldState& w, std::size_t dest, double aligned_yaw, const MotionParams* motion) {
  if (w.gripper.held.empty()) throw PreconditionError("place_item: gripper holds nothing");
  if (dest >= w.containers.size()) throw PreconditionError("place_item: unknown destination");
  const Container& c = w.containers[dest];
  const auto held = w.gripper.held;
  for (std::size_t n = 0; n < held.size(); ++n) {
    const std::size_t inst = held[n];
    Footprint fp = w.footprint(inst);
    fp.yaw = aligned_yaw;
    const Vec2 spot = lowest_spot(w, dest, fp, inst);
    if (motion != nullptr && n == 0) {
      const double approach_z = std::min(c.top_z() + w.config.approach_clearance, motion->workspace.z());
      w.move_wrist(Pose{Vec3(spot.x(), spot.y(), approach_z), aligned_yaw}, *motion);
    }
    set_resting(w, inst, dest, spot, aligned_yaw);
  }
  if (motion != nullptr) {
    w.advance(motion->release_time);
  }
  w.gripper.held.clear();
  w.vacuum_sealed = false;
  recompute_occlusion(w, dest);
}

void drop_held(WorldState& w, std::size_t container) {
  for (std::size_t inst : w.gripper.held) {
    const Vec2 xy = w.gripper.wrist.position.head<2>();
    Footprint fp = w.footprint(inst);
    set_resting(w, inst, container, clamp_into(w.containers[container], fp.aabb_half(), xy), w.items[inst].pose.yaw);
  }
  w.gripper.held.clear();
  w.vacuum_sealed = false;
  recompute_occlusion(w, container);
}

double true_mass_in(const WorldState& w, std::size_t container) {
  double total = 0.0;
  for (std::size_t i = 0; i < w.items.size(); ++i)
    if (w.items[i].location == container) total += w.spec_of(i).mass_g;
  return total;
}

double read_scale(WorldState& w, std::size_t container) {
  if (container >= w.containers.size()) throw PreconditionError("read_scale: unknown container");
  const double b = w.config.scale_noise_g;
  const double noise = b > 0.0 ? w.rng.scale.uniform(-b, b) : 0.0;
  return true_mass_in(w, container) + noise;
}

bool vacuum_state(const WorldState& w) {
  if (w.gripper.active_tool != Tool::Suction) throw PreconditionError("vacuum_state: suction tool is not active");
  return w.vacuum_sealed && !w.gripper.held.empty();
}

bool conservation_holds(const WorldState& w) {
  std::size_t held = 0;
  for (std::size_t i = 0; i < w.items.size(); ++i) {
    const auto loc = w.items[i].location;
    if (loc == kInGripper) {
      ++held;
      if (std::find(w.gripper.held.begin(), w.gripper.held.end(), i) == w.gripper.held.end()) return false;
    } else if (loc >= w.containers.size()) {
      return false;
    }
  }
  return held == w.gripper.held.size();
}

}  // namespace binpick
