#include "binpick/orchestrator.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

namespace binpick {

namespace {

constexpr const char* kGripperLocation = "gripper";
constexpr double kBinEps = 1e-9;

std::string location_name(const WorldState& w, std::size_t loc) {
  return loc == kInGripper ? std::string(kGripperLocation) : w.containers.at(loc).id;
}

double aligned_yaw(const ItemSpec& item, const Container& c) {
  const bool item_long_x = item.bbox_mm.x() >= item.bbox_mm.y();
  const bool box_long_x = c.interior.x() >= c.interior.y();
  return item_long_x == box_long_x ? 0.0 : std::numbers::pi / 2.0;
}

}  // namespace

std::vector<std::string> check_selection_params(const SelectionParams& p) {
  std::vector<std::string> out;
  if (!(p.height_bin > 0.0)) out.emplace_back("height_bin must be > 0");
  if (p.blacklist_after < 1) out.emplace_back("blacklist_after must be >= 1");
  if (!(p.min_confidence >= 0.0 && p.min_confidence <= 1.0)) out.emplace_back("min_confidence must be in [0,1]");
  if (p.double_check_threshold < 1) out.emplace_back("double_check_threshold must be >= 1");
  if (!(p.weight_tolerance_g > 0.0)) out.emplace_back("weight_tolerance_g must be > 0");
  if (p.max_search_moves < 1) out.emplace_back("max_search_moves must be >= 1");
  if (p.max_empty_perceives < 1) out.emplace_back("max_empty_perceives must be >= 1");
  return out;
}

SimParams SimParams::zero_noise() {
  SimParams p;
  p.perception = PerceptionParams::noiseless();
  p.world.scale_noise_g = 0.0;
  p.world.double_pick_prob = 0.0;
  p.world.drop_prob_scale = 0.0;
  return p;
}

// ---------------------------------------------------------------- belief

Belief Belief::from_world(const WorldState& w) {
  Belief b;
  for (const auto& inst : w.items) b.items[inst.spec_id].container = location_name(w, inst.location);
  return b;
}

std::vector<std::string> Belief::in_container(std::string_view id) const {
  std::vector<std::string> out;
  for (const auto& [label, b] : items)
    if (b.container == id) out.push_back(label);
  return out;
}

std::string Belief::location_of(std::string_view label) const {
  const auto it = items.find(std::string(label));
  return it == items.end() ? std::string() : it->second.container;
}

void Belief::move(const std::string& label, const std::string& container) { items[label].container = container; }

bool Belief::is_partition(std::span<const std::string> manifest) const {
  if (items.size() != manifest.size()) return false;
  for (const auto& label : manifest) {
    const auto it = items.find(label);
    if (it == items.end() || it->second.container.empty()) return false;
  }
  return true;
}

std::vector<std::string> Belief::mismatches(const WorldState& w) const {
  std::vector<std::string> out;
  for (const auto& inst : w.items)
    if (location_of(inst.spec_id) != location_name(w, inst.location)) out.push_back(inst.spec_id);
  std::sort(out.begin(), out.end());
  return out;
}

void Belief::reset_to(const WorldState& w) {
  for (const auto& inst : w.items) {
    auto& b = items[inst.spec_id];
    b.container = location_name(w, inst.location);
    b.elsewhere_container.clear();
    b.elsewhere_streak = 0;
  }
}

// ---------------------------------------------------------------- selection

double percept_height(const SegmentPercept& p, double floor_z) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& pt : p.points)
    if (pt.depth_valid) {
      sum += pt.position.z() - floor_z;
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

std::optional<Selection> select_next_item(std::span<const SegmentPercept> percepts, const Belief& belief,
                                          const std::set<std::string>& wanted, const SelectionParams& params,
                                          double floor_z) {
  struct Option {
    std::size_t index;
    int bin;
    bool blacklisted;
    bool small;
    bool unsure;
  };
  std::vector<Option> options;
  for (std::size_t i = 0; i < percepts.size(); ++i) {
    const auto& p = percepts[i];
    if (!wanted.count(p.label)) continue;
    const auto it = belief.items.find(p.label);
    const int failures = it == belief.items.end() ? 0 : it->second.consecutive_failures;
    const int bin = static_cast<int>(std::floor(percept_height(p, floor_z) / params.height_bin + kBinEps));
    options.push_back({i, bin, failures >= params.blacklist_after, p.pixel_area < params.min_segment_area,
                       p.confidence < params.min_confidence});
  }
  if (options.empty()) return std::nullopt;

  for (int level = 0; level < 4; ++level) {
    const Option* best = nullptr;
    for (const auto& o : options) {
      if (level < 1 && o.blacklisted) continue;
      if (level < 2 && o.small) continue;
      if (level < 3 && o.unsure) continue;
      if (best == nullptr) {
        best = &o;
        continue;
      }
      const auto& a = percepts[o.index];
      const auto& b = percepts[best->index];
      if (o.bin != best->bin) {
        if (o.bin > best->bin) best = &o;
      } else if (a.confidence != b.confidence) {
        if (a.confidence > b.confidence) best = &o;
      } else if (a.label < b.label) {
        best = &o;
      }
    }
    if (best != nullptr) return Selection{best->index, percepts[best->index].label, best->bin, level > 0};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- verification

std::string_view to_string(VerifyKind k) {
  switch (k) {
    case VerifyKind::Confirmed: return "confirmed";
    case VerifyKind::Reclassified: return "reclassified";
    case VerifyKind::SecondLook: return "second_look";
    case VerifyKind::Replace: return "replace";
  }
  return "?";
}

VerifyResult verify_grasp(const Catalog& catalog, const std::string& expected, const std::string& source,
                          const Belief& belief, const ScaleData& scales, double tolerance_g) {
  if (!scales.pre_g || !scales.post_g) throw PreconditionError("verify_grasp: missing scale reading");
  VerifyResult r;
  r.delta_g = *scales.pre_g - *scales.post_g;
  if (std::abs(r.delta_g - catalog.at(expected).mass_g) <= tolerance_g) {
    r.kind = VerifyKind::Confirmed;
    r.label = expected;
    return r;
  }
  for (const auto& label : belief.in_container(source)) {
    if (label == expected) continue;
    const ItemSpec* spec = catalog.find(label);
    if (spec != nullptr && std::abs(r.delta_g - spec->mass_g) <= tolerance_g) r.candidates.push_back(label);
  }
  if (r.candidates.size() == 1) {
    r.kind = VerifyKind::Reclassified;
    r.label = r.candidates.front();
    r.candidates.clear();
  } else if (r.candidates.size() > 1) {
    r.kind = VerifyKind::SecondLook;
  } else {
    r.kind = VerifyKind::Replace;
  }
  return r;
}

// ---------------------------------------------------------------- perception

namespace {

std::vector<SegmentPercept> capture(WorldState& w, const CameraPose& camera, const SimParams& params,
                                    std::string_view state, RunLog* log) {
  w.move_wrist(Pose{camera.position, w.gripper.wrist.yaw}, params.motion);
  w.advance(params.motion.perception_time);
  auto percepts = segment_scene(w, camera, params.perception, w.rng.perception);
  if (log != nullptr) {
    Json labels = Json::array();
    for (const auto& p : percepts) labels.push_back(p.label);
    log->add(w.clock, state, "image", "", w.containers[camera.container].id,
             Json{{"view", to_string(camera.view)}, {"labels", labels}});
  }
  return percepts;
}

void sort_percepts(std::vector<SegmentPercept>& v) {
  std::stable_sort(v.begin(), v.end(), [](const SegmentPercept& a, const SegmentPercept& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.label < b.label;
  });
}

}  // namespace

PerceiveResult active_perceive(WorldState& w, std::size_t compartment, const std::set<std::string>& wanted,
                               const SimParams& params, RunLog* log) {
  const auto poses = viewpoints_for(w, compartment);
  PerceiveResult res;
  res.percepts = capture(w, poses[0], params, "Perceive", log);
  res.views.push_back(View::TopFull);
  const bool found = std::any_of(res.percepts.begin(), res.percepts.end(),
                                 [&](const SegmentPercept& p) { return wanted.count(p.label) > 0; });
  if (found) return res;

  res.used_closeups = true;
  std::vector<SegmentPercept> all = std::move(res.percepts);
  for (std::size_t k = 1; k < poses.size(); ++k) {
    auto more = capture(w, poses[k], params, "Perceive", log);
    res.views.push_back(poses[k].view);
    for (auto& p : more) all.push_back(std::move(p));
  }
  std::map<std::string, SegmentPercept> best;
  for (auto& p : all) {
    auto it = best.find(p.label);
    if (it == best.end() || p.confidence > it->second.confidence) best[p.label] = std::move(p);
  }
  res.percepts.clear();
  for (auto& [label, p] : best) res.percepts.push_back(std::move(p));
  sort_percepts(res.percepts);
  return res;
}

std::optional<SearchMove> directed_search(const WorldState& w, std::size_t compartment,
                                          std::span<const SegmentPercept> percepts,
                                          const std::set<std::string>& wanted, const Belief& belief) {
  const Container& c = w.containers.at(compartment);
  std::vector<std::size_t> unwanted;
  for (std::size_t i = 0; i < percepts.size(); ++i)
    if (!wanted.count(percepts[i].label) && belief.location_of(percepts[i].label) == c.id) unwanted.push_back(i);
  if (unwanted.empty()) return std::nullopt;

  std::vector<Vec2> anchors;
  for (const auto& label : wanted) {
    const auto it = belief.items.find(label);
    if (it != belief.items.end() && it->second.last_seen && it->second.last_seen_container == c.id)
      anchors.push_back(it->second.last_seen->head<2>());
  }

  SearchMove mv;
  mv.source = c.id;
  if (!anchors.empty()) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i : unwanted) {
      const Vec2 xy = percepts[i].centroid_rgb.head<2>();
      double d = std::numeric_limits<double>::infinity();
      for (const auto& a : anchors) d = std::min(d, (xy - a).norm());
      if (d < best) {
        best = d;
        mv.percept = i;
      }
    }
    mv.near_sighting = true;
  } else {
    double best = -1.0;
    for (std::size_t i : unwanted) {
      const double score =
          static_cast<double>(percepts[i].pixel_area) * (percept_height(percepts[i], c.floor_z()) / c.wall_height);
      if (score > best) {
        best = score;
        mv.percept = i;
      }
    }
  }
  mv.label = percepts[mv.percept].label;

  mv.destination = c.id;
  if (c.kind == ContainerKind::StorageCompartment) {
    for (const auto& other : w.containers) {
      if (other.kind != ContainerKind::StorageCompartment || other.id == c.id) continue;
      const auto there = belief.in_container(other.id);
      const bool holds_wanted =
          std::any_of(there.begin(), there.end(), [&](const std::string& l) { return wanted.count(l) > 0; });
      if (!holds_wanted) mv.destination = other.id;
      break;
    }
  }
  return mv;
}

std::vector<Correction> double_check(WorldState& w, Belief& belief, std::size_t remaining, const SimParams& params,
                                     RunLog* log) {
  std::vector<Correction> out;
  if (remaining > params.selection.double_check_threshold) return out;

  std::map<std::string, std::set<std::string>> seen;
  for (std::size_t c = 0; c < w.containers.size(); ++c) {
    if (w.containers[c].kind == ContainerKind::ShippingBox) continue;
    const auto poses = viewpoints_for(w, c);
    for (const auto& p : capture(w, poses[0], params, "DoubleCheck", log)) seen[p.label].insert(w.containers[c].id);
  }

  for (auto& [label, b] : belief.items) {
    const auto it = seen.find(label);
    if (it == seen.end() || it->second.count(b.container) || it->second.size() != 1) {
      b.elsewhere_container.clear();
      b.elsewhere_streak = 0;
      continue;
    }
    const std::string& where = *it->second.begin();
    if (where == b.elsewhere_container) {
      ++b.elsewhere_streak;
    } else {
      b.elsewhere_container = where;
      b.elsewhere_streak = 1;
    }
    if (b.elsewhere_streak >= 2) {
      out.push_back({label, b.container, where});
      b.container = where;
      b.elsewhere_container.clear();
      b.elsewhere_streak = 0;
    }
  }
  if (log != nullptr) {
    for (const auto& c : out)
      log->add(w.clock, "DoubleCheck", "correction", c.label, c.to, Json{{"from", c.from}, {"to", c.to}});
    log->add(w.clock, "DoubleCheck", "double_check", "", "",
             Json{{"remaining", remaining}, {"corrections", out.size()}});
  }
  return out;
}

// ---------------------------------------------------------------- task loop

namespace {

enum class Purpose { Stow, Pick, Search };

std::string_view to_string(Purpose p) {
  switch (p) {
    case Purpose::Stow: return "stow";
    case Purpose::Pick: return "pick";
    case Purpose::Search: return "search";
  }
  return "?";
}

struct AttemptResult {
  bool placed = false;
  std::string label;
  std::size_t dest = 0;
};

class Runner {
 public:
  Runner(WorldState& w, Belief& b, const TaskSpec& spec, const SimParams& params, RunLog& log)
      : w_(w), belief_(b), spec_(spec), params_(params), log_(log), catalog_(*w.catalog) {}

  TaskResult run() {
    const double start = w_.clock;
    deadline_ = start + spec_.time_limit;
    emit("Perceive", "task_start", "", "",
         Json{{"phase", to_string(spec_.phase)},
              {"time_limit", spec_.time_limit},
              {"manifest", spec_.manifest.size()},
              {"order", spec_.order.size()}});
    try {
      switch (spec_.phase) {
        case Phase::Stow: stow_phase(deadline_, true); break;
        case Phase::Pick: pick_phase(); break;
        case Phase::Finals: {
          const double stow_end = start + params_.finals_stow_fraction * spec_.time_limit;
          stow_phase(std::min(stow_end, deadline_), stow_end >= deadline_);
          if (!result_.timed_out) pick_phase();
          break;
        }
      }
    } catch (const Error& e) {
      result_.aborted = true;
      emit("Done", "abort", "", "", Json{{"reason", e.what()}});
    }
    judge();
    return result_;
  }

 private:
  void emit(std::string_view state, std::string_view kind, std::string_view item, std::string_view container,
            Json payload = Json::object()) {
    log_.add(w_.clock, state, kind, item, container, std::move(payload));
  }

  bool check_timeout() {
    if (w_.clock < deadline_) return false;
    if (!result_.timed_out) {
      result_.timed_out = true;
      emit("Done", "timeout", "", "", Json{{"elapsed", spec_.time_limit}});
    }
    return true;
  }

  void note_sightings(const PerceiveResult& per, std::size_t container) {
    const View last = per.views.back();
    for (const auto& p : per.percepts) {
      const auto it = belief_.items.find(p.label);
      if (it == belief_.items.end()) continue;
      it->second.last_seen = p.centroid_rgb;
      it->second.last_seen_container = w_.containers[container].id;
      it->second.last_seen_view = std::string(to_string(last));
      ++it->second.sightings;
    }
  }

  void maybe_double_check(std::size_t remaining, bool force) {
    if (remaining > params_.selection.double_check_threshold) return;
    if (!force && remaining == last_checked_) return;
    last_checked_ = remaining;
    double_check(w_, belief_, remaining, params_, &log_);
  }

  /// Storage compartment with the fewest believed items.
  std::size_t stow_destination() const {
    std::optional<std::size_t> best;
    std::size_t best_n = 0;
    for (std::size_t c = 0; c < w_.containers.size(); ++c) {
      if (w_.containers[c].kind != ContainerKind::StorageCompartment) continue;
      const std::size_t n = belief_.in_container(w_.containers[c].id).size();
      if (!best || n < best_n) {
        best = c;
        best_n = n;
      }
    }
    if (!best) throw PreconditionError("layout has no storage compartment");
    return *best;
  }

  void stow_phase(double phase_end, bool task_deadline) {
    if (check_timeout()) return;
    if (spec_.phase == Phase::Finals) emit("Perceive", "phase_start", "", "", Json{{"phase", "stow"}});
    const std::size_t tote = w_.require_container("tote");
    const double floor = w_.containers[tote].floor_z();
    int empty_views = 0;
    for (;;) {
      const auto in_tote = belief_.in_container("tote");
      if (in_tote.empty()) break;
      if (w_.clock >= phase_end) {
        if (task_deadline) check_timeout();
        break;
      }
      maybe_double_check(in_tote.size(), false);
      const std::set<std::string> wanted(in_tote.begin(), in_tote.end());
      if (wanted.empty()) continue;

      const auto per = active_perceive(w_, tote, wanted, params_, &log_);
      note_sightings(per, tote);
      const auto sel = select_next_item(per.percepts, belief_, wanted, params_.selection, floor);
      if (!sel) {
        emit("Select", "nothing_selectable", "", "tote");
        if (++empty_views >= params_.selection.max_empty_perceives) {
          emit("Select", "give_up", "", "tote", Json{{"remaining", wanted.size()}});
          break;
        }
        maybe_double_check(wanted.size(), true);
        continue;
      }
      empty_views = 0;
      log_select(*sel, per, tote);
      const std::size_t dest = stow_destination();
      attempt(per.percepts[sel->index], sel->label, tote, Purpose::Stow,
              [dest](const std::string&) { return std::optional<std::size_t>(dest); });
    }
  }

  void pick_phase() {
    if (check_timeout()) return;
    if (spec_.phase == Phase::Finals) emit("Perceive", "phase_start", "", "", Json{{"phase", "pick"}});
    const std::size_t n = spec_.order.size();
    std::vector<char> done(n, 0), abandoned(n, 0);
    std::vector<int> search_moves(n, 0);

    auto open_line = [&](const std::string& label) -> std::optional<std::size_t> {
      for (std::size_t k = 0; k < n; ++k)
        if (!done[k] && !abandoned[k] && spec_.order[k].item == label) return k;
      return std::nullopt;
    };

    for (;;) {
      // Refresh line status from the belief.
      std::map<std::size_t, std::vector<std::size_t>> by_container;
      std::size_t open = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (done[k] || abandoned[k]) continue;
        const std::string loc = belief_.location_of(spec_.order[k].item);
        if (loc == spec_.order[k].box) {
          done[k] = 1;
          continue;
        }
        const auto c = w_.container_index(loc);
        if (!c || w_.containers[*c].kind == ContainerKind::ShippingBox) {
          abandoned[k] = 1;
          emit("Search", "give_up", spec_.order[k].item, loc, Json{{"reason", "unreachable_location"}});
          continue;
        }
        by_container[*c].push_back(k);
        ++open;
      }
      if (open == 0) break;
      if (check_timeout()) break;
      maybe_double_check(open, false);

      std::size_t source = by_container.begin()->first;
      for (const auto& [c, lines] : by_container)
        if (lines.size() > by_container[source].size()) source = c;
      const auto& lines = by_container[source];
      std::set<std::string> wanted;
      for (std::size_t k : lines) wanted.insert(spec_.order[k].item);

      const auto per = active_perceive(w_, source, wanted, params_, &log_);
      note_sightings(per, source);
      const auto resolve = [&](std::optional<std::size_t> fallback) {
        return [&, fallback](const std::string& label) -> std::optional<std::size_t> {
          if (const auto k = open_line(label)) return w_.require_container(spec_.order[*k].box);
          return fallback;
        };
      };
      auto mark_done = [&](const AttemptResult& r) {
        if (!r.placed) return;
        if (const auto k = open_line(r.label); k && w_.containers[r.dest].id == spec_.order[*k].box) done[*k] = 1;
      };

      const auto sel = select_next_item(per.percepts, belief_, wanted, params_.selection,
                                        w_.containers[source].floor_z());
      if (sel) {
        log_select(*sel, per, source);
        mark_done(attempt(per.percepts[sel->index], sel->label, source, Purpose::Pick, resolve(std::nullopt)));
        continue;
      }

      const auto mv = directed_search(w_, source, per.percepts, wanted, belief_);
      if (!mv) {
        for (std::size_t k : lines) {
          abandoned[k] = 1;
          emit("Search", "give_up", spec_.order[k].item, w_.containers[source].id, Json{{"reason", "nothing_to_move"}});
        }
        maybe_double_check(open, true);
        continue;
      }
      emit("Search", "search_move", mv->label, mv->source,
           Json{{"to", mv->destination}, {"near_sighting", mv->near_sighting}});
      const std::size_t dest = w_.require_container(mv->destination);
      mark_done(attempt(per.percepts[mv->percept], mv->label, source, Purpose::Search, resolve(dest)));
      for (std::size_t k : lines) {
        if (done[k] || ++search_moves[k] < params_.selection.max_search_moves) continue;
        abandoned[k] = 1;
        emit("Search", "give_up", spec_.order[k].item, w_.containers[source].id, Json{{"reason", "search_exhausted"}});
      }
    }
  }

  void log_select(const Selection& sel, const PerceiveResult& per, std::size_t source) {
    const auto& p = per.percepts[sel.index];
    emit("Select", "select", sel.label, w_.containers[source].id,
         Json{{"confidence", p.confidence},
              {"height_bin", sel.height_bin},
              {"relaxed", sel.relaxed},
              {"closeups", per.used_closeups}});
  }

  /// One grasp attempt plus verification and the follow-up place or replace.
  AttemptResult attempt(const SegmentPercept& percept, const std::string& label, std::size_t source, Purpose purpose,
                        const std::function<std::optional<std::size_t>(const std::string&)>& destination) {
    ++result_.attempts;
    const MotionParams& motion = params_.motion;
    const Container& src = w_.containers[source];
    w_.advance(motion.misc_overhead);

    const GraspPlan plan = synthesize(percept, src, catalog_.at(label), params_.grasp);
    emit("Synthesize", "plan", label, src.id,
         Json{{"strategy", to_string(plan.strategy)},
              {"tool", to_string(plan.tool)},
              {"candidates", plan.candidates.size()},
              {"yaw", plan.yaw},
              {"low_confidence_pose", plan.low_confidence_pose}});

    ScaleData scales;
    scales.pre_g = read_scale(w_, source);
    const GraspOutcome out = apply_grasp(w_, plan, GraspRequest{source, label}, motion);
    Json probes = Json::array();
    for (const auto& pr : out.probes)
      probes.push_back(Json{{"success", pr.success},
                            {"cause", pr.cause ? Json(to_string(*pr.cause)) : Json(nullptr)},
                            {"hit", pr.hit_instance ? Json(w_.items[*pr.hit_instance].spec_id) : Json(nullptr)},
                            {"contact_height", pr.contact_height}});
    emit("Grasp", "grasp", label, src.id, Json{{"tool", to_string(plan.tool)}, {"probes", probes}});

    ItemBelief& target = belief_.items[label];
    auto end_attempt = [&](std::string_view state, OutcomeKind kind, std::optional<FailureCause> cause,
                           const std::string& true_item) {
      emit(state, "attempt_end", label, src.id,
           Json{{"kind", to_string(kind)},
                {"cause", cause ? Json(to_string(*cause)) : Json(nullptr)},
                {"true_item", true_item},
                {"strategy", to_string(plan.strategy)},
                {"tool", to_string(plan.tool)},
                {"purpose", to_string(purpose)}});
    };

    if (out.kind == OutcomeKind::FailedGrasp) {
      ++target.consecutive_failures;
      const auto& hit = out.probes.front().hit_instance;
      end_attempt("Grasp", OutcomeKind::FailedGrasp, out.cause, hit ? w_.items[*hit].spec_id : std::string());
      return {};
    }

    w_.advance(motion.scale_settle_time);
    scales.post_g = read_scale(w_, source);
    const double tol = params_.selection.weight_tolerance_g;
    const double delta = *scales.pre_g - *scales.post_g;
    const bool dropped = plan.tool == Tool::Suction ? !vacuum_state(w_) : std::abs(delta) <= tol;
    if (dropped) {
      ++target.consecutive_failures;
      const std::string true_item = w_.items[*out.grasped_instance].spec_id;
      end_attempt("Recover", OutcomeKind::DroppedItem, std::nullopt, true_item);
      emit("Recover", "drop", true_item, src.id);
      emit("Recover", "drop_recovery", label, src.id);
      return {};
    }

    VerifyResult v = verify_grasp(catalog_, label, src.id, belief_, scales, tol);
    Json vj{{"result", to_string(v.kind)}, {"delta_g", v.delta_g}, {"label", v.label}};
    if (!v.candidates.empty()) vj["candidates"] = v.candidates;
    emit("Verify", "verify", label, src.id, std::move(vj));

    std::string via = "weight";
    if (v.kind == VerifyKind::SecondLook) {
      w_.move_wrist(side_camera_wrist_pose(), motion);
      w_.advance(motion.perception_time);
      const auto r = classify_held_item(w_, v.candidates, params_.perception, w_.rng.perception);
      emit("Verify", "second_look", label, src.id,
           Json{{"candidates", v.candidates}, {"result", r ? Json(*r) : Json(nullptr)}});
      v.kind = r ? VerifyKind::Reclassified : VerifyKind::Replace;
      v.label = r.value_or("");
      via = "side_camera";
    }

    std::vector<std::string> held_truth;
    for (std::size_t i : w_.gripper.held) held_truth.push_back(w_.items[i].spec_id);
    const Json truth_json = held_truth;

    if (v.kind == VerifyKind::Replace) {
      ++target.consecutive_failures;
      end_attempt("Verify", OutcomeKind::WeightMismatch, std::nullopt, held_truth.front());
      place_item(w_, source, w_.gripper.wrist.yaw, &motion);
      emit("Recover", "replace", label, src.id, Json{{"reason", "weight_mismatch"}, {"true_items", truth_json}});
      return {};
    }

    const std::string final_label = v.kind == VerifyKind::Confirmed ? label : v.label;
    if (v.kind == VerifyKind::Reclassified) {
      belief_.reclassifications.push_back({w_.clock, label, final_label, src.id, via});
      emit("Verify", "reclassify", final_label, src.id, Json{{"from", label}, {"to", final_label}, {"via", via}});
    }
    const bool correct = held_truth.size() == 1 && held_truth.front() == final_label;
    end_attempt("Verify", correct ? OutcomeKind::Success : OutcomeKind::IncorrectReclassification, std::nullopt,
                held_truth.front());
    belief_.items[final_label].consecutive_failures = 0;

    const auto dest = destination(final_label);
    if (!dest) {
      place_item(w_, source, w_.gripper.wrist.yaw, &motion);
      emit("Recover", "replace", final_label, src.id, Json{{"reason", "not_wanted"}, {"true_items", truth_json}});
      return {};
    }

    const Container& dst = w_.containers[*dest];
    const auto held = w_.gripper.held;
    place_item(w_, *dest, aligned_yaw(catalog_.at(final_label), dst), &motion);
    belief_.move(final_label, dst.id);
    Json protruding = Json::array();
    for (std::size_t i : held) protruding.push_back(w_.items[i].protruding);
    emit("Place", "place", final_label, dst.id, Json{{"true_items", truth_json}, {"protruding", protruding}});

    for (std::size_t i : held) {
      const std::string& s = w_.items[i].spec_id;
      if (purpose == Purpose::Stow && src.kind == ContainerKind::Tote && dst.kind == ContainerKind::StorageCompartment)
        emit("Place", "stow", s, dst.id);
      for (const auto& line : spec_.order)
        if (line.item == s && line.box == dst.id && !scored_picks_.count(s)) {
          scored_picks_.insert(s);
          emit("Place", "pick", s, dst.id);
        }
    }
    return {true, final_label, *dest};
  }

  /// End-of-task judging against ground truth.
  void judge() {
    for (std::size_t i = 0; i < w_.items.size(); ++i) {
      const auto& inst = w_.items[i];
      if (inst.in_gripper() || !inst.protruding) continue;
      emit("Done", "protrusion", inst.spec_id, w_.containers[inst.location].id);
    }
    const auto wrong = belief_.mismatches(w_);
    for (const auto& label : wrong) {
      const auto inst = w_.instance_of(label);
      emit("Done", "misreport", label, belief_.location_of(label),
           Json{{"actual", inst ? location_name(w_, w_.items[*inst].location) : std::string()}});
    }
    if (!wrong.empty() || result_.aborted) {
      result_.manual_intervention = true;
      emit("Done", "manual_intervention", "", "", Json{{"items", wrong}, {"aborted", result_.aborted}});
    }
    if (result_.timed_out) return;
    if (!result_.aborted && complete()) emit("Done", "completion_bonus", "", "");
    emit("Done", "task_end", "", "", Json{{"attempts", result_.attempts}, {"elapsed", w_.clock - (deadline_ - spec_.time_limit)}});
  }

  bool complete() const {
    if (spec_.phase != Phase::Pick) {
      const std::size_t tote = w_.require_container("tote");
      for (const auto& m : spec_.manifest) {
        if (m.container != "tote") continue;
        const auto inst = w_.instance_of(m.item);
        if (inst && w_.items[*inst].location == tote) return false;
      }
    }
    for (const auto& line : spec_.order) {
      const auto inst = w_.instance_of(line.item);
      if (!inst || location_name(w_, w_.items[*inst].location) != line.box) return false;
    }
    return true;
  }

  WorldState& w_;
  Belief& belief_;
  const TaskSpec& spec_;
  const SimParams& params_;
  RunLog& log_;
  const Catalog& catalog_;
  TaskResult result_;
  double deadline_ = 0.0;
  std::size_t last_checked_ = std::numeric_limits<std::size_t>::max();
  std::set<std::string> scored_picks_;
};

void check_task(const TaskSpec& spec) {
  if (spec.phase == Phase::Stow && !spec.order.empty()) throw PreconditionError("stow task carries an order");
  for (const auto& line : spec.order) {
    const bool listed = std::any_of(spec.manifest.begin(), spec.manifest.end(),
                                    [&](const ManifestEntry& m) { return m.item == line.item; });
    if (!listed) throw PreconditionError("order item '" + line.item + "' is not in the manifest");
  }
  if (!(spec.time_limit >= 0.0)) throw PreconditionError("negative time limit");
}

}  // namespace

TaskResult run_task(WorldState& world, Belief& belief, const TaskSpec& spec, const SimParams& params, RunLog& log) {
  check_task(spec);
  return Runner(world, belief, spec, params, log).run();
}

RunLog run_task(const TaskSpec& spec, std::shared_ptr<const Catalog> catalog, const SimParams& params,
                std::uint64_t seed, TaskResult* result) {
  check_task(spec);
  WorldState world = spawn_scene(spec, std::move(catalog), default_layout(), params.world, seed);
  Belief belief = Belief::from_world(world);
  RunLog log;
  const TaskResult r = run_task(world, belief, spec, params, log);
  if (result != nullptr) *result = r;
  return log;
}

RunLog run_longrun(std::shared_ptr<const Catalog> catalog, const SimParams& params, const LongrunParams& lr,
                   std::uint64_t seed, LongrunResult* result) {
  TaskSpec initial;
  initial.phase = Phase::Stow;
  for (const auto& item : catalog->items()) initial.manifest.push_back({item.id, "tote"});
  WorldState world = spawn_scene(initial, std::move(catalog), default_layout(), params.world, seed);
  Belief belief = Belief::from_world(world);
  const std::size_t tote = world.require_container("tote");

  RunLog log;
  LongrunResult res;
  const double budget_end = world.clock + lr.sim_hours * 3600.0;
  bool stow_next = true;
  int idle = 0;
  while (world.clock < budget_end && idle < 2) {
    TaskSpec spec;
    spec.time_limit = std::min(lr.task_time_limit, budget_end - world.clock);
    if (stow_next) {
      spec.phase = Phase::Stow;
      for (const auto& label : belief.in_container("tote")) spec.manifest.push_back({label, "tote"});
    } else {
      spec.phase = Phase::Pick;
      for (const auto& [label, b] : belief.items) {
        const auto c = world.container_index(b.container);
        if (c && world.containers[*c].kind == ContainerKind::StorageCompartment) {
          spec.manifest.push_back({label, b.container});
          spec.order.push_back({label, "tote"});
        }
      }
    }
    const bool is_stow = stow_next;
    stow_next = !stow_next;
    if (spec.manifest.empty()) {
      ++idle;
      continue;
    }
    idle = 0;

    const TaskResult r = run_task(world, belief, spec, params, log);
    (is_stow ? res.stow_tasks : res.pick_tasks) += 1;
    if (r.aborted) res.aborted = true;
    if (r.manual_intervention) {
      ++res.manual_interventions;
      if (!world.gripper.held.empty()) drop_held(world, tote);
      belief.reset_to(world);
      log.add(world.clock, "Done", "human_reset", "", "");
    }
  }
  if (result != nullptr) *result = res;
  return log;
}

}  // namespace binpick
