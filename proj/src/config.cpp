#include "binpick/config.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace binpick {

namespace {

using Diags = std::vector<std::string>;

/// Reads typed fields out of one JSON object, recording problems instead of
/// throwing, and flags keys that nothing consumed.
class Section {
 public:
  Section(const Json& j, std::string path, Diags& diags) : j_(j), path_(std::move(path)), d_(diags) {
    if (!j_.is_object()) {
      fail("", "must be an object");
      valid_ = false;
    }
  }
  ~Section() {
    if (!valid_) return;
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key) && key != "comment") fail(key, "unknown field");
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  bool has(const std::string& key) const { return valid_ && j_.contains(key); }
  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* get(const std::string& key) {
    used_.insert(key);
    if (!valid_ || !j_.contains(key)) return nullptr;
    return &j_[key];
  }

  void number(const std::string& key, double& out, double lo, double hi, bool required = false) {
    const Json* v = get(key);
    if (v == nullptr) {
      if (required) fail(key, "missing");
      return;
    }
    if (!v->is_number()) return fail(key, "must be a number");
    const double x = v->get<double>();
    if (!(x >= lo && x <= hi)) {
      std::ostringstream os;
      os << "must be in [" << lo << ", " << hi << "], got " << x;
      return fail(key, os.str());
    }
    out = x;
  }

  void positive(const std::string& key, double& out) {
    const Json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_number()) return fail(key, "must be a number");
    const double x = v->get<double>();
    if (!(x > 0.0)) return fail(key, "must be > 0");
    out = x;
  }

  template <typename Int>
  void integer(const std::string& key, Int& out, long long lo, long long hi) {
    const Json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_number_integer()) return fail(key, "must be an integer");
    const long long x = v->get<long long>();
    if (x < lo || x > hi) return fail(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    out = static_cast<Int>(x);
  }

  void boolean(const std::string& key, bool& out) {
    const Json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_boolean()) return fail(key, "must be true or false");
    out = v->get<bool>();
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    const Json* v = get(key);
    if (v == nullptr) {
      if (required) fail(key, "missing");
      return;
    }
    if (!v->is_string()) return fail(key, "must be a string");
    out = v->get<std::string>();
  }

  void curve(const std::string& key, PiecewiseLinear& out, double lo, double hi) {
    const Json* v = get(key);
    if (v == nullptr) return;
    if (!v->is_array() || v->empty()) return fail(key, "must be a non-empty array of [x, y] pairs");
    PiecewiseLinear pl;
    for (const auto& knot : *v) {
      if (!knot.is_array() || knot.size() != 2 || !knot[0].is_number() || !knot[1].is_number())
        return fail(key, "must be a non-empty array of [x, y] pairs");
      const double y = knot[1].get<double>();
      if (!(y >= lo && y <= hi)) return fail(key, "values must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      pl.knots.emplace_back(knot[0].get<double>(), y);
    }
    for (std::size_t k = 1; k < pl.knots.size(); ++k)
      if (pl.knots[k].first <= pl.knots[k - 1].first) return fail(key, "knots must have increasing x");
    out = std::move(pl);
  }

  void fail(const std::string& key, const std::string& what) {
    d_.push_back((key.empty() ? (path_.empty() ? std::string("<root>") : path_) : path(key)) + ": " + what);
  }

 private:
  const Json& j_;
  std::string path_;
  Diags& d_;
  std::set<std::string> used_;
  bool valid_ = true;
};

void parse_world(Section& s, WorldConfig& w) {
  s.number("scale_noise_g", w.scale_noise_g, 0.0, 1e6);
  s.number("occlusion_penalty", w.occlusion_penalty, 0.0, 1.0);
  s.number("edge_penalty", w.edge_penalty, 0.0, 1.0);
  s.number("edge_distance", w.edge_distance, 0.0, 1.0);
  s.number("double_pick_prob", w.double_pick_prob, 0.0, 1.0);
  s.number("drop_prob_scale", w.drop_prob_scale, 0.0, 1e6);
  s.number("approach_clearance", w.approach_clearance, 0.0, 1.0);
  s.positive("contact_resolution", w.contact_resolution);
  s.positive("place_grid", w.place_grid);
  s.number("spawn_slack", w.spawn_slack, 0.0, 1.0);
}

void parse_perception(Section& s, PerceptionParams& p) {
  s.curve("f_half_by_clutter", p.f_half_by_clutter, 0.0, 1.0);
  s.curve("miss_prob_by_clutter", p.miss_prob_by_clutter, 0.0, 1.0);
  s.number("confusion_prob", p.confusion_prob, 0.0, 1.0);
  s.number("mask_erosion_fraction", p.mask_erosion_fraction, 0.0, 1.0);
  s.number("quality_sd", p.quality_sd, 0.0, 1.0);
  s.positive("lattice_pitch", p.lattice_pitch);
  s.number("closeup_clutter_factor", p.closeup_clutter_factor, 0.0, 1.0);
  s.number("side_min_confidence", p.side_min_confidence, 0.0, 1.0);
  if (!p.f_half_by_clutter.non_increasing())
    s.fail("f_half_by_clutter", "must be non-increasing in item count");
}

void parse_grasp(Section& s, GraspScoringParams& g) {
  s.number("w_boundary", g.w_boundary, 0.0, 1.0);
  s.number("w_curvature", g.w_curvature, 0.0, 1.0);
  s.number("penalty_cap", g.penalty_cap, 0.0, 1.0);
  s.number("height_penalty_max", g.height_penalty_max, 0.0, 1.0);
  s.number("wall_angle_penalty_max", g.wall_angle_penalty_max, 0.0, 1.0);
  s.number("wall_tilt_threshold", g.wall_tilt_threshold, 0.0, 1.5707963267948966);
  s.number("diversity_min_dist", g.diversity_min_dist, 0.0, 1.0);
  s.integer("min_valid_points", g.min_valid_points, 1, 1000000);
  s.positive("neighbor_radius", g.neighbor_radius);
  s.number("boundary_max_gap", g.boundary_max_gap, 0.0, 6.283185307179586);
  s.number("min_boundary_dist", g.min_boundary_dist, 0.0, 1.0);
  s.integer("max_candidates", g.max_candidates, 1, 100);
  for (const auto& msg : check_scoring_params(g)) {
    if (msg.find("penalty_cap") != std::string::npos)
      s.fail("height_penalty_max", msg + " (task penalties are capped at penalty_cap = " +
                                       std::to_string(g.penalty_cap) + ")");
    else
      s.fail("", msg);
  }
}

void parse_motion(Section& s, MotionParams& m) {
  if (const Json* ws = s.get("workspace")) {
    if (!ws->is_array() || ws->size() != 3 || !std::all_of(ws->begin(), ws->end(), [](const Json& v) {
          return v.is_number() && v.get<double>() > 0.0;
        }))
      s.fail("workspace", "must be three positive numbers");
    else
      m.workspace = Vec3((*ws)[0].get<double>(), (*ws)[1].get<double>(), (*ws)[2].get<double>());
  }
  s.positive("v_linear", m.v_linear);
  s.positive("v_angular", m.v_angular);
  s.positive("plan_time", m.plan_time);
  s.positive("tool_change_angle", m.tool_change_angle);
  s.positive("perception_time", m.perception_time);
  s.positive("misc_overhead", m.misc_overhead);
  s.positive("grasp_probe_time", m.grasp_probe_time);
  s.positive("release_time", m.release_time);
  s.positive("scale_settle_time", m.scale_settle_time);
}

void parse_selection(Section& s, SelectionParams& p) {
  s.positive("height_bin", p.height_bin);
  s.integer("blacklist_after", p.blacklist_after, 1, 1000);
  s.integer("min_segment_area", p.min_segment_area, 0, 100000000);
  s.number("min_confidence", p.min_confidence, 0.0, 1.0);
  s.integer("double_check_threshold", p.double_check_threshold, 1, 1000);
  s.positive("weight_tolerance_g", p.weight_tolerance_g);
  s.integer("max_search_moves", p.max_search_moves, 1, 1000);
  s.integer("max_empty_perceives", p.max_empty_perceives, 1, 1000);
}

void parse_tasks(Section& s, TaskDefaults& t, double& stow_fraction) {
  s.integer("stow_items", t.stow_items, 0, 1000);
  s.positive("stow_time_limit", t.stow_time_limit);
  s.integer("pick_storage_items", t.pick_storage_items, 0, 1000);
  s.integer("order_size", t.order_size, 0, 1000);
  s.positive("pick_time_limit", t.pick_time_limit);
  s.integer("finals_storage_items", t.finals_storage_items, 0, 1000);
  s.integer("finals_tote_items", t.finals_tote_items, 0, 1000);
  s.positive("finals_time_limit", t.finals_time_limit);
  s.number("finals_stow_fraction", stow_fraction, 0.0, 1.0);
  if (const Json* split = s.get("box_split")) {
    if (!split->is_array() || split->empty() ||
        !std::all_of(split->begin(), split->end(), [](const Json& v) { return v.is_number_unsigned(); })) {
      s.fail("box_split", "must be a non-empty array of counts");
    } else {
      t.box_split.clear();
      for (const auto& v : *split) t.box_split.push_back(v.get<std::size_t>());
    }
  }
  const std::size_t split_total = std::accumulate(t.box_split.begin(), t.box_split.end(), std::size_t{0});
  if (split_total != t.order_size) s.fail("box_split", "must sum to order_size");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& rel) {
  const std::filesystem::path p(rel);
  return p.is_absolute() ? p : base.parent_path() / p;
}

}  // namespace

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not path=value");
  std::string pointer;
  std::stringstream ss(assignment.substr(0, eq));
  for (std::string part; std::getline(ss, part, '.');) pointer += "/" + part;
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  doc[Json::json_pointer(pointer)] = value;
}

Json to_json(const ItemSpec& s) {
  Json j;
  j["id"] = s.id;
  j["mass_g"] = s.mass_g;
  j["bbox_mm"] = Json::array({s.bbox_mm.x(), s.bbox_mm.y(), s.bbox_mm.z()});
  j["rigidity"] = to_string(s.rigidity);
  j["visual_class"] = to_string(s.visual_class);
  j["suckable"] = s.suckable;
  j["grippable"] = s.grippable;
  j["preferred_tool"] = to_string(s.preferred_tool);
  j["tool_success_prob"] = Json{{"suction", s.tool_success_prob[0]}, {"gripper", s.tool_success_prob[1]}};
  if (s.forced_strategy) j["forced_strategy"] = to_string(*s.forced_strategy);
  j["drop_prob"] = s.drop_prob;
  return j;
}

std::vector<std::string> parse_catalog(const Json& doc, std::vector<ItemSpec>& out, const std::string& where) {
  Diags d;
  Section root(doc, where, d);
  int version = 0;
  root.integer("schema_version", version, 0, 1000000);
  if (version != kSchemaVersion) root.fail("schema_version", "expected " + std::to_string(kSchemaVersion));
  const Json* items = root.get("items");
  if (items == nullptr || !items->is_array()) {
    root.fail("items", "must be an array");
    return d;
  }
  std::set<std::string> ids;
  for (std::size_t k = 0; k < items->size(); ++k) {
    Section s((*items)[k], root.path("items[" + std::to_string(k) + "]"), d);
    ItemSpec spec;
    s.string("id", spec.id, true);
    s.number("mass_g", spec.mass_g, 1e-9, 1e9, true);
    if (const Json* b = s.get("bbox_mm")) {
      if (!b->is_array() || b->size() != 3 ||
          !std::all_of(b->begin(), b->end(), [](const Json& v) { return v.is_number() && v.get<double>() > 0.0; }))
        s.fail("bbox_mm", "must be three positive numbers");
      else
        spec.bbox_mm = Vec3((*b)[0].get<double>(), (*b)[1].get<double>(), (*b)[2].get<double>());
    } else {
      s.fail("bbox_mm", "missing");
    }
    std::string text;
    s.string("rigidity", text);
    if (!text.empty()) {
      if (auto v = parse_rigidity(text)) spec.rigidity = *v;
      else s.fail("rigidity", "unknown value '" + text + "'");
    }
    text.clear();
    s.string("visual_class", text);
    if (!text.empty()) {
      if (auto v = parse_visual_class(text)) spec.visual_class = *v;
      else s.fail("visual_class", "unknown value '" + text + "'");
    }
    s.boolean("suckable", spec.suckable);
    s.boolean("grippable", spec.grippable);
    text.clear();
    s.string("preferred_tool", text);
    if (!text.empty()) {
      if (auto v = parse_tool(text)) spec.preferred_tool = *v;
      else s.fail("preferred_tool", "unknown value '" + text + "'");
    }
    if (const Json* p = s.get("tool_success_prob")) {
      Section ps(*p, s.path("tool_success_prob"), d);
      ps.number("suction", spec.tool_success_prob[0], 0.0, 1.0);
      ps.number("gripper", spec.tool_success_prob[1], 0.0, 1.0);
    }
    text.clear();
    s.string("forced_strategy", text);
    if (!text.empty()) {
      if (auto v = parse_strategy(text)) spec.forced_strategy = *v;
      else s.fail("forced_strategy", "unknown value '" + text + "'");
    }
    s.number("drop_prob", spec.drop_prob, 0.0, 1.0);
    for (const auto& msg : check_item_spec(spec)) s.fail("", msg);
    if (!spec.id.empty() && !ids.insert(spec.id).second) s.fail("id", "duplicate item id '" + spec.id + "'");
    out.push_back(std::move(spec));
  }
  return d;
}

std::shared_ptr<const Catalog> load_catalog(const std::filesystem::path& path) {
  std::vector<ItemSpec> items;
  const auto d = parse_catalog(read_json_file(path), items, "");
  if (!d.empty()) {
    std::string msg = path.string() + ":";
    for (const auto& x : d) msg += "\n  " + x;
    throw ConfigError(msg);
  }
  return std::make_shared<const Catalog>(std::move(items));
}

namespace {

Diags parse_score_table(const Json& doc, ScoreTable& t, const std::string& where) {
  Diags d;
  Section s(doc, where, d);
  int version = 0;
  s.integer("schema_version", version, 0, 1000000);
  if (version != kSchemaVersion) s.fail("schema_version", "expected " + std::to_string(kSchemaVersion));
  s.number("stow", t.stow, 0.0, 1e9, true);
  s.number("pick", t.pick, 0.0, 1e9, true);
  s.number("completion_bonus", t.completion_bonus, 0.0, 1e9);
  s.number("drop", t.drop, -1e9, 0.0);
  s.number("protrusion", t.protrusion, -1e9, 0.0);
  s.number("misreport", t.misreport, -1e9, 0.0);
  return d;
}

void parse_task_section(Section& s, TaskSpec& t, Diags& d) {
  std::string phase;
  s.string("phase", phase, true);
  if (!phase.empty()) {
    if (auto p = parse_phase(phase)) t.phase = *p;
    else s.fail("phase", "unknown phase '" + phase + "'");
  }
  s.number("time_limit", t.time_limit, 0.0, 1e9);
  if (const Json* m = s.get("manifest")) {
    if (!m->is_array()) {
      s.fail("manifest", "must be an array");
    } else {
      for (std::size_t k = 0; k < m->size(); ++k) {
        Section e((*m)[k], s.path("manifest[" + std::to_string(k) + "]"), d);
        ManifestEntry entry;
        e.string("item", entry.item, true);
        e.string("container", entry.container, true);
        t.manifest.push_back(entry);
      }
    }
  }
  if (const Json* o = s.get("order")) {
    if (!o->is_array()) {
      s.fail("order", "must be an array");
    } else {
      for (std::size_t k = 0; k < o->size(); ++k) {
        Section e((*o)[k], s.path("order[" + std::to_string(k) + "]"), d);
        OrderLine line;
        e.string("item", line.item, true);
        e.string("box", line.box, true);
        t.order.push_back(line);
      }
    }
  }
}

void check_task_refs(const TaskSpec& t, const Catalog& catalog, Diags& d) {
  const auto layout = default_layout();
  auto container_kind = [&](const std::string& id) -> std::optional<ContainerKind> {
    for (const auto& c : layout)
      if (c.id == id) return c.kind;
    return std::nullopt;
  };
  std::set<std::string> listed;
  for (std::size_t k = 0; k < t.manifest.size(); ++k) {
    const auto& m = t.manifest[k];
    const std::string path = "task.manifest[" + std::to_string(k) + "]";
    if (catalog.find(m.item) == nullptr) d.push_back(path + ".item: unknown item '" + m.item + "'");
    if (!listed.insert(m.item).second) d.push_back(path + ".item: duplicate item '" + m.item + "'");
    const auto kind = container_kind(m.container);
    if (!kind) d.push_back(path + ".container: unknown container '" + m.container + "'");
    else if (*kind == ContainerKind::ShippingBox) d.push_back(path + ".container: items cannot start in a shipping box");
  }
  for (std::size_t k = 0; k < t.order.size(); ++k) {
    const auto& line = t.order[k];
    const std::string path = "task.order[" + std::to_string(k) + "]";
    if (catalog.find(line.item) == nullptr)
      d.push_back(path + ".item: unknown item '" + line.item + "'");
    else if (!listed.count(line.item))
      d.push_back(path + ".item: '" + line.item + "' is not in the manifest");
    if (!container_kind(line.box)) d.push_back(path + ".box: unknown container '" + line.box + "'");
  }
  if (t.phase == Phase::Stow && !t.order.empty()) d.push_back("task.order: a stow task has no order");
}

Diags parse_config(const std::filesystem::path& path, const std::vector<std::string>& overrides, Config& cfg) {
  Json doc = read_json_file(path);
  for (const auto& o : overrides) apply_override(doc, o);
  cfg.path = path;

  Diags d;
  {
    Section root(doc, "", d);
    int version = 0;
    root.integer("schema_version", version, 0, 1000000);
    if (!root.has("schema_version")) root.fail("schema_version", "missing");
    else if (version != kSchemaVersion)
      root.fail("schema_version", "unsupported version " + std::to_string(version) + ", expected " +
                                      std::to_string(kSchemaVersion));

    auto load_cat = [&](const char* key, std::shared_ptr<const Catalog>& out) {
      std::string rel;
      root.string(key, rel, true);
      if (rel.empty()) return;
      const auto p = resolve(path, rel);
      try {
        std::vector<ItemSpec> items;
        for (const auto& x : parse_catalog(read_json_file(p), items, "")) d.push_back(std::string(key) + ": " + x);
        out = std::make_shared<const Catalog>(std::move(items));
      } catch (const ConfigError& e) {
        root.fail(key, e.what());
      }
    };
    load_cat("catalog", cfg.catalog);
    load_cat("longrun_catalog", cfg.longrun_catalog);

    std::string table;
    root.string("score_table", table);
    if (!table.empty()) {
      try {
        for (const auto& x : parse_score_table(read_json_file(resolve(path, table)), cfg.score_table, ""))
          d.push_back("score_table: " + x);
      } catch (const ConfigError& e) {
        root.fail("score_table", e.what());
      }
    }

    if (const Json* j = root.get("world")) {
      Section s(*j, "world", d);
      parse_world(s, cfg.params.world);
    }
    if (const Json* j = root.get("perception")) {
      Section s(*j, "perception", d);
      parse_perception(s, cfg.params.perception);
    }
    if (const Json* j = root.get("grasp")) {
      Section s(*j, "grasp", d);
      parse_grasp(s, cfg.params.grasp);
    }
    if (const Json* j = root.get("motion")) {
      Section s(*j, "motion", d);
      parse_motion(s, cfg.params.motion);
    }
    if (const Json* j = root.get("selection")) {
      Section s(*j, "selection", d);
      parse_selection(s, cfg.params.selection);
    }
    if (const Json* j = root.get("tasks")) {
      Section s(*j, "tasks", d);
      parse_tasks(s, cfg.tasks, cfg.params.finals_stow_fraction);
    }
    if (const Json* j = root.get("longrun")) {
      Section s(*j, "longrun", d);
      s.positive("sim_hours", cfg.longrun.sim_hours);
      s.positive("task_time_limit", cfg.longrun.task_time_limit);
    }
    if (const Json* j = root.get("task")) {
      Section s(*j, "task", d);
      TaskSpec t;
      parse_task_section(s, t, d);
      cfg.task = t;
    }
  }

  for (const auto& msg : check_selection_params(cfg.params.selection)) d.push_back("selection: " + msg);
  const double noise = cfg.params.world.scale_noise_g;
  if (cfg.params.selection.weight_tolerance_g <= 2.0 * noise)
    d.push_back("selection.weight_tolerance_g: must exceed twice world.scale_noise_g");
  for (const auto* cat : {cfg.catalog.get(), cfg.longrun_catalog.get()}) {
    if (cat == nullptr || cat->size() < 2) continue;
    if (cat->min_mass_gap() <= 2.0 * noise)
      d.push_back("world.scale_noise_g: must stay below half the smallest catalog mass gap (" +
                  std::to_string(cat->min_mass_gap()) + " g)");
  }
  if (cfg.task && cfg.catalog) check_task_refs(*cfg.task, *cfg.catalog, d);
  return d;
}

}  // namespace

std::vector<std::string> validate_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  Config cfg;
  return parse_config(path, overrides, cfg);
}

Config load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  Config cfg;
  const auto d = parse_config(path, overrides, cfg);
  if (!d.empty()) {
    std::string msg = path.string() + ": invalid configuration";
    for (const auto& x : d) msg += "\n  " + x;
    throw ConfigError(msg);
  }
  return cfg;
}

ScoreTable load_score_table(const std::filesystem::path& path) {
  ScoreTable t;
  const auto d = parse_score_table(read_json_file(path), t, "");
  if (!d.empty()) {
    std::string msg = path.string() + ":";
    for (const auto& x : d) msg += "\n  " + x;
    throw ConfigError(msg);
  }
  return t;
}

// ---------------------------------------------------------------- tasks

namespace {

std::vector<std::string> shuffled_ids(const Catalog& catalog, RngStream& rng) {
  std::vector<std::string> ids;
  for (const auto& s : catalog.items()) ids.push_back(s.id);
  for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
  return ids;
}

}  // namespace

TaskSpec make_task(Phase phase, const Catalog& catalog, const TaskDefaults& d, std::uint64_t seed) {
  RngStream rng(seed, "task");
  const auto ids = shuffled_ids(catalog, rng);
  TaskSpec t;
  t.phase = phase;
  auto need = [&](std::size_t n) {
    if (n > ids.size())
      throw ConfigError("task needs " + std::to_string(n) + " distinct items but the catalog has " +
                        std::to_string(ids.size()));
  };
  auto add_order = [&](const std::vector<std::string>& pool) {
    need(d.order_size);
    std::vector<std::string> chosen = pool;
    for (std::size_t i = chosen.size(); i > 1; --i) std::swap(chosen[i - 1], chosen[rng.index(i)]);
    std::size_t next = 0;
    for (std::size_t b = 0; b < d.box_split.size(); ++b)
      for (std::size_t k = 0; k < d.box_split[b] && next < chosen.size(); ++k)
        t.order.push_back({chosen[next++], "box_" + std::to_string(b + 1)});
  };

  switch (phase) {
    case Phase::Stow:
      need(d.stow_items);
      for (std::size_t i = 0; i < d.stow_items; ++i) t.manifest.push_back({ids[i], "tote"});
      t.time_limit = d.stow_time_limit;
      break;
    case Phase::Pick: {
      need(d.pick_storage_items);
      std::vector<std::string> pool;
      for (std::size_t i = 0; i < d.pick_storage_items; ++i) {
        t.manifest.push_back({ids[i], i % 2 == 0 ? "storage_a" : "storage_b"});
        pool.push_back(ids[i]);
      }
      add_order(pool);
      t.time_limit = d.pick_time_limit;
      break;
    }
    case Phase::Finals: {
      need(d.finals_storage_items + d.finals_tote_items);
      std::vector<std::string> pool;
      for (std::size_t i = 0; i < d.finals_storage_items; ++i) {
        t.manifest.push_back({ids[i], i % 2 == 0 ? "storage_a" : "storage_b"});
        pool.push_back(ids[i]);
      }
      for (std::size_t i = 0; i < d.finals_tote_items; ++i) {
        t.manifest.push_back({ids[d.finals_storage_items + i], "tote"});
        pool.push_back(ids[d.finals_storage_items + i]);
      }
      add_order(pool);
      t.time_limit = d.finals_time_limit;
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------- corpus

std::vector<CorpusScene> read_corpus(std::istream& is) {
  std::vector<CorpusScene> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const Json j = Json::parse(line);
      CorpusScene s;
      s.id = j.at("scene").get<int>();
      s.seed = j.at("seed").get<std::uint64_t>();
      s.items = j.at("items").get<std::vector<std::string>>();
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw LogParseError(n, e.what());
    }
  }
  return out;
}

std::vector<CorpusScene> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  return read_corpus(in);
}

void write_corpus(std::ostream& os, const std::vector<CorpusScene>& scenes) {
  for (const auto& s : scenes)
    os << Json{{"scene", s.id}, {"clutter", s.items.size()}, {"seed", s.seed}, {"items", s.items}}.dump() << '\n';
}

namespace {

TaskSpec scene_task(const CorpusScene& scene) {
  TaskSpec t;
  for (const auto& id : scene.items) t.manifest.push_back({id, "tote"});
  return t;
}

}  // namespace

std::vector<CorpusScene> generate_corpus(const Catalog& catalog, std::size_t n, std::size_t lo, std::size_t hi,
                                         std::uint64_t seed, const WorldConfig& world) {
  if (lo < 1 || hi < lo) throw PreconditionError("generate_corpus: bad clutter range");
  auto shared = std::make_shared<const Catalog>(catalog);
  std::vector<CorpusScene> out;
  RngStream rng(seed, "corpus");
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t count = lo + k % (hi - lo + 1);
    for (int tries = 0;; ++tries) {
      CorpusScene s;
      s.id = static_cast<int>(k);
      s.seed = rng.next_u64() >> 11;
      auto ids = shuffled_ids(catalog, rng);
      if (count > ids.size()) throw PreconditionError("generate_corpus: catalog too small");
      s.items.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(count));
      try {
        (void)spawn_scene(scene_task(s), shared, default_layout(), world, s.seed);
      } catch (const PlacementError&) {
        if (tries > 100) throw;
        continue;
      }
      out.push_back(std::move(s));
      break;
    }
  }
  return out;
}

double evaluate_scene(const CorpusScene& scene, std::shared_ptr<const Catalog> catalog,
                      const PerceptionParams& perception, const WorldConfig& world) {
  const WorldState w = spawn_scene(scene_task(scene), std::move(catalog), default_layout(), world, scene.seed);
  const std::size_t tote = w.require_container("tote");
  const CameraPose top = viewpoints_for(w, tote).front();
  RngStream rng(scene.seed, "corpus_eval");
  const auto percepts = segment_scene(w, top, perception, rng);
  return scene_f_beta(w, top, percepts, 0.5, perception.lattice_pitch);
}

std::vector<double> evaluate_corpus(const std::vector<CorpusScene>& scenes, std::shared_ptr<const Catalog> catalog,
                                    const PerceptionParams& perception, const WorldConfig& world) {
  std::vector<double> out(scenes.size(), 0.0);
  const auto n = static_cast<std::ptrdiff_t>(scenes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = evaluate_scene(scenes[static_cast<std::size_t>(i)], catalog, perception, world);
  return out;
}

}  // namespace binpick
