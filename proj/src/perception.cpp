#include "binpick/perception.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace binpick {

std::string_view to_string(View v) {
  switch (v) {
    case View::TopFull: return "top_full";
    case View::CloseupLeft: return "closeup_left";
    case View::CloseupRight: return "closeup_right";
    case View::SideReclassify: return "side_reclassify";
  }
  return "?";
}

double PiecewiseLinear::operator()(double x) const {
  if (knots.empty()) return 0.0;
  if (x <= knots.front().first) return knots.front().second;
  if (x >= knots.back().first) return knots.back().second;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    const auto& [x1, y1] = knots[k];
    if (x <= x1) {
      const auto& [x0, y0] = knots[k - 1];
      const double t = x1 > x0 ? (x - x0) / (x1 - x0) : 1.0;
      return y0 + t * (y1 - y0);
    }
  }
  return knots.back().second;
}

bool PiecewiseLinear::non_increasing() const {
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (knots[k].second > knots[k - 1].second || knots[k].first < knots[k - 1].first) return false;
  return true;
}

bool PiecewiseLinear::non_decreasing() const {
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (knots[k].second < knots[k - 1].second || knots[k].first < knots[k - 1].first) return false;
  return true;
}

PerceptionParams PerceptionParams::noiseless() {
  PerceptionParams p;
  p.f_half_by_clutter = PiecewiseLinear{{{1.0, 1.0}}};
  p.miss_prob_by_clutter = PiecewiseLinear{{{1.0, 0.0}}};
  p.confusion_prob = 0.0;
  p.quality_sd = 0.0;
  return p;
}

namespace {

/// Item-local sampling grid; cells outside [0,nx) x [0,ny) extend the same
/// lattice beyond the item footprint.
struct Lattice {
  Vec2 centre;
  double cos_yaw = 1.0;
  double sin_yaw = 0.0;
  double half_x = 0.0;
  double half_y = 0.0;
  int nx = 1;
  int ny = 1;
  double px = 0.0;
  double py = 0.0;

  Vec2 at(int i, int j) const {
    const double lx = -half_x + (i + 0.5) * px;
    const double ly = -half_y + (j + 0.5) * py;
    return centre + Vec2(cos_yaw * lx - sin_yaw * ly, sin_yaw * lx + cos_yaw * ly);
  }
  bool inside(int i, int j) const { return i >= 0 && j >= 0 && i < nx && j < ny; }
  int edge_distance(int i, int j) const { return std::min({i, nx - 1 - i, j, ny - 1 - j}); }
};

Lattice lattice_of(const WorldState& w, std::size_t inst, double pitch) {
  const Footprint fp = w.footprint(inst);
  Lattice l;
  l.centre = fp.centre;
  l.cos_yaw = std::cos(fp.yaw);
  l.sin_yaw = std::sin(fp.yaw);
  l.half_x = fp.half_x;
  l.half_y = fp.half_y;
  l.nx = std::max(1, static_cast<int>(std::lround(2.0 * fp.half_x / pitch)));
  l.ny = std::max(1, static_cast<int>(std::lround(2.0 * fp.half_y / pitch)));
  l.px = 2.0 * fp.half_x / l.nx;
  l.py = 2.0 * fp.half_y / l.ny;
  return l;
}

std::vector<char> visibility_grid(const WorldState& w, std::size_t inst, const Lattice& l) {
  std::vector<char> vis(static_cast<std::size_t>(l.nx * l.ny), 1);
  const auto& occ = w.items[inst].occluded_by;
  if (occ.empty()) return vis;
  std::vector<Footprint> covers;
  covers.reserve(occ.size());
  for (std::size_t o : occ) covers.push_back(w.footprint(o));
  for (int i = 0; i < l.nx; ++i)
    for (int j = 0; j < l.ny; ++j) {
      const Vec2 xy = l.at(i, j);
      for (const auto& f : covers)
        if (f.contains(xy, 0.0)) {
          vis[static_cast<std::size_t>(i * l.ny + j)] = 0;
          break;
        }
    }
  return vis;
}

bool depth_valid_for(VisualClass c) {
  return c != VisualClass::Transparent && c != VisualClass::IrAbsorbing;
}

struct Cell {
  int i;
  int j;
};

/// Container contents ordered for WorldState::topmost_at queries.
class TopDown {
 public:
  TopDown(const WorldState& w, std::size_t container) {
    for (std::size_t i : w.items_in(container)) {
      const Footprint f = w.footprint(i);
      items_.push_back({i, w.items[i].pose.position.z() + w.height_of(i), f.centre, std::cos(f.yaw), std::sin(f.yaw),
                        f.half_x, f.half_y});
    }
    std::stable_sort(items_.begin(), items_.end(), [](const Entry& a, const Entry& b) { return a.top > b.top; });
  }

  /// Same answer as WorldState::topmost_at.
  const std::size_t* owner(const Vec2& xy, double* top) const {
    constexpr double eps = 1e-9;
    for (const auto& e : items_) {
      const Vec2 d = xy - e.centre;
      const double lx = e.c * d.x() + e.s * d.y();
      const double ly = -e.s * d.x() + e.c * d.y();
      if (std::abs(lx) <= e.hx + eps && std::abs(ly) <= e.hy + eps) {
        *top = e.top;
        return &e.index;
      }
    }
    return nullptr;
  }

 private:
  struct Entry {
    std::size_t index;
    double top;
    Vec2 centre;
    double c, s, hx, hy;
  };
  std::vector<Entry> items_;
};

double mask_f_half(const std::vector<Cell>& predicted, const std::vector<char>& truth_grid, std::size_t truth_count,
                   const Lattice& l, int di, int dj) {
  if (predicted.empty() || truth_count == 0) return 0.0;
  std::size_t tp = 0;
  for (const auto& c : predicted) {
    const int i = c.i + di, j = c.j + dj;
    if (l.inside(i, j) && truth_grid[static_cast<std::size_t>(i * l.ny + j)]) ++tp;
  }
  return f_beta(static_cast<double>(tp) / predicted.size(), static_cast<double>(tp) / truth_count, 0.5);
}

}  // namespace

std::vector<SurfacePoint> visible_surface(const WorldState& w, std::size_t inst, double pitch) {
  const Lattice l = lattice_of(w, inst, pitch);
  const auto vis = visibility_grid(w, inst, l);
  const double top = w.items[inst].pose.position.z() + w.height_of(inst);
  const bool valid = depth_valid_for(w.spec_of(inst).visual_class);
  std::vector<SurfacePoint> out;
  for (int i = 0; i < l.nx; ++i)
    for (int j = 0; j < l.ny; ++j)
      if (vis[static_cast<std::size_t>(i * l.ny + j)]) {
        const Vec2 xy = l.at(i, j);
        out.push_back({Vec3(xy.x(), xy.y(), top), valid, make_point_key(inst, i, j)});
      }
  return out;
}

std::vector<std::size_t> items_in_view(const WorldState& w, const CameraPose& camera) {
  if (camera.view == View::SideReclassify) return w.gripper.held;
  const Container& c = w.containers.at(camera.container);
  const int axis = c.interior.x() >= c.interior.y() ? 0 : 1;
  const double mid = c.origin[axis] + 0.5 * c.interior[axis];
  std::vector<std::size_t> out;
  for (std::size_t i : w.items_in(camera.container)) {
    const double p = w.items[i].pose.position[axis];
    if (camera.view == View::CloseupLeft && p >= mid) continue;
    if (camera.view == View::CloseupRight && p < mid) continue;
    out.push_back(i);
  }
  return out;
}

double effective_clutter(const WorldState& w, const CameraPose& camera, const PerceptionParams& params) {
  if (camera.view == View::SideReclassify) return 1.0;
  double n = static_cast<double>(w.items_in(camera.container).size());
  if (camera.view != View::TopFull) n *= params.closeup_clutter_factor;
  return std::max(1.0, n);
}

std::vector<SegmentPercept> segment_scene(const WorldState& w, const CameraPose& camera,
                                          const PerceptionParams& params, RngStream& rng) {
  std::vector<SegmentPercept> out;
  if (camera.view == View::SideReclassify) return out;
  const Container& box = w.containers.at(camera.container);
  const double clutter = effective_clutter(w, camera, params);
  const double mean_quality = params.f_half_by_clutter(clutter);
  const double miss_prob = params.miss_prob_by_clutter(clutter);

  std::vector<std::string> labels;
  for (const auto& inst : w.items) labels.push_back(inst.spec_id);
  const TopDown overhead(w, camera.container);

  for (std::size_t inst : items_in_view(w, camera)) {
    const Lattice l = lattice_of(w, inst, params.lattice_pitch);
    const auto vis = visibility_grid(w, inst, l);
    std::vector<Cell> truth;
    for (int i = 0; i < l.nx; ++i)
      for (int j = 0; j < l.ny; ++j)
        if (vis[static_cast<std::size_t>(i * l.ny + j)]) truth.push_back({i, j});
    if (truth.empty()) continue;  // fully occluded
    if (rng.bernoulli(miss_prob)) continue;

    double q = mean_quality;
    if (params.quality_sd > 0.0) q += rng.normal(0.0, params.quality_sd);
    q = std::clamp(q, 0.05, 1.0);

    // Boundary-first erosion for part of the recall loss.
    std::vector<Cell> mask = truth;
    const auto n_erode = static_cast<std::size_t>(
        std::lround(params.mask_erosion_fraction * (1.0 - q) * static_cast<double>(truth.size())));
    if (n_erode > 0 && n_erode < mask.size()) {
      std::vector<std::pair<double, std::size_t>> order;
      order.reserve(mask.size());
      for (std::size_t k = 0; k < mask.size(); ++k)
        order.emplace_back(l.edge_distance(mask[k].i, mask[k].j) + 0.5 * rng.uniform(), k);
      std::sort(order.begin(), order.end());
      std::vector<char> drop(mask.size(), 0);
      for (std::size_t k = 0; k < n_erode; ++k) drop[order[k].second] = 1;
      std::vector<Cell> kept;
      for (std::size_t k = 0; k < mask.size(); ++k)
        if (!drop[k]) kept.push_back(mask[k]);
      mask = std::move(kept);
    }

    // Mislocalise the mask along a random direction until it scores q.
    const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
    int di = 0, dj = 0;
    if (q < 1.0) {
      double prev_f = mask_f_half(mask, vis, truth.size(), l, 0, 0);
      int prev_di = 0, prev_dj = 0;
      const int max_t = 2 * std::max(l.nx, l.ny);
      for (int t = 0; t <= max_t; ++t) {
        const int ci = static_cast<int>(std::lround(t * std::cos(theta)));
        const int cj = static_cast<int>(std::lround(t * std::sin(theta)));
        const double f = mask_f_half(mask, vis, truth.size(), l, ci, cj);
        if (f <= q) {
          if (t > 0 && std::abs(prev_f - q) < std::abs(f - q)) {
            di = prev_di;
            dj = prev_dj;
          } else {
            di = ci;
            dj = cj;
          }
          break;
        }
        prev_f = f;
        prev_di = ci;
        prev_dj = cj;
        di = ci;
        dj = cj;
      }
    }

    SegmentPercept p;
    p.source_instance = inst;
    p.quality = q;
    p.confidence = q;
    Vec2 sum = Vec2::Zero();
    auto emit = [&](int i, int j) {
      const Vec2 xy = l.at(i, j);
      if (!box.contains_xy(xy)) return;
      double z = box.floor_z();
      const std::size_t* owner = overhead.owner(xy, &z);
      bool valid = true;
      if (owner) {
        const VisualClass vc = w.spec_of(*owner).visual_class;
        valid = depth_valid_for(vc);
        if (vc == VisualClass::Reflective) valid = rng.bernoulli(0.5);
      }
      p.points.push_back({Vec3(xy.x(), xy.y(), z), valid, make_point_key(inst, i, j)});
      sum += xy;
    };
    for (const auto& c : mask) emit(c.i + di, c.j + dj);
    if (p.points.empty()) {
      sum.setZero();
      for (const auto& c : mask) emit(c.i, c.j);
    }
    if (p.points.empty()) continue;

    p.label = w.items[inst].spec_id;
    if (rng.bernoulli(params.confusion_prob) && labels.size() > 1) {
      std::vector<std::string> others;
      for (const auto& s : labels)
        if (s != p.label) others.push_back(s);
      p.label = others[rng.index(others.size())];
    }
    p.pixel_area = p.points.size();
    const Vec2 centre = sum / static_cast<double>(p.points.size());
    p.centroid_rgb = Vec3(centre.x(), centre.y(), box.top_z());
    out.push_back(std::move(p));
  }

  std::stable_sort(out.begin(), out.end(), [](const SegmentPercept& a, const SegmentPercept& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.label < b.label;
  });
  return out;
}

double scene_f_beta(const WorldState& w, const CameraPose& camera, std::span<const SegmentPercept> percepts,
                    double beta, double pitch) {
  std::map<std::string, std::vector<PointKey>> truth;
  std::map<std::string, std::vector<PointKey>> predicted;
  for (std::size_t inst : items_in_view(w, camera)) {
    auto pts = visible_surface(w, inst, pitch);
    if (pts.empty()) continue;
    auto& keys = truth[w.items[inst].spec_id];
    for (const auto& pt : pts) keys.push_back(pt.key);
  }
  for (const auto& p : percepts) {
    auto& keys = predicted[p.label];
    for (const auto& pt : p.points) keys.push_back(pt.key);
  }
  std::set<std::string> labels;
  for (const auto& [k, v] : truth) labels.insert(k);
  for (const auto& [k, v] : predicted) labels.insert(k);
  if (labels.empty()) return 1.0;
  double total = 0.0;
  static const std::vector<PointKey> kEmpty;
  for (const auto& label : labels) {
    const auto t = truth.find(label);
    const auto p = predicted.find(label);
    total += f_beta(p == predicted.end() ? kEmpty : p->second, t == truth.end() ? kEmpty : t->second, beta);
  }
  return total / static_cast<double>(labels.size());
}

std::vector<CameraPose> viewpoints_for(const WorldState& w, std::size_t container) {
  const Container& c = w.containers.at(container);
  if (c.kind == ContainerKind::ShippingBox) throw PreconditionError("viewpoints_for: shipping boxes are never imaged");
  const int axis = c.interior.x() >= c.interior.y() ? 0 : 1;
  const Vec2 centre = c.centre();
  Vec2 left = centre, right = centre;
  left[axis] -= 0.25 * c.interior[axis];
  right[axis] += 0.25 * c.interior[axis];
  return {
      {Vec3(centre.x(), centre.y(), 0.85), View::TopFull, container},
      {Vec3(left.x(), left.y(), 0.65), View::CloseupLeft, container},
      {Vec3(right.x(), right.y(), 0.65), View::CloseupRight, container},
  };
}

Pose side_camera_wrist_pose() { return Pose{Vec3(0.60, 0.78, 0.60), 0.0}; }

std::optional<std::string> classify_held_item(const WorldState& w, std::span<const std::string> candidates,
                                              const PerceptionParams& params, RngStream& rng) {
  if (w.gripper.held.empty()) throw PreconditionError("classify_held_item: gripper is empty");
  if (candidates.empty()) throw PreconditionError("classify_held_item: no candidates");
  const std::string& truth = w.items[w.gripper.held.front()].spec_id;

  double confidence = params.f_half_by_clutter(1.0);
  if (params.quality_sd > 0.0) confidence += rng.normal(0.0, params.quality_sd);
  confidence = std::clamp(confidence, 0.0, 1.0);

  if (rng.bernoulli(params.confusion_prob)) {
    std::vector<std::optional<std::string>> options;
    for (const auto& c : candidates)
      if (c != truth) options.emplace_back(c);
    options.emplace_back(std::nullopt);
    return options[rng.index(options.size())];
  }
  if (confidence < params.side_min_confidence) return std::nullopt;
  if (std::find(candidates.begin(), candidates.end(), truth) != candidates.end()) return truth;
  return std::nullopt;
}

}  // namespace binpick
