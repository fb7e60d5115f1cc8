#pragma once

#include "binpick/config.hpp"
#include "binpick/orchestrator.hpp"
#include "binpick/world.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace test {

using namespace binpick;

inline ItemSpec item(const std::string& id, double mass_g, Vec3 bbox_mm = Vec3(100, 80, 40),
                     Tool tool = Tool::Suction, double p = 1.0) {
  ItemSpec s;
  s.id = id;
  s.mass_g = mass_g;
  s.bbox_mm = bbox_mm;
  s.suckable = tool == Tool::Suction;
  s.grippable = tool == Tool::Gripper;
  s.preferred_tool = tool;
  s.tool_success_prob = tool == Tool::Suction ? std::array<double, 2>{p, 0.0} : std::array<double, 2>{0.0, p};
  s.drop_prob = 0.0;
  return s;
}

inline std::shared_ptr<const Catalog> catalog(std::vector<ItemSpec> items) {
  return std::make_shared<const Catalog>(std::move(items));
}

inline std::filesystem::path config_dir() { return BINPICK_CONFIG_DIR; }

inline const Config& default_config() {
  static const Config cfg = load_config(config_dir() / "default.json");
  return cfg;
}

inline WorldConfig exact_world() {
  WorldConfig w;
  w.scale_noise_g = 0.0;
  w.double_pick_prob = 0.0;
  w.drop_prob_scale = 0.0;
  return w;
}

inline TaskSpec stow_spec(const std::vector<std::string>& ids) {
  TaskSpec t;
  t.phase = Phase::Stow;
  for (const auto& id : ids) t.manifest.push_back({id, "tote"});
  return t;
}

/// A flat square patch of lattice points.
inline std::vector<Vec3> grid(int n, double pitch = 0.005, Vec3 origin = Vec3(0.1, 0.1, 0.2)) {
  std::vector<Vec3> out;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out.push_back(origin + Vec3(i * pitch, j * pitch, 0.0));
  return out;
}

inline std::vector<SurfacePoint> surface(const std::vector<Vec3>& pts, bool valid = true) {
  std::vector<SurfacePoint> out;
  for (std::size_t k = 0; k < pts.size(); ++k) out.push_back({pts[k], valid, k});
  return out;
}

inline Container tote() {
  for (const auto& c : default_layout())
    if (c.id == "tote") return c;
  return {};
}

}  // namespace test
