#pragma once

#include "binpick/fbeta.hpp"
#include "binpick/rng.hpp"
#include "binpick/types.hpp"
#include "binpick/world.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace binpick {

enum class View { TopFull, CloseupLeft, CloseupRight, SideReclassify };

std::string_view to_string(View v);

struct CameraPose {
  Vec3 position = Vec3::Zero();
  View view = View::TopFull;
  std::size_t container = 0;  // ignored for SideReclassify
};

struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  bool depth_valid = true;
  PointKey key = 0;
};

struct SegmentPercept {
  std::string label;
  double confidence = 0.0;
  std::vector<SurfacePoint> points;
  std::size_t pixel_area = 0;
  Vec3 centroid_rgb = Vec3::Zero();  // colour-segment centre at container-top height

  // Simulator ground truth for calibration and logging only.
  std::size_t source_instance = 0;
  double quality = 1.0;
};

/// Linear interpolation between knots, clamped at both ends.
struct PiecewiseLinear {
  std::vector<std::pair<double, double>> knots;

  double operator()(double x) const;
  bool non_increasing() const;
  bool non_decreasing() const;
};

struct PerceptionParams {
  PiecewiseLinear f_half_by_clutter{{{1.0, 0.85}, {20.0, 0.45}}};
  double confusion_prob = 0.03;
  PiecewiseLinear miss_prob_by_clutter{{{1.0, 0.0}, {20.0, 0.10}}};
  double mask_erosion_fraction = 0.3;
  double quality_sd = 0.08;
  double lattice_pitch = 0.005;       // metres between surface samples
  double closeup_clutter_factor = 0.5;
  double side_min_confidence = 0.3;

  /// Perfect segmentation: F0.5 of 1 everywhere, no misses or confusion.
  static PerceptionParams noiseless();
};

/// Visible items in a view of one container, with clutter-dependent misses,
/// label confusion and mask mislocalisation. Output is sorted by confidence
/// (descending) then label.
std::vector<SegmentPercept> segment_scene(const WorldState& world, const CameraPose& camera,
                                          const PerceptionParams& params, RngStream& rng);

/// Ground-truth visible top-surface lattice of one instance; empty when fully
/// occluded.
std::vector<SurfacePoint> visible_surface(const WorldState& world, std::size_t instance, double pitch);

/// Instances of the camera's container that fall inside the view.
std::vector<std::size_t> items_in_view(const WorldState& world, const CameraPose& camera);

double effective_clutter(const WorldState& world, const CameraPose& camera, const PerceptionParams& params);

/// Mean per-label F-beta of a segmentation against the visible ground truth,
/// over the union of true and predicted labels.
double scene_f_beta(const WorldState& world, const CameraPose& camera, std::span<const SegmentPercept> percepts,
                    double beta, double pitch);

/// [top_full, closeup_left, closeup_right] for a tote or storage compartment.
std::vector<CameraPose> viewpoints_for(const WorldState& world, std::size_t container);

/// Wrist pose that holds a grasped item in front of the side camera.
Pose side_camera_wrist_pose();

/// Second visual classification of the held item against weight-matched
/// candidates. Returns nullopt when no candidate is accepted.
std::optional<std::string> classify_held_item(const WorldState& world, std::span<const std::string> candidates,
                                              const PerceptionParams& params, RngStream& rng);

}  // namespace binpick
