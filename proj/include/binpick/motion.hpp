#pragma once

#include "binpick/types.hpp"

#include <numbers>
#include <span>
#include <variant>

namespace binpick {

/// Straight-line Cartesian timing for a gantry whose three linear axes move
/// simultaneously. There is no acceleration model; misc_overhead absorbs
/// settle and approach time at attempt granularity.
struct MotionParams {
  Vec3 workspace{1.0, 1.0, 0.9};  // metres, origin at the workspace corner
  double v_linear = 1.0;          // m/s under load
  double v_angular = 1.0;         // rad/s under load
  double plan_time = 0.02;        // s per planned motion
  double tool_change_angle = std::numbers::pi;
  double perception_time = 8.0;   // s per captured and segmented image
  double misc_overhead = 8.0;     // s per grasp attempt
  double grasp_probe_time = 3.0;  // s to seal or close at a grasp point
  double release_time = 1.5;      // s to release an item in a container
  double scale_settle_time = 1.0; // s to wait for a stable scale reading
};

bool in_workspace(const Vec3& p, const MotionParams& params);

/// plan_time + max(Chebyshev distance / v_linear, |dyaw| / v_angular).
/// Throws PreconditionError if either pose lies outside the workspace.
double move_time(const Pose& from, const Pose& to, const MotionParams& params);

double tool_change_time(const MotionParams& params);
/// Zero when no change is needed.
double tool_change_time(Tool from, Tool to, const MotionParams& params);

struct MoveAction {
  Pose from;
  Pose to;
};
struct ImageAction {};
struct ToolChangeAction {
  Tool from;
  Tool to;
};
struct DwellAction {
  double seconds;
};
using MotionAction = std::variant<MoveAction, ImageAction, ToolChangeAction, DwellAction>;

double action_time(const MotionAction& action, const MotionParams& params);

/// Sum of component times plus one misc_overhead for the attempt.
double attempt_cycle_time(std::span<const MotionAction> actions, const MotionParams& params);

}  // namespace binpick
