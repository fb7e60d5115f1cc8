#pragma once

#include "binpick/types.hpp"

#include <vector>

namespace binpick {

struct GraspCandidate {
  Vec3 position = Vec3::Zero();
  Vec3 approach{0.0, 0.0, 1.0};  // unit vector pointing away from the surface
  Tool tool = Tool::Suction;
  double score = 0.0;
  Strategy strategy = Strategy::SurfaceNormals;
  double gripper_yaw = 0.0;
};

/// Ordered grasp candidates for one attempt. Suction tries up to three of them
/// in order without re-imaging; the gripper uses only the first.
struct GraspPlan {
  Strategy strategy = Strategy::SurfaceNormals;
  Tool tool = Tool::Suction;
  std::vector<GraspCandidate> candidates;
  double yaw = 0.0;
  bool low_confidence_pose = false;
  /// Descend vertically until the scales or pressure switch report contact.
  bool descend_until_contact = false;
};

}  // namespace binpick
