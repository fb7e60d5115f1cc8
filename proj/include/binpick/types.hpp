#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>

namespace binpick {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

enum class Rigidity { Rigid, SemiRigid, Deformable, Hinged };
enum class VisualClass { Opaque, PartiallyTransparent, Transparent, Reflective, IrAbsorbing };
enum class Tool { Suction, Gripper };
enum class Strategy { SurfaceNormals, Centroid, RgbCentroid };
enum class ContainerKind { Tote, StorageCompartment, ShippingBox };
enum class Phase { Stow, Pick, Finals };

enum class OutcomeKind { Success, FailedGrasp, DroppedItem, WeightMismatch, IncorrectReclassification };
enum class FailureCause { Perception, PhysicalOcclusion, Unreachable, GraspPoseFailure };

/// Wrist pose: position in the workspace frame plus yaw about +z.
struct Pose {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

std::string_view to_string(Rigidity v);
std::string_view to_string(VisualClass v);
std::string_view to_string(Tool v);
std::string_view to_string(Strategy v);
std::string_view to_string(ContainerKind v);
std::string_view to_string(Phase v);
std::string_view to_string(OutcomeKind v);
std::string_view to_string(FailureCause v);

std::optional<Rigidity> parse_rigidity(std::string_view s);
std::optional<VisualClass> parse_visual_class(std::string_view s);
std::optional<Tool> parse_tool(std::string_view s);
std::optional<Strategy> parse_strategy(std::string_view s);
std::optional<ContainerKind> parse_container_kind(std::string_view s);
std::optional<Phase> parse_phase(std::string_view s);
std::optional<OutcomeKind> parse_outcome_kind(std::string_view s);
std::optional<FailureCause> parse_failure_cause(std::string_view s);

}  // namespace binpick
