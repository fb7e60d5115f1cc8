#include "binpick/types.hpp"

#include <array>
#include <utility>

namespace binpick {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<Rigidity, 4> kRigidity{{{Rigidity::Rigid, "rigid"},
                                            {Rigidity::SemiRigid, "semi-rigid"},
                                            {Rigidity::Deformable, "deformable"},
                                            {Rigidity::Hinged, "hinged"}}};
constexpr NameTable<VisualClass, 5> kVisual{{{VisualClass::Opaque, "opaque"},
                                             {VisualClass::PartiallyTransparent, "partially-transparent"},
                                             {VisualClass::Transparent, "transparent"},
                                             {VisualClass::Reflective, "reflective"},
                                             {VisualClass::IrAbsorbing, "ir-absorbing"}}};
constexpr NameTable<Tool, 2> kTool{{{Tool::Suction, "suction"}, {Tool::Gripper, "gripper"}}};
constexpr NameTable<Strategy, 3> kStrategy{{{Strategy::SurfaceNormals, "surface-normals"},
                                            {Strategy::Centroid, "centroid"},
                                            {Strategy::RgbCentroid, "rgb-centroid"}}};
constexpr NameTable<ContainerKind, 3> kContainer{{{ContainerKind::Tote, "tote"},
                                                  {ContainerKind::StorageCompartment, "storage_compartment"},
                                                  {ContainerKind::ShippingBox, "shipping_box"}}};
constexpr NameTable<Phase, 3> kPhase{{{Phase::Stow, "stow"}, {Phase::Pick, "pick"}, {Phase::Finals, "finals"}}};
constexpr NameTable<OutcomeKind, 5> kOutcome{{{OutcomeKind::Success, "success"},
                                              {OutcomeKind::FailedGrasp, "failed_grasp"},
                                              {OutcomeKind::DroppedItem, "dropped_item"},
                                              {OutcomeKind::WeightMismatch, "weight_mismatch"},
                                              {OutcomeKind::IncorrectReclassification, "incorrect_reclassification"}}};
constexpr NameTable<FailureCause, 4> kCause{{{FailureCause::Perception, "perception"},
                                             {FailureCause::PhysicalOcclusion, "physical_occlusion"},
                                             {FailureCause::Unreachable, "unreachable"},
                                             {FailureCause::GraspPoseFailure, "grasp_pose_failure"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> value_of(const NameTable<E, N>& table, std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Rigidity v) { return name_of(kRigidity, v); }
std::string_view to_string(VisualClass v) { return name_of(kVisual, v); }
std::string_view to_string(Tool v) { return name_of(kTool, v); }
std::string_view to_string(Strategy v) { return name_of(kStrategy, v); }
std::string_view to_string(ContainerKind v) { return name_of(kContainer, v); }
std::string_view to_string(Phase v) { return name_of(kPhase, v); }
std::string_view to_string(OutcomeKind v) { return name_of(kOutcome, v); }
std::string_view to_string(FailureCause v) { return name_of(kCause, v); }

std::optional<Rigidity> parse_rigidity(std::string_view s) { return value_of(kRigidity, s); }
std::optional<VisualClass> parse_visual_class(std::string_view s) { return value_of(kVisual, s); }
std::optional<Tool> parse_tool(std::string_view s) { return value_of(kTool, s); }
std::optional<Strategy> parse_strategy(std::string_view s) { return value_of(kStrategy, s); }
std::optional<ContainerKind> parse_container_kind(std::string_view s) { return value_of(kContainer, s); }
std::optional<Phase> parse_phase(std::string_view s) { return value_of(kPhase, s); }
std::optional<OutcomeKind> parse_outcome_kind(std::string_view s) { return value_of(kOutcome, s); }
std::optional<FailureCause> parse_failure_cause(std::string_view s) { return value_of(kCause, s); }

}  // namespace binpick
