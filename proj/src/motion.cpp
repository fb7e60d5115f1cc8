#include "binpick/motion.hpp"

#include "binpick/error.hpp"

#include <algorithm>
#include <cmath>

namespace binpick {

namespace {
constexpr double kWorkspaceTol = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;
}  // namespace

bool in_workspace(const Vec3& p, const MotionParams& params) {
  for (int k = 0; k < 3; ++k)
    if (!(p[k] >= -kWorkspaceTol && p[k] <= params.workspace[k] + kWorkspaceTol)) return false;
  return true;
}

double move_time(const Pose& from, const Pose& to, const MotionParams& params) {
  if (!in_workspace(from.position, params) || !in_workspace(to.position, params))
    throw PreconditionError("move target outside workspace");
  const double linear = (to.position - from.position).cwiseAbs().maxCoeff() / params.v_linear;
  const double angular = std::abs(to.yaw - from.yaw) / params.v_angular;
  return params.plan_time + std::max(linear, angular);
}

double tool_change_time(const MotionParams& params) {
  return params.tool_change_angle / params.v_angular;
}

double tool_change_time(Tool from, Tool to, const MotionParams& params) {
  return from == to ? 0.0 : tool_change_time(params);
}

double action_time(const MotionAction& action, const MotionParams& params) {
  return std::visit(
      Overloaded{
          [&](const MoveAction& a) { return move_time(a.from, a.to, params); },
          [&](const ImageAction&) { return params.perception_time; },
          [&](const ToolChangeAction& a) { return tool_change_time(a.from, a.to, params); },
          [&](const DwellAction& a) { return a.seconds; },
      },
      action);
}

double attempt_cycle_time(std::span<const MotionAction> actions, const MotionParams& params) {
  double total = params.misc_overhead;
  for (const auto& a : actions) total += action_time(a, params);
  return total;
}

}  // namespace binpick
