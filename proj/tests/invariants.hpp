#pragma once

#include "binpick/runlog.hpp"

#include <string>
#include <vector>

namespace test {

/// Structural audit of a run log. Returns one message per violation.
inline std::vector<std::string> audit_log(const binpick::RunLog& log) {
  std::vector<std::string> bad;
  auto at = [](std::size_t i) { return "event " + std::to_string(i) + ": "; };
  const auto& ev = log.events();

  double last_t = 0.0;
  int phase = 0;  // 0 none, 1 stow, 2 pick
  bool open_lift = false;
  std::string lift_source;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const auto& e = ev[i];
    if (i > 0 && e.time_s < last_t) bad.push_back(at(i) + "time went backwards");
    last_t = e.time_s;
    const std::string& k = e.event_kind;

    if (k == "task_start") phase = 0;
    if (k == "phase_start") {
      const std::string p = e.payload.value("phase", std::string());
      const int next = p == "stow" ? 1 : p == "pick" ? 2 : -1;
      if (next <= phase) bad.push_back(at(i) + "phase '" + p + "' does not advance");
      phase = next;
    }

    if (k == "attempt_end" || k == "task_end" || k == "select") {
      if (open_lift) bad.push_back(at(i) + "lifted attempt left without place, replace or drop_recovery");
      open_lift = false;
    }
    if (k == "attempt_end" && e.payload.value("kind", std::string()) != "failed_grasp") {
      open_lift = true;
      lift_source = e.container;
    }
    if (k == "place" || k == "replace" || k == "drop_recovery") {
      if (!open_lift) bad.push_back(at(i) + k + " without a lifted attempt");
      if (k != "place" && e.container != lift_source) bad.push_back(at(i) + k + " outside the source container");
      open_lift = false;
    }
  }
  if (open_lift) bad.emplace_back("log ends with an item still held");
  return bad;
}

}  // namespace test
