#pragma once

#include "binpick/types.hpp"

#include <string>
#include <vector>

namespace binpick {

struct ManifestEntry {
  std::string item;
  std::string container;  // initial container id
};

struct OrderLine {
  std::string item;
  std::string box;  // destination container id
};

/// One competition-style task. Items are unique per manifest, so a spec id
/// also identifies the physical instance.
struct TaskSpec {
  Phase phase = Phase::Stow;
  std::vector<ManifestEntry> manifest;
  std::vector<OrderLine> order;
  double time_limit = 900.0;  // seconds
};

}  // namespace binpick
