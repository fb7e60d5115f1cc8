#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace binpick {

/// Counter-based random stream. Value k of a stream is a pure function of
/// (seed, name, k), so streams can be re-seeded or replayed independently and
/// the output does not depend on the standard library's distributions.
class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::string_view name);

  std::uint64_t next_u64();
  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi);
  /// Box-Muller; consumes two counter values per call.
  double normal(double mean, double stddev);
  bool bernoulli(double p);
  /// Uniform index in [0, n). n must be > 0.
  std::size_t index(std::size_t n);

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

/// The per-subsystem streams owned by a simulated world.
struct RngStreams {
  RngStreams() = default;
  explicit RngStreams(std::uint64_t seed);

  RngStream placement;
  RngStream grasp;
  RngStream perception;
  RngStream scale;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace binpick
