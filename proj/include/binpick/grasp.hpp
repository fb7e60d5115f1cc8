#pragma once

#include "binpick/grasp_types.hpp"
#include "binpick/perception.hpp"
#include "binpick/types.hpp"
#include "binpick/world.hpp"

#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace binpick {

struct GraspScoringParams {
  double w_boundary = 0.75;
  double w_curvature = 0.25;
  double penalty_cap = 0.20;
  double height_penalty_max = 0.10;
  double wall_angle_penalty_max = 0.10;
  /// Approach tilt from vertical beyond which a wall-facing grasp is penalised.
  double wall_tilt_threshold = std::numbers::pi / 9.0;
  double diversity_min_dist = 0.025;
  std::size_t min_valid_points = 10;
  double neighbor_radius = 0.010;
  /// A point whose neighbours leave an angular gap wider than this lies on the
  /// boundary (neighbours subtend less than 270 degrees).
  double boundary_max_gap = std::numbers::pi / 2.0;
  /// Points closer than this to the boundary are never candidates.
  double min_boundary_dist = 0.010;
  std::size_t max_candidates = 3;
};

/// Invariant violations (weights sum to one, penalty split within the cap).
std::vector<std::string> check_scoring_params(const GraspScoringParams& params);

enum class Execution { Serial, Parallel };

/// Per-point geometry of a depth-valid segment.
struct SurfaceFeatures {
  std::vector<Vec3> normals;
  std::vector<char> degenerate;      // fewer than 4 points or collinear neighbourhood
  std::vector<char> boundary;
  std::vector<double> boundary_distance;  // metres to the nearest boundary point
  double max_boundary_distance = 0.0;
  std::vector<double> curvature;     // 1 flat .. 0 sharp
  std::vector<std::size_t> neighbor_count;
};

/// Normals, boundary flags, boundary distances and curvature. The parallel and
/// serial paths produce bit-identical results.
SurfaceFeatures compute_surface_features(std::span<const Vec3> points, const GraspScoringParams& params,
                                         Execution exec = Execution::Parallel);

std::vector<Vec3> depth_valid_points(std::span<const SurfacePoint> points);

/// Distance from p to the nearest boundary point over the segment maximum.
/// Throws StrategyInvalid when the segment is too small or all boundary.
double boundary_distance_norm(std::span<const Vec3> segment, const Vec3& p, const GraspScoringParams& params);

/// 1 - mean neighbour-normal deviation / 90 degrees. Throws StrategyInvalid for
/// a degenerate neighbourhood.
double curvature_score(std::span<const Vec3> segment, const Vec3& p, const GraspScoringParams& params);

/// Task penalties for one point: container-relative height plus wall-facing tilt.
struct Penalty {
  double height = 0.0;
  double wall_angle = 0.0;
  double total() const { return height + wall_angle; }
};
Penalty grasp_penalty(const Vec3& position, const Vec3& approach, const Container& container,
                      const GraspScoringParams& params);

/// Scores every depth-valid point at least min_boundary_dist from the
/// boundary: 0.75 boundary + 0.25 curvature minus penalties, clipped at 0.
/// Sorted by score (rounded to 1e-9) descending, then position ascending.
std::vector<GraspCandidate> score_candidates(std::span<const Vec3> points, const Container& container,
                                             const GraspScoringParams& params);
std::vector<GraspCandidate> score_candidates_serial(std::span<const Vec3> points, const Container& container,
                                                    const GraspScoringParams& params);

/// Greedy: best first, then each next-best at least min_dist from all chosen.
std::vector<GraspCandidate> select_diverse(std::span<const GraspCandidate> ranked, std::size_t k, double min_dist);

GraspCandidate centroid_grasp(std::span<const SurfacePoint> points);

GraspCandidate rgb_centroid_grasp(const SegmentPercept& percept, const CameraPose& camera,
                                  const Container& container);

struct PoseEstimate {
  double yaw = 0.0;  // [0, pi)
  bool low_confidence = false;
};

/// First principal axis of the planar point distribution.
PoseEstimate pose_pca(std::span<const SurfacePoint> points);

/// Strategy chain surface-normals -> centroid -> rgb-centroid, starting at the
/// item's forced strategy when set. Never fails for a non-empty percept.
GraspPlan synthesize(const SegmentPercept& percept, const Container& container, const ItemSpec& item_meta,
                     const GraspScoringParams& params);

}  // namespace binpick
