#include "binpick/grasp.hpp"

#include "binpick/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

namespace binpick {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kGapTolerance = 1e-6;
constexpr double kRadiusSlack = 1e-6;     // relative, keeps lattice neighbours at exactly r
constexpr double kCollinearRatio = 1e-6;  // second eigenvalue over largest
constexpr double kScoreQuantum = 1e-9;

template <typename Fn>
void for_each_index(std::size_t n, Execution exec, Fn&& fn) {
  const auto count = static_cast<std::ptrdiff_t>(n);
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(static_cast<std::size_t>(i));
  }
}

/// Radius neighbours via a sorted uniform grid. Lists are ascending by index.
class NeighborIndex {
 public:
  NeighborIndex(std::span<const Vec3> pts, double radius, Execution exec) : pts_(pts), radius_(radius) {
    order_.resize(pts.size());
    cells_.resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      cells_[i] = cell_of(pts[i]);
      order_[i] = i;
    }
    std::sort(order_.begin(), order_.end(),
              [&](std::size_t a, std::size_t b) { return std::tie(cells_[a], a) < std::tie(cells_[b], b); });
    sorted_cells_.resize(order_.size());
    for (std::size_t k = 0; k < order_.size(); ++k) sorted_cells_[k] = cells_[order_[k]];

    lists_.resize(pts.size());
    for_each_index(pts.size(), exec, [&](std::size_t i) { lists_[i] = query(i); });
  }

  const std::vector<std::size_t>& operator[](std::size_t i) const { return lists_[i]; }

 private:
  using Cell = std::tuple<long, long, long>;

  Cell cell_of(const Vec3& p) const {
    return {static_cast<long>(std::floor(p.x() / radius_)), static_cast<long>(std::floor(p.y() / radius_)),
            static_cast<long>(std::floor(p.z() / radius_))};
  }

  std::vector<std::size_t> query(std::size_t i) const {
    std::vector<std::size_t> out;
    const auto [cx, cy, cz] = cells_[i];
    const double r2 = radius_ * radius_ * (1.0 + kRadiusSlack);
    for (long dx = -1; dx <= 1; ++dx)
      for (long dy = -1; dy <= 1; ++dy)
        for (long dz = -1; dz <= 1; ++dz) {
          const Cell c{cx + dx, cy + dy, cz + dz};
          auto [lo, hi] = std::equal_range(sorted_cells_.begin(), sorted_cells_.end(), c);
          for (auto it = lo; it != hi; ++it) {
            const std::size_t j = order_[static_cast<std::size_t>(it - sorted_cells_.begin())];
            if (j != i && (pts_[j] - pts_[i]).squaredNorm() <= r2) out.push_back(j);
          }
        }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::span<const Vec3> pts_;
  double radius_;
  std::vector<std::size_t> order_;
  std::vector<Cell> cells_;
  std::vector<Cell> sorted_cells_;
  std::vector<std::vector<std::size_t>> lists_;
};

struct LocalNormal {
  Vec3 normal{0.0, 0.0, 1.0};
  bool degenerate = true;
};

LocalNormal estimate_normal(std::span<const Vec3> pts, std::size_t i, const std::vector<std::size_t>& nbrs) {
  LocalNormal out;
  if (nbrs.size() < 3) return out;
  Vec3 mean = pts[i];
  for (std::size_t j : nbrs) mean += pts[j];
  mean /= static_cast<double>(nbrs.size() + 1);
  Eigen::Matrix3d cov = (pts[i] - mean) * (pts[i] - mean).transpose();
  for (std::size_t j : nbrs) cov += (pts[j] - mean) * (pts[j] - mean).transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Vec3 evals = solver.eigenvalues();
  if (evals(2) <= 0.0 || evals(1) < kCollinearRatio * evals(2)) return out;
  Vec3 n = solver.eigenvectors().col(0).normalized();
  if (n.z() < 0.0) n = -n;
  out.normal = n;
  out.degenerate = false;
  return out;
}

/// Largest angular gap between neighbour directions in the tangent plane.
double max_angular_gap(std::span<const Vec3> pts, std::size_t i, const std::vector<std::size_t>& nbrs,
                       const Vec3& normal) {
  const Vec3 helper = std::abs(normal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 e1 = normal.cross(helper).normalized();
  const Vec3 e2 = normal.cross(e1);
  std::vector<double> angles;
  angles.reserve(nbrs.size());
  for (std::size_t j : nbrs) {
    const Vec3 d = pts[j] - pts[i];
    const double a = d.dot(e1), b = d.dot(e2);
    if (a == 0.0 && b == 0.0) continue;
    angles.push_back(std::atan2(b, a));
  }
  if (angles.empty()) return 2.0 * std::numbers::pi;
  std::sort(angles.begin(), angles.end());
  double gap = angles.front() + 2.0 * std::numbers::pi - angles.back();
  for (std::size_t k = 1; k < angles.size(); ++k) gap = std::max(gap, angles[k] - angles[k - 1]);
  return gap;
}

/// Unsigned angle between two normal axes, in [0, pi/2].
double axis_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), std::abs(a.dot(b)));
}

std::size_t index_of(std::span<const Vec3> segment, const Vec3& p) {
  std::size_t best = segment.size();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const double d = (segment[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  if (best == segment.size() || best_d > 1e-18) throw PreconditionError("point is not part of the segment");
  return best;
}

std::vector<GraspCandidate> score_impl(std::span<const Vec3> points, const Container& container,
                                       const GraspScoringParams& params, Execution exec) {
  if (points.size() < params.min_valid_points) throw StrategyInvalid("too few depth-valid points");
  const SurfaceFeatures f = compute_surface_features(points, params, exec);
  if (!(f.max_boundary_distance > 0.0)) throw StrategyInvalid("all points lie on the boundary");

  std::vector<GraspCandidate> all(points.size());
  std::vector<char> keep(points.size(), 0);
  for_each_index(points.size(), exec, [&](std::size_t i) {
    if (f.boundary_distance[i] < params.min_boundary_dist) return;
    const double boundary = f.boundary_distance[i] / f.max_boundary_distance;
    const double base = params.w_boundary * boundary + params.w_curvature * f.curvature[i];
    const Penalty pen = grasp_penalty(points[i], f.normals[i], container, params);
    GraspCandidate& c = all[i];
    c.position = points[i];
    c.approach = f.normals[i];
    c.strategy = Strategy::SurfaceNormals;
    c.score = std::max(0.0, base - pen.total());
    keep[i] = 1;
  });

  std::vector<GraspCandidate> ranked;
  for (std::size_t i = 0; i < all.size(); ++i)
    if (keep[i]) ranked.push_back(all[i]);
  if (ranked.empty()) throw StrategyInvalid("every point is too close to a boundary");

  std::sort(ranked.begin(), ranked.end(), [](const GraspCandidate& a, const GraspCandidate& b) {
    const auto qa = std::llround(a.score / kScoreQuantum), qb = std::llround(b.score / kScoreQuantum);
    if (qa != qb) return qa > qb;
    return std::lexicographical_compare(a.position.data(), a.position.data() + 3, b.position.data(),
                                        b.position.data() + 3);
  });
  return ranked;
}

}  // namespace

std::vector<std::string> check_scoring_params(const GraspScoringParams& p) {
  std::vector<std::string> out;
  if (std::abs(p.w_boundary + p.w_curvature - 1.0) > 1e-9) out.emplace_back("w_boundary + w_curvature must equal 1");
  if (p.height_penalty_max < 0.0 || p.wall_angle_penalty_max < 0.0) out.emplace_back("penalties must be >= 0");
  if (p.height_penalty_max + p.wall_angle_penalty_max > p.penalty_cap + 1e-12)
    out.emplace_back("height_penalty_max + wall_angle_penalty_max exceeds penalty_cap");
  if (!(p.neighbor_radius > 0.0)) out.emplace_back("neighbor_radius must be > 0");
  if (!(p.diversity_min_dist >= 0.0)) out.emplace_back("diversity_min_dist must be >= 0");
  if (p.min_valid_points < 1) out.emplace_back("min_valid_points must be >= 1");
  return out;
}

SurfaceFeatures compute_surface_features(std::span<const Vec3> pts, const GraspScoringParams& params, Execution exec) {
  const std::size_t n = pts.size();
  SurfaceFeatures f;
  f.normals.assign(n, Vec3::UnitZ());
  f.degenerate.assign(n, 1);
  f.boundary.assign(n, 1);
  f.boundary_distance.assign(n, 0.0);
  f.curvature.assign(n, 0.0);
  f.neighbor_count.assign(n, 0);
  if (n == 0) return f;

  const NeighborIndex nbrs(pts, params.neighbor_radius, exec);

  for_each_index(n, exec, [&](std::size_t i) {
    const auto ln = estimate_normal(pts, i, nbrs[i]);
    f.normals[i] = ln.normal;
    f.degenerate[i] = ln.degenerate ? 1 : 0;
    f.neighbor_count[i] = nbrs[i].size();
  });

  for_each_index(n, exec, [&](std::size_t i) {
    if (f.degenerate[i]) return;
    const double gap = max_angular_gap(pts, i, nbrs[i], f.normals[i]);
    f.boundary[i] = gap > params.boundary_max_gap + kGapTolerance ? 1 : 0;
  });

  std::vector<std::size_t> boundary_idx;
  for (std::size_t i = 0; i < n; ++i)
    if (f.boundary[i]) boundary_idx.push_back(i);

  for_each_index(n, exec, [&](std::size_t i) {
    if (f.boundary[i]) return;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t b : boundary_idx) best = std::min(best, (pts[i] - pts[b]).squaredNorm());
    f.boundary_distance[i] = boundary_idx.empty() ? 0.0 : std::sqrt(best);
  });
  f.max_boundary_distance = *std::max_element(f.boundary_distance.begin(), f.boundary_distance.end());

  for_each_index(n, exec, [&](std::size_t i) {
    if (f.degenerate[i]) return;
    double sum = 0.0;
    for (std::size_t j : nbrs[i]) sum += axis_angle(f.normals[i], f.normals[j]);
    const double mean = sum / static_cast<double>(nbrs[i].size());
    f.curvature[i] = std::clamp(1.0 - mean / kHalfPi, 0.0, 1.0);
  });
  return f;
}

std::vector<Vec3> depth_valid_points(std::span<const SurfacePoint> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (p.depth_valid) out.push_back(p.position);
  return out;
}

double boundary_distance_norm(std::span<const Vec3> segment, const Vec3& p, const GraspScoringParams& params) {
  if (segment.size() < params.min_valid_points) throw StrategyInvalid("too few depth-valid points");
  const std::size_t i = index_of(segment, p);
  const SurfaceFeatures f = compute_surface_features(segment, params, Execution::Serial);
  if (!(f.max_boundary_distance > 0.0)) throw StrategyInvalid("all points lie on the boundary");
  return f.boundary_distance[i] / f.max_boundary_distance;
}

double curvature_score(std::span<const Vec3> segment, const Vec3& p, const GraspScoringParams& params) {
  if (segment.size() < params.min_valid_points) throw StrategyInvalid("too few depth-valid points");
  const std::size_t i = index_of(segment, p);
  const SurfaceFeatures f = compute_surface_features(segment, params, Execution::Serial);
  if (f.degenerate[i]) throw StrategyInvalid("degenerate neighbourhood");
  return f.curvature[i];
}

Penalty grasp_penalty(const Vec3& position, const Vec3& approach, const Container& container,
                      const GraspScoringParams& params) {
  Penalty pen;
  const double depth = container.top_z() - position.z();
  pen.height = params.height_penalty_max * std::clamp(depth / container.wall_height, 0.0, 1.0);

  const double tilt = std::atan2(approach.head<2>().norm(), approach.z());
  if (tilt > params.wall_tilt_threshold) {
    const Vec2 lo = container.origin.head<2>();
    const Vec2 hi = lo + container.interior;
    const Vec2 xy = position.head<2>();
    const double d[4] = {xy.x() - lo.x(), hi.x() - xy.x(), xy.y() - lo.y(), hi.y() - xy.y()};
    const Vec2 outward[4] = {{-1.0, 0.0}, {1.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};
    const auto nearest = static_cast<std::size_t>(std::min_element(d, d + 4) - d);
    if (approach.head<2>().dot(outward[nearest]) > 0.0) {
      const double t = (tilt - params.wall_tilt_threshold) / (kHalfPi - params.wall_tilt_threshold);
      pen.wall_angle = params.wall_angle_penalty_max * std::clamp(t, 0.0, 1.0);
    }
  }
  return pen;
}

std::vector<GraspCandidate> score_candidates(std::span<const Vec3> points, const Container& container,
                                             const GraspScoringParams& params) {
  return score_impl(points, container, params, Execution::Parallel);
}

std::vector<GraspCandidate> score_candidates_serial(std::span<const Vec3> points, const Container& container,
                                                    const GraspScoringParams& params) {
  return score_impl(points, container, params, Execution::Serial);
}

std::vector<GraspCandidate> select_diverse(std::span<const GraspCandidate> ranked, std::size_t k, double min_dist) {
  std::vector<GraspCandidate> chosen;
  const double d2 = min_dist * min_dist;
  for (const auto& c : ranked) {
    if (chosen.size() >= k) break;
    const bool far = std::all_of(chosen.begin(), chosen.end(), [&](const GraspCandidate& s) {
      return (s.position - c.position).squaredNorm() >= d2;
    });
    if (far) chosen.push_back(c);
  }
  return chosen;
}

GraspCandidate centroid_grasp(std::span<const SurfacePoint> points) {
  Vec3 sum = Vec3::Zero();
  std::size_t n = 0;
  for (const auto& p : points)
    if (p.depth_valid) {
      sum += p.position;
      ++n;
    }
  if (n == 0) throw StrategyInvalid("no depth-valid points for a centroid grasp");
  GraspCandidate c;
  c.position = sum / static_cast<double>(n);
  c.approach = Vec3::UnitZ();
  c.strategy = Strategy::Centroid;
  return c;
}

GraspCandidate rgb_centroid_grasp(const SegmentPercept& percept, const CameraPose& camera,
                                  const Container& container) {
  if (percept.points.empty()) throw PreconditionError("rgb_centroid_grasp: empty percept");
  // Overhead views look straight down.
  (void)camera;
  GraspCandidate c;
  c.position = Vec3(percept.centroid_rgb.x(), percept.centroid_rgb.y(), container.top_z());
  c.approach = Vec3::UnitZ();
  c.strategy = Strategy::RgbCentroid;
  return c;
}

PoseEstimate pose_pca(std::span<const SurfacePoint> points) {
  if (points.size() < 2) throw PreconditionError("pose_pca: need at least two points");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : points) mean += p.position.head<2>();
  mean /= static_cast<double>(points.size());
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (const auto& p : points) {
    const Vec2 d = p.position.head<2>() - mean;
    sxx += d.x() * d.x();
    syy += d.y() * d.y();
    sxy += d.x() * d.y();
  }
  if (sxx + syy <= 0.0) throw PreconditionError("pose_pca: points are not distinct");
  const double half_trace = 0.5 * (sxx + syy);
  const double disc = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  const double major = half_trace + disc;
  const double minor = half_trace - disc;

  PoseEstimate out;
  if (minor > 0.0 && major / minor < 1.05) {
    out.low_confidence = true;
    return out;
  }
  double yaw = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  if (yaw < 0.0) yaw += std::numbers::pi;
  if (yaw >= std::numbers::pi) yaw -= std::numbers::pi;
  out.yaw = yaw;
  return out;
}

GraspPlan synthesize(const SegmentPercept& percept, const Container& container, const ItemSpec& item_meta,
                     const GraspScoringParams& params) {
  if (percept.points.empty()) throw PreconditionError("synthesize: empty percept");
  GraspPlan plan;
  plan.tool = item_meta.preferred_tool;

  PoseEstimate pose;
  try {
    pose = pose_pca(percept.points);
  } catch (const PreconditionError&) {
    pose.low_confidence = true;
  }
  plan.yaw = pose.yaw;
  plan.low_confidence_pose = pose.low_confidence;

  const Strategy start = item_meta.forced_strategy.value_or(Strategy::SurfaceNormals);
  if (start == Strategy::SurfaceNormals) {
    try {
      const auto valid = depth_valid_points(percept.points);
      const auto ranked = score_candidates(valid, container, params);
      plan.candidates = select_diverse(ranked, params.max_candidates, params.diversity_min_dist);
      plan.strategy = Strategy::SurfaceNormals;
    } catch (const StrategyInvalid&) {
    }
  }
  if (plan.candidates.empty() && start != Strategy::RgbCentroid) {
    try {
      plan.candidates = {centroid_grasp(percept.points)};
      plan.strategy = Strategy::Centroid;
    } catch (const StrategyInvalid&) {
    }
  }
  if (plan.candidates.empty()) {
    CameraPose overhead{Vec3(container.centre().x(), container.centre().y(), 0.85), View::TopFull, 0};
    plan.candidates = {rgb_centroid_grasp(percept, overhead, container)};
    plan.strategy = Strategy::RgbCentroid;
    plan.descend_until_contact = true;
  }
  for (auto& c : plan.candidates) {
    c.tool = plan.tool;
    c.gripper_yaw = plan.yaw;
  }
  return plan;
}

}  // namespace binpick
