#include "doctest.h"
#include "support.hpp"

#include "binpick/error.hpp"
#include "binpick/grasp.hpp"
#include "oracle/grasp_oracle.hpp"
#include "oracle/segments.hpp"

#include <cmath>
#include <numbers>

using namespace binpick;

namespace {

Container open_box() {
  Container c;
  c.id = "tote";
  c.origin = Vec3(0.0, 0.0, 0.0);
  c.interior = Vec2(0.5, 0.5);
  c.wall_height = 0.2;
  return c;
}

std::vector<Vec3> dome(double radius, int half_n, double pitch = 0.005) {
  std::vector<Vec3> pts;
  for (int i = -half_n; i <= half_n; ++i)
    for (int j = -half_n; j <= half_n; ++j) {
      const double x = i * pitch, y = j * pitch;
      if (x * x + y * y >= radius * radius * 0.9) continue;
      pts.emplace_back(0.25 + x, 0.25 + y, 0.1 + std::sqrt(radius * radius - x * x - y * y));
    }
  return pts;
}

std::vector<Vec3> cylinder(double radius, int n, double pitch = 0.005) {
  std::vector<Vec3> pts;
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j) {
      const double x = i * pitch;
      if (std::abs(x) >= radius * 0.95) continue;
      pts.emplace_back(0.25 + x, 0.25 + j * pitch, 0.1 + std::sqrt(radius * radius - x * x));
    }
  return pts;
}

GraspCandidate at(double x, double y, double score = 0.0) {
  GraspCandidate c;
  c.position = Vec3(x, y, 0.1);
  c.score = score;
  return c;
}

}  // namespace

TEST_SUITE("grasp") {
  TEST_CASE("scoring parameter invariants") {
    GraspScoringParams p;
    CHECK(check_scoring_params(p).empty());
    CHECK(0.75 * 0.8 + 0.25 * 0.4 - (p.height_penalty_max + p.wall_angle_penalty_max) == doctest::Approx(0.50));
    p.height_penalty_max = 0.15;
    CHECK_FALSE(check_scoring_params(p).empty());
    p = {};
    p.w_boundary = 0.8;
    CHECK_FALSE(check_scoring_params(p).empty());
  }

  TEST_CASE("boundary distance on a square grid") {
    const GraspScoringParams p;
    const auto g = test::grid(21, 0.005, Vec3(0.1, 0.1, 0.1));
    CHECK(boundary_distance_norm(g, g[10 * 21 + 10], p) == doctest::Approx(1.0));
    CHECK(boundary_distance_norm(g, g[0], p) == 0.0);
    CHECK(boundary_distance_norm(g, g[5], p) == 0.0);
    for (int i = 0; i < 21; ++i)
      for (int j = 0; j < 21; ++j) {
        const int ring = std::min({i, j, 20 - i, 20 - j});
        double nearest = 1e9;
        for (int a = 0; a < 21; ++a)
          for (int b = 0; b < 21; ++b)
            if (std::min({a, b, 20 - a, 20 - b}) == 0) nearest = std::min(nearest, std::hypot(a - i, b - j));
        CHECK(boundary_distance_norm(g, g[i * 21 + j], p) == doctest::Approx(nearest / 10.0));
        CHECK(nearest == doctest::Approx(ring));
      }
  }

  TEST_CASE("boundary distance needs enough points and an interior") {
    const GraspScoringParams p;
    const auto tiny = test::grid(3);
    CHECK_THROWS_AS(boundary_distance_norm(tiny, tiny[4], p), StrategyInvalid);
    std::vector<Vec3> strip;
    for (int i = 0; i < 20; ++i) strip.emplace_back(0.1 + 0.005 * i, 0.1, 0.1);
    CHECK_THROWS_AS(boundary_distance_norm(strip, strip[10], p), StrategyInvalid);
  }

  TEST_CASE("curvature ordering") {
    const GraspScoringParams p;
    const auto plane = test::grid(15);
    CHECK(curvature_score(plane, plane[7 * 15 + 7], p) == doctest::Approx(1.0));
    const auto hemi = dome(0.03, 6);
    const auto pole = std::find_if(hemi.begin(), hemi.end(), [](const Vec3& v) {
      return std::abs(v.x() - 0.25) < 1e-9 && std::abs(v.y() - 0.25) < 1e-9;
    });
    REQUIRE(pole != hemi.end());
    const double c_pole = curvature_score(hemi, *pole, p);
    CHECK(c_pole < 1.0);
    const auto cyl = cylinder(0.03, 6);
    const auto top = std::find_if(cyl.begin(), cyl.end(), [](const Vec3& v) {
      return std::abs(v.x() - 0.25) < 1e-9 && std::abs(v.y() - 0.25) < 1e-9;
    });
    REQUIRE(top != cyl.end());
    const double c_cyl = curvature_score(cyl, *top, p);
    CHECK(c_cyl < 1.0);
    CHECK(c_pole < c_cyl);
  }

  TEST_CASE("a flat patch at the rim scores one at its centre") {
    const GraspScoringParams p;
    const Container c = open_box();
    const auto g = test::grid(21, 0.005, Vec3(0.2, 0.2, c.top_z()));
    const auto ranked = score_candidates(g, c, p);
    REQUIRE_FALSE(ranked.empty());
    CHECK(ranked.front().score == doctest::Approx(1.0));
    CHECK(ranked.front().position.isApprox(g[10 * 21 + 10]));
    CHECK(ranked.front().approach.isApprox(Vec3::UnitZ()));
  }

  TEST_CASE("score decomposes into boundary, curvature and penalties") {
    const GraspScoringParams p;
    RngStream rng(5, "decompose");
    for (int k = 0; k < 5; ++k) {
      const auto seg = oracle::random_segment(rng, 300);
      std::vector<GraspCandidate> ranked;
      try {
        ranked = score_candidates(seg.points, seg.container, p);
      } catch (const StrategyInvalid&) {
        continue;
      }
      for (std::size_t i = 0; i < std::min<std::size_t>(ranked.size(), 10); ++i) {
        const auto& c = ranked[i];
        const double b = boundary_distance_norm(seg.points, c.position, p);
        const double v = curvature_score(seg.points, c.position, p);
        const Penalty pen = grasp_penalty(c.position, c.approach, seg.container, p);
        CHECK(c.score == doctest::Approx(std::max(0.0, 0.75 * b + 0.25 * v - pen.total())).epsilon(1e-12));
        CHECK(pen.total() <= p.penalty_cap + 1e-12);
      }
    }
  }

  TEST_CASE("penalties") {
    const GraspScoringParams p;
    const Container c = open_box();
    CHECK(grasp_penalty(Vec3(0.25, 0.25, c.top_z()), Vec3::UnitZ(), c, p).total() == 0.0);
    CHECK(grasp_penalty(Vec3(0.25, 0.25, c.floor_z()), Vec3::UnitZ(), c, p).height == doctest::Approx(0.10));
    const Vec3 toward_wall = Vec3(1.0, 0.0, 0.0);
    const auto full = grasp_penalty(Vec3(0.49, 0.25, c.floor_z()), toward_wall, c, p);
    CHECK(full.wall_angle == doctest::Approx(0.10));
    CHECK(full.total() == doctest::Approx(0.20));
    CHECK(grasp_penalty(Vec3(0.49, 0.25, c.top_z()), Vec3(-1.0, 0.0, 0.0), c, p).wall_angle == 0.0);
  }

  TEST_CASE("ranking matches the brute-force oracle") {
    const GraspScoringParams p;
    RngStream rng(77, "unit_oracle");
    for (int k = 0; k < 10; ++k) {
      const auto seg = oracle::random_segment(rng, 300);
      const auto brute = oracle::brute_force_rank(seg.points, seg.container, p);
      std::vector<GraspCandidate> ranked;
      try {
        ranked = score_candidates(seg.points, seg.container, p);
      } catch (const StrategyInvalid&) {
      }
      REQUIRE(ranked.size() == brute.size());
      for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].position == brute[i].position);
        CHECK(ranked[i].score == doctest::Approx(brute[i].score).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("scores are bounded, translation invariant and thread independent") {
    const GraspScoringParams p;
    RngStream rng(13, "props");
    for (int k = 0; k < 8; ++k) {
      const auto seg = oracle::random_segment(rng, 400);
      std::vector<GraspCandidate> a;
      try {
        a = score_candidates(seg.points, seg.container, p);
      } catch (const StrategyInvalid&) {
        continue;
      }
      const auto s = score_candidates_serial(seg.points, seg.container, p);
      REQUIRE(a.size() == s.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].score >= 0.0);
        CHECK(a[i].score <= 1.0);
        CHECK(a[i].score == s[i].score);
        CHECK(a[i].position == s[i].position);
      }
      const auto fs = compute_surface_features(seg.points, p, Execution::Serial);
      const auto fp = compute_surface_features(seg.points, p, Execution::Parallel);
      CHECK(fs.boundary_distance == fp.boundary_distance);
      CHECK(fs.curvature == fp.curvature);

      const Vec3 shift(0.04, -0.03, 0.0);
      std::vector<Vec3> moved;
      for (const auto& v : seg.points) moved.push_back(v + shift);
      Container c2 = seg.container;
      c2.origin += shift;
      const auto b = score_candidates(moved, c2, p);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i].score == doctest::Approx(a[i].score).epsilon(1e-9));
    }
  }

  TEST_CASE("select_diverse") {
    const std::vector<GraspCandidate> far{at(0.1, 0.1, 0.9), at(0.2, 0.1, 0.8), at(0.1, 0.2, 0.7)};
    CHECK(select_diverse(far, 3, 0.025).size() == 3);
    const std::vector<GraspCandidate> tight{at(0.1, 0.1, 0.9), at(0.105, 0.1, 0.8), at(0.1, 0.11, 0.7)};
    CHECK(select_diverse(tight, 3, 0.025).size() == 1);

    RngStream rng(3, "diverse");
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<GraspCandidate> ranked;
      const std::size_t n = 1 + rng.index(40);
      for (std::size_t i = 0; i < n; ++i) ranked.push_back(at(rng.uniform(0, 0.1), rng.uniform(0, 0.1), 1.0 - 0.01 * i));
      const auto out = select_diverse(ranked, 3, 0.025);
      CHECK(out.size() <= 3);
      CHECK_FALSE(out.empty());
      for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = i + 1; j < out.size(); ++j) CHECK((out[i].position - out[j].position).norm() >= 0.025);
      std::size_t cursor = 0;
      for (const auto& c : out) {
        while (cursor < ranked.size() && ranked[cursor].position != c.position) ++cursor;
        CHECK(cursor < ranked.size());
        ++cursor;
      }
    }
  }

  TEST_CASE("centroid grasp") {
    const auto pts = test::surface({Vec3(0, 0, 0), Vec3(0.2, 0, 0.2)});
    CHECK(centroid_grasp(pts).position.isApprox(Vec3(0.1, 0, 0.1)));
    const auto one = test::surface({Vec3(0.3, 0.2, 0.1)});
    CHECK(centroid_grasp(one).position == Vec3(0.3, 0.2, 0.1));
    auto mixed = test::surface({Vec3(0, 0, 0), Vec3(0.1, 0.1, 0.1), Vec3(9, 9, 9)});
    mixed[2].depth_valid = false;
    CHECK(centroid_grasp(mixed).position.isApprox(Vec3(0.05, 0.05, 0.05)));
    CHECK(centroid_grasp(mixed).strategy == Strategy::Centroid);
    CHECK_THROWS_AS(centroid_grasp(test::surface({Vec3(0, 0, 0)}, false)), StrategyInvalid);
  }

  TEST_CASE("rgb centroid grasp descends from the rim") {
    const Container c = open_box();
    SegmentPercept p;
    p.points = test::surface(test::grid(6), false);
    p.centroid_rgb = Vec3(0.2, 0.3, 0.0);
    const auto g = rgb_centroid_grasp(p, CameraPose{Vec3(0.25, 0.25, 0.85), View::TopFull, 0}, c);
    CHECK(g.position == Vec3(0.2, 0.3, c.top_z()));
    CHECK(g.strategy == Strategy::RgbCentroid);

    p.centroid_rgb = Vec3(0.25, 0.25, 0.0);
    const auto sym = rgb_centroid_grasp(p, CameraPose{Vec3(0.25, 0.25, 0.85), View::TopFull, 0}, c);
    CHECK(sym.position.head<2>().isApprox(Vec2(0.25, 0.25)));

    const auto plan = synthesize(p, c, test::item("clear", 100), GraspScoringParams{});
    CHECK(plan.strategy == Strategy::RgbCentroid);
    CHECK(plan.descend_until_contact);
    REQUIRE(plan.candidates.size() == 1);
  }

  TEST_CASE("synthesize falls through the strategy chain") {
    const Container c = open_box();
    const GraspScoringParams gp;
    SegmentPercept flat;
    flat.points = test::surface(test::grid(20, 0.005, Vec3(0.1, 0.1, 0.15)));
    flat.centroid_rgb = Vec3(0.15, 0.15, 0.0);
    const auto a = synthesize(flat, c, test::item("box", 100), gp);
    CHECK(a.strategy == Strategy::SurfaceNormals);
    CHECK(a.candidates.size() >= 1);
    CHECK(a.candidates.size() <= 3);
    CHECK_FALSE(a.descend_until_contact);

    ItemSpec forced = test::item("forced", 100);
    forced.forced_strategy = Strategy::RgbCentroid;
    CHECK(synthesize(flat, c, forced, gp).strategy == Strategy::RgbCentroid);
    forced.forced_strategy = Strategy::Centroid;
    CHECK(synthesize(flat, c, forced, gp).strategy == Strategy::Centroid);

    SegmentPercept strip;
    for (int i = 0; i < 20; ++i) strip.points.push_back({Vec3(0.1 + 0.005 * i, 0.1, 0.1), true, 0});
    const auto b = synthesize(strip, c, test::item("pen", 20), gp);
    CHECK(b.strategy == Strategy::Centroid);
    CHECK(b.candidates.size() == 1);

    ItemSpec grip = test::item("grip", 100, Vec3(100, 50, 40), Tool::Gripper);
    const auto g = synthesize(flat, c, grip, gp);
    CHECK(g.tool == Tool::Gripper);
    for (const auto& cand : g.candidates) CHECK(cand.tool == Tool::Gripper);
  }

  TEST_CASE("pose_pca") {
    std::vector<Vec3> line, diag;
    for (int i = 0; i < 10; ++i) {
      line.emplace_back(0.01 * i, 0.0, 0.1);
      diag.emplace_back(0.01 * i, 0.01 * i, 0.1);
    }
    CHECK(pose_pca(test::surface(line)).yaw == doctest::Approx(0.0));
    CHECK(pose_pca(test::surface(diag)).yaw == doctest::Approx(std::numbers::pi / 4.0));

    std::vector<Vec3> rect, scaled;
    for (int i = 0; i < 12; ++i)
      for (int j = 0; j < 4; ++j) {
        const Vec3 v(0.01 * i * std::cos(0.6) - 0.01 * j * std::sin(0.6), 0.01 * i * std::sin(0.6) + 0.01 * j * std::cos(0.6), 0);
        rect.push_back(v);
        scaled.push_back(3.0 * v);
      }
    CHECK(pose_pca(test::surface(rect)).yaw == doctest::Approx(pose_pca(test::surface(scaled)).yaw));
    CHECK(pose_pca(test::surface(rect)).yaw == doctest::Approx(0.6));
    CHECK(pose_pca(test::surface(test::grid(8))).low_confidence);
    CHECK_FALSE(pose_pca(test::surface(rect)).low_confidence);
  }
}
