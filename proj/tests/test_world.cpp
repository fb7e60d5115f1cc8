#include "doctest.h"
#include "support.hpp"

#include "binpick/error.hpp"

#include <cmath>
#include <numbers>

using namespace binpick;

namespace {

WorldState single_item_world(double p, double noise = 0.0) {
  auto cat = test::catalog({test::item("box", 250.0, Vec3(100, 80, 40), Tool::Suction, p)});
  WorldConfig cfg = test::exact_world();
  cfg.scale_noise_g = noise;
  WorldState w = spawn_scene(test::stow_spec({"box"}), cat, default_layout(), cfg, 3);
  const auto& tote = w.containers[w.require_container("tote")];
  w.items[0].pose.position.head<2>() = tote.centre();
  return w;
}

GraspPlan centre_plan(const WorldState& w, std::size_t copies = 1) {
  GraspPlan plan;
  GraspCandidate c;
  c.position = w.items[0].pose.position + Vec3(0, 0, w.height_of(0));
  for (std::size_t k = 0; k < copies; ++k) plan.candidates.push_back(c);
  return plan;
}

}  // namespace

TEST_SUITE("world") {
  TEST_CASE("spawn_scene is deterministic in the seed") {
    const Config& cfg = test::default_config();
    const TaskSpec spec = make_task(Phase::Finals, *cfg.catalog, cfg.tasks, 7);
    REQUIRE(spec.manifest.size() == 32);
    const WorldState a = spawn_scene(spec, cfg.catalog, default_layout(), cfg.params.world, 7);
    const WorldState b = spawn_scene(spec, cfg.catalog, default_layout(), cfg.params.world, 7);
    REQUIRE(a.items.size() == b.items.size());
    for (std::size_t i = 0; i < a.items.size(); ++i) {
      CHECK(a.items[i].spec_id == b.items[i].spec_id);
      CHECK(a.items[i].location == b.items[i].location);
      CHECK(a.items[i].pose.position == b.items[i].pose.position);
      CHECK(a.items[i].pose.yaw == b.items[i].pose.yaw);
    }
    CHECK(a.items_in(a.require_container("tote")).size() == 16);
    CHECK(conservation_holds(a));
  }

  TEST_CASE("stow scene puts every item in the tote without protrusion") {
    const Config& cfg = test::default_config();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const TaskSpec spec = make_task(Phase::Stow, *cfg.catalog, cfg.tasks, seed);
      const WorldState w = spawn_scene(spec, cfg.catalog, default_layout(), cfg.params.world, seed);
      const std::size_t tote = w.require_container("tote");
      CHECK(w.items_in(tote).size() == 20);
      for (const auto& inst : w.items) CHECK(inst.top_height <= w.containers[tote].wall_height + 1e-9);
    }
  }

  TEST_CASE("empty manifest reads as tare") {
    const Config& cfg = test::default_config();
    WorldState w = spawn_scene(TaskSpec{}, cfg.catalog, default_layout(), test::exact_world(), 1);
    CHECK(w.items.empty());
    CHECK(read_scale(w, w.require_container("tote")) == 0.0);
  }

  TEST_CASE("an overfull manifest is rejected") {
    auto cat = test::catalog({test::item("slab_a", 100, Vec3(540, 340, 200)), test::item("slab_b", 110, Vec3(540, 340, 200))});
    CHECK_THROWS_AS(spawn_scene(test::stow_spec({"slab_a", "slab_b"}), cat, default_layout(), test::exact_world(), 1),
                    PlacementError);
  }

  TEST_CASE("certain grasp succeeds and impossible grasp exhausts three probes") {
    WorldState ok = single_item_world(1.0);
    const auto out = apply_grasp(ok, centre_plan(ok), {ok.require_container("tote"), "box"}, MotionParams{});
    CHECK(out.kind == OutcomeKind::Success);
    CHECK(out.probes.size() == 1);
    CHECK(ok.gripper.held == std::vector<std::size_t>{0});
    CHECK(vacuum_state(ok));
    CHECK(conservation_holds(ok));

    WorldState bad = single_item_world(0.0);
    const double t0 = bad.clock;
    const auto fail = apply_grasp(bad, centre_plan(bad, 3), {bad.require_container("tote"), "box"}, MotionParams{});
    CHECK(fail.kind == OutcomeKind::FailedGrasp);
    CHECK(fail.probes.size() == 3);
    CHECK(fail.cause == FailureCause::GraspPoseFailure);
    CHECK(bad.gripper.held.empty());
    CHECK(bad.clock > t0);
  }

  TEST_CASE("grasp success frequency matches the item probability") {
    const int n = 10000;
    int hits = 0;
    WorldState w = single_item_world(0.72);
    const GraspPlan plan = centre_plan(w);
    const std::size_t tote = w.require_container("tote");
    for (int k = 0; k < n; ++k) {
      const auto out = apply_grasp(w, plan, {tote, "box"}, MotionParams{});
      if (out.kind == OutcomeKind::Success) {
        ++hits;
        drop_held(w, tote);
        w.items[0].pose.position.head<2>() = w.containers[tote].centre();
      }
    }
    const double rate = hits / static_cast<double>(n);
    const double half = 2.576 * std::sqrt(0.72 * 0.28 / n);
    CHECK(rate >= 0.72 - half);
    CHECK(rate <= 0.72 + half);
  }

  TEST_CASE("a candidate outside the source container is refused") {
    WorldState w = single_item_world(1.0);
    GraspPlan plan = centre_plan(w);
    plan.candidates[0].position = Vec3(0.01, 0.01, 0.2);
    CHECK_THROWS_AS(apply_grasp(w, plan, {w.require_container("tote"), "box"}, MotionParams{}), PreconditionError);
  }

  TEST_CASE("placing into a box moves its mass between scales") {
    WorldState w = single_item_world(1.0);
    const std::size_t tote = w.require_container("tote"), box = w.require_container("box_1");
    apply_grasp(w, centre_plan(w), {tote, "box"}, MotionParams{});
    const double before = read_scale(w, box);
    place_item(w, box, std::numbers::pi / 2.0);
    CHECK(read_scale(w, box) - before == doctest::Approx(250.0));
    CHECK(read_scale(w, tote) == 0.0);
    CHECK(w.items[0].pose.yaw == doctest::Approx(std::numbers::pi / 2.0));
    CHECK(w.items[0].location == box);
    CHECK(conservation_holds(w));
  }

  TEST_CASE("protrusion is flagged exactly when the top clears the wall") {
    auto cat = test::catalog({test::item("tall", 300, Vec3(100, 100, 320)), test::item("short", 200, Vec3(100, 100, 100))});
    WorldState w = spawn_scene(test::stow_spec({"short"}), cat, default_layout(), test::exact_world(), 5);
    ItemInstance tall;
    tall.spec_id = "tall";
    tall.location = w.require_container("tote");
    w.items.insert(w.items.begin(), tall);
    const std::size_t tote = w.require_container("tote"), a = w.require_container("storage_a");
    for (std::size_t i = 0; i < 2; ++i) {
      w.items[i].location = kInGripper;
      w.gripper.held = {i};
      place_item(w, a, 0.0);
      const auto& inst = w.items[i];
      CHECK(inst.protruding == (inst.top_height > w.containers[a].wall_height));
    }
    CHECK(w.items[0].protruding);
    CHECK_FALSE(w.items[1].protruding);
    CHECK(w.items_in(tote).empty());
  }

  TEST_CASE("scale readings") {
    auto cat = test::catalog({test::item("a", 250, Vec3(100, 80, 40)), test::item("b", 120, Vec3(90, 60, 30))});
    WorldConfig cfg = test::exact_world();
    WorldState w = spawn_scene(test::stow_spec({"a", "b"}), cat, default_layout(), cfg, 9);
    const std::size_t tote = w.require_container("tote");
    CHECK(read_scale(w, tote) == 370.0);
    w.config.scale_noise_g = 2.0;
    double lo = 1e9, hi = -1e9;
    for (int k = 0; k < 100000; ++k) {
      const double r = read_scale(w, tote);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    CHECK(lo >= 368.0);
    CHECK(hi <= 372.0);
    CHECK(hi - lo > 3.9);
  }

  TEST_CASE("vacuum state") {
    WorldState w = single_item_world(1.0);
    CHECK_FALSE(vacuum_state(w));
    const std::size_t tote = w.require_container("tote");
    apply_grasp(w, centre_plan(w), {tote, "box"}, MotionParams{});
    CHECK(vacuum_state(w));
    drop_held(w, tote);
    CHECK_FALSE(vacuum_state(w));
    CHECK(conservation_holds(w));
    w.gripper.active_tool = Tool::Gripper;
    CHECK_THROWS_AS(vacuum_state(w), PreconditionError);
  }

  TEST_CASE("conservation over random grasp and place sequences") {
    const Config& cfg = test::default_config();
    const TaskSpec spec = make_task(Phase::Finals, *cfg.catalog, cfg.tasks, 21);
    WorldState w = spawn_scene(spec, cfg.catalog, default_layout(), cfg.params.world, 21);
    RngStream rng(21, "conservation");
    const std::size_t tote = w.require_container("tote");
    for (int step = 0; step < 300; ++step) {
      const auto members = w.items_in(tote);
      if (members.empty()) break;
      const std::size_t inst = members[rng.index(members.size())];
      GraspPlan plan;
      GraspCandidate c;
      c.position = w.items[inst].pose.position + Vec3(0, 0, w.height_of(inst));
      plan.candidates = {c};
      plan.tool = rng.bernoulli(0.5) ? Tool::Suction : Tool::Gripper;
      const auto out = apply_grasp(w, plan, {tote, w.items[inst].spec_id}, cfg.params.motion);
      CHECK(conservation_holds(w));
      if (out.kind == OutcomeKind::Success) {
        place_item(w, 1 + rng.index(w.containers.size() - 1), 0.0);
        CHECK(conservation_holds(w));
      }
    }
  }
}
