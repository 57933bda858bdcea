#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "dynfield/dataset.hpp"
#include "dynfield/synthgen.hpp"
#include "test_util.hpp"

using namespace dynfield;
using namespace dynfield::synthgen;
namespace fs = std::filesystem;

namespace {

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("rig presets match the three reference camera setups") {
  auto closeup = build_rig(default_rig(RigKind::Closeup));
  auto broadcast = build_rig(default_rig(RigKind::Broadcast));
  auto stadium = build_rig(default_rig(RigKind::Stadium));

  auto count_training = [](const std::vector<CameraModel>& cams) {
    int n = 0;
    for (const auto& c : cams) n += !c.eval_only;
    return n;
  };
  auto count_eval = [](const std::vector<CameraModel>& cams) {
    int n = 0;
    for (const auto& c : cams) n += c.eval_only;
    return n;
  };

  CHECK(count_training(closeup) == 30);
  CHECK(count_training(broadcast) == 20);
  CHECK(count_training(stadium) == 30);
  CHECK(count_eval(stadium) == 6);  // close-up evaluation cameras
  CHECK(count_eval(closeup) == 1);

  for (const auto& cam : closeup) cam.validate();
  for (const auto& cam : stadium) cam.validate();

  // close-up ring sits near the player, stadium ring far out and high up
  CHECK(closeup[0].center().norm() < 10.0);
  CHECK(stadium[0].center().norm() > 80.0);
  CHECK(stadium[0].center().y > 20.0);
  // stadium eval cameras are close-up views
  CHECK(stadium.back().eval_only);
  CHECK(stadium.back().center().norm() < 10.0);
}

TEST_CASE("cameras aim at the rig target") {
  CameraRigSpec spec = default_rig(RigKind::Closeup);
  auto cams = build_rig(spec);
  for (const auto& cam : cams) {
    Vec3d to_target = (spec.look_at - cam.center()).normalized();
    Vec3d view = cam.rotate({0, 0, -1});
    CHECK(to_target.dot(view) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("actor_state: a resting ball stays put") {
  Actor ball;
  ball.kind = Actor::Kind::Ball;
  ball.ball.start = {1.0, 0.0, -2.0};
  ball.ball.velocity = {0, 0, 0};
  for (double t : {0.0, 0.3, 0.7, 1.0}) {
    ActorState st = actor_state(ball, t, 1.0);
    REQUIRE(st.spheres.size() == 1);
    CHECK(st.spheres[0].center.x == doctest::Approx(1.0));
    CHECK(st.spheres[0].center.y == doctest::Approx(ball.ball.radius));
    CHECK(st.spheres[0].center.z == doctest::Approx(-2.0));
  }
}

TEST_CASE("actor_state: dropped ball first touches ground at sqrt(2/g)") {
  Actor ball;
  ball.kind = Actor::Kind::Ball;
  ball.ball.start = {0, 1.0, 0};
  ball.ball.velocity = {0, 0, 0};
  double t_star = std::sqrt(2.0 / 9.8);

  ActorState before = actor_state(ball, t_star - 1e-4, 1.0);
  CHECK(before.spheres[0].center.y > ball.ball.radius);

  ActorState at = actor_state(ball, t_star, 1.0);
  CHECK(at.spheres[0].center.y == doctest::Approx(ball.ball.radius).epsilon(1e-6));

  // restitution 0.6: shortly after the bounce the ball moves upward
  ActorState after = actor_state(ball, t_star + 5e-3, 1.0);
  CHECK(after.spheres[0].center.y > at.spheres[0].center.y);
}

TEST_CASE("actor_state: ball height is above ground at all times") {
  Actor ball;
  ball.kind = Actor::Kind::Ball;
  ball.ball.start = {0.5, 0.0, 0.3};
  ball.ball.velocity = {3.5, 4.2, 1.5};
  for (int i = 0; i <= 200; ++i) {
    ActorState st = actor_state(ball, i / 200.0, 1.0);
    CHECK(st.spheres[0].center.y >= ball.ball.radius - 1e-9);
  }
}

TEST_CASE("actor_state: zero-speed player keeps a fixed root") {
  Actor player;
  player.kind = Actor::Kind::Player;
  player.player.path_radius = 0.0;
  player.player.start = {3, 0, -1};
  ActorState a = actor_state(player, 0.0, 1.0);
  ActorState b = actor_state(player, 0.63, 1.0);
  // head and torso identical; only limb phase differs
  CHECK((a.spheres[0].center - b.spheres[0].center).norm() < 1e-12);
  CHECK((a.capsules[0].a - b.capsules[0].a).norm() < 1e-12);
  CHECK((a.capsules[0].b - b.capsules[0].b).norm() < 1e-12);
  // legs swing
  CHECK((a.capsules[1].b - b.capsules[1].b).norm() > 1e-4);
}

TEST_CASE("trace_pixel: a ray with no geometry above returns sky at infinite depth") {
  SceneSpec scene = single_player_scene();
  auto actors = pose_actors(scene, 0.0);
  CameraModel cam;
  cam.id = 0;
  cam.width = 32;
  cam.height = 32;
  set_intrinsics_from_hfov(cam, 60);
  // view direction +Y: straight up from above the stands
  cam.c2w = {1, 0, 0, 0, 0, 0, -1, 40, 0, 1, 0, 0, 0, 0, 0, 1};
  CameraModel up = cam;
  up.validate();
  TraceResult r = trace_pixel(scene, actors, up, 16, 16);
  CHECK(r.kind == HitKind::None);
  CHECK(std::isinf(r.depth));
  CHECK(r.color.x == doctest::Approx(float(scene.sky.x)));
}

TEST_CASE("trace_pixel: straight down hits the ground at the camera height") {
  SceneSpec scene = single_player_scene();
  scene.actors.clear();
  auto actors = pose_actors(scene, 0.0);
  CameraModel cam;
  cam.id = 0;
  cam.width = 33;
  cam.height = 33;
  set_intrinsics_from_hfov(cam, 40);
  double h = 7.25;
  // looking along -Y: camera -Z axis maps to world (0,-1,0)
  cam.c2w = {1, 0, 0, 20.0, 0, 0, 1, h, 0, -1, 0, 3.0, 0, 0, 0, 1};
  cam.validate();
  TraceResult r = trace_pixel(scene, actors, cam, 16.5, 16.5);
  CHECK(r.kind == HitKind::Ground);
  CHECK(r.depth == doctest::Approx(h).epsilon(1e-9));
}

TEST_CASE("trace_pixel: ray through the ball center sees depth = distance - radius") {
  SceneSpec scene = single_player_scene();
  scene.actors.clear();
  Actor ball;
  ball.kind = Actor::Kind::Ball;
  ball.ball.start = {0, 2.0, 0};  // in the air (bottom at 2m)
  ball.ball.velocity = {0, 0, 0};
  scene.actors.push_back(ball);
  auto actors = pose_actors(scene, 0.0);
  Vec3d center = actors[0].spheres[0].center;

  CameraModel cam;
  cam.id = 0;
  cam.width = 64;
  cam.height = 64;
  set_intrinsics_from_hfov(cam, 50);
  Vec3d eye{6.0, center.y, 0.0};
  cam.c2w = look_at(eye, center);
  cam.validate();
  TraceResult r = trace_pixel(scene, actors, cam, 32, 32);
  CHECK(r.kind == HitKind::Ball);
  double dist = (center - eye).norm();
  // depth is stored as float
  CHECK(r.depth == doctest::Approx(dist - ball.ball.radius).epsilon(1e-6));
}

TEST_CASE("ground_truth_boxes: actors behind the camera yield no box") {
  SceneSpec scene = single_player_scene();
  auto actors = pose_actors(scene, 0.0);
  CameraModel cam;
  cam.id = 0;
  cam.width = 64;
  cam.height = 48;
  set_intrinsics_from_hfov(cam, 55);
  // at the center, looking away from the actors toward +x; player at origin
  cam.c2w = look_at({8, 1, 0}, {30, 1, 0});
  auto boxes = ground_truth_boxes(scene, actors, cam);
  CHECK(boxes.empty());
}

TEST_CASE("ground_truth_boxes: projected ball half-width follows the sphere bound") {
  SceneSpec scene = single_player_scene();
  scene.actors.clear();
  Actor ball;
  ball.kind = Actor::Kind::Ball;
  ball.ball.start = {0, 3.0, 0};
  ball.ball.velocity = {0, 0, 0};
  scene.actors.push_back(ball);
  auto actors = pose_actors(scene, 0.0);
  Vec3d center = actors[0].spheres[0].center;
  double radius = ball.ball.radius;

  CameraModel cam;
  cam.id = 0;
  cam.width = 128;
  cam.height = 128;
  set_intrinsics_from_hfov(cam, 45);
  Vec3d eye = center + Vec3d{5.0, 0, 0};
  cam.c2w = look_at(eye, center);
  cam.validate();

  auto boxes = ground_truth_boxes(scene, actors, cam);
  REQUIRE(boxes.size() == 1);
  double d = 5.0;
  double expect_halfwidth = cam.fx * radius / std::sqrt(d * d - radius * radius);
  double got_halfwidth = (boxes[0].x1 - boxes[0].x0) / 2.0;
  CHECK(std::abs(got_halfwidth - expect_halfwidth) <= 1.5);
}

TEST_CASE("every dynamic hit lies inside the exported boxes (exhaustive 64x36)") {
  SceneSpec scene = single_player_scene();
  CameraRigSpec rig = default_rig(RigKind::Closeup);
  rig.count = 3;
  rig.eval_count = 0;
  rig.width = 64;
  rig.height_px = 36;
  auto cams = build_rig(rig);

  for (double t : {0.0, 0.5, 1.0}) {
    auto actors = pose_actors(scene, t);
    for (const auto& cam : cams) {
      auto boxes = ground_truth_boxes(scene, actors, cam);
      for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
          TraceResult r = trace_pixel(scene, actors, cam, x + 0.5, y + 0.5);
          if (!is_dynamic(r.kind)) continue;
          REQUIRE(r.actor_index >= 0);
          bool inside = false;
          for (const auto& b : boxes) inside = inside || b.contains(x, y);
          CHECK(inside);
        }
      }
    }
  }
}

TEST_CASE("export_dataset writes the expected files and round-trips the loader") {
  testutil::TempDir dir("export");
  SceneSpec scene = single_player_scene();
  CameraRigSpec rig = default_rig(RigKind::Closeup);
  rig.count = 2;
  rig.eval_count = 0;
  rig.width = 8;
  rig.height_px = 8;
  auto cams = build_rig(rig);
  export_dataset(scene, cams, 2, dir.str(), 2);

  int pngs = 0, pfms = 0;
  for (auto& e : fs::recursive_directory_iterator(dir.str())) {
    if (e.path().extension() == ".png") ++pngs;
    if (e.path().extension() == ".pfm") ++pfms;
  }
  CHECK(pngs == 4);
  CHECK(pfms == 4);
  CHECK(fs::exists(dir.path / "cameras.json"));
  CHECK(fs::exists(dir.path / "boxes.json"));

  DynamicDataset ds = load_dataset(dir.str());  // validates internally
  CHECK(ds.cameras.size() == 2);
  CHECK(ds.num_timesteps == 2);
  REQUIRE(ds.background.has_value());
}

TEST_CASE("re-export is byte-identical") {
  testutil::TempDir dir_a("det_a");
  testutil::TempDir dir_b("det_b");
  SceneSpec scene = single_player_scene();
  CameraRigSpec rig = default_rig(RigKind::Closeup);
  rig.count = 2;
  rig.eval_count = 1;
  rig.width = 16;
  rig.height_px = 12;
  auto cams = build_rig(rig);
  export_dataset(scene, cams, 2, dir_a.str(), 2);
  export_dataset(scene, cams, 2, dir_b.str(), 1);  // worker count must not matter

  for (auto& e : fs::recursive_directory_iterator(dir_a.str())) {
    if (!e.is_regular_file()) continue;
    auto rel = fs::relative(e.path(), dir_a.path);
    CHECK(file_bytes(e.path().string()) == file_bytes((dir_b.path / rel).string()));
  }
}

TEST_CASE("exported depth agrees with analytic intersections") {
  testutil::TempDir dir("depth");
  SceneSpec scene = single_player_scene();
  CameraRigSpec rig = default_rig(RigKind::Closeup);
  rig.count = 1;
  rig.eval_count = 0;
  rig.width = 32;
  rig.height_px = 24;
  auto cams = build_rig(rig);
  export_dataset(scene, cams, 1, dir.str(), 1);

  DepthBuffer d = read_pfm(frame_depth_path(dir.str(), 0, 0));
  auto actors = pose_actors(scene, 0.0);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      TraceResult r = trace_pixel(scene, actors, cams[0], x + 0.5, y + 0.5);
      if (std::isinf(r.depth))
        CHECK(std::isinf(d.at(x, y)));
      else
        CHECK(std::abs(d.at(x, y) - r.depth) < 1e-4);
    }
}

TEST_CASE("stadium rig keeps dynamic content below 2% of pixels") {
  SceneSpec scene = players_scene();
  CameraRigSpec rig = default_rig(RigKind::Stadium);
  rig.count = 4;  // a slice of the ring is representative
  rig.eval_count = 0;
  auto cams = build_rig(rig);
  REQUIRE(rig.width == 256);

  for (double t : {0.0, 1.0}) {
    auto actors = pose_actors(scene, t);
    for (const auto& cam : cams) {
      int dynamic = 0;
      for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x)
          dynamic += is_dynamic(trace_pixel(scene, actors, cam, x + 0.5, y + 0.5).kind);
      double frac = double(dynamic) / (double(cam.width) * cam.height);
      CHECK(frac < 0.02);
      CHECK(dynamic > 0);  // the players are visible
    }
  }
}

TEST_CASE("scene_from_json applies overrides and validates") {
  SceneSpec s = scene_from_json(R"({"preset":"players","half_length":20,"sky":[0.1,0.2,0.3]})");
  CHECK(s.half_length == 20.0);
  CHECK(s.sky.x == doctest::Approx(0.1));
  CHECK(s.actors.size() > 2);
  CHECK_THROWS_AS(scene_from_json(R"({"light_dir":[0,1,0]})"), std::runtime_error);
}
