#include <cmath>
#include <fstream>
#include <random>

#include "doctest.h"
#include "dynfield/dataset.hpp"
#include "test_util.hpp"

using namespace dynfield;

TEST_CASE("generate_ray: principal point lies on the optical axis") {
  CameraModel cam;
  cam.id = 0;
  cam.width = 100;
  cam.height = 100;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 50;
  Ray ray = generate_ray(cam, 50, 50, 0.25);
  CHECK(ray.direction.x == doctest::Approx(0).epsilon(1e-12));
  CHECK(ray.direction.y == doctest::Approx(0).epsilon(1e-12));
  CHECK(ray.direction.z == doctest::Approx(-1).epsilon(1e-12));
  CHECK(ray.time == 0.25);
}

TEST_CASE("generate_ray: pinhole formula, off-axis pixel") {
  CameraModel cam;
  cam.width = 100;
  cam.height = 100;
  cam.fx = cam.fy = 100;
  cam.cx = cam.cy = 50;
  Ray ray = generate_ray(cam, 150, 50, 0);
  Vec3d expect = Vec3d{1, 0, -1}.normalized();
  CHECK(ray.direction.x == doctest::Approx(expect.x).epsilon(1e-12));
  CHECK(ray.direction.y == doctest::Approx(expect.y).epsilon(1e-12));
  CHECK(ray.direction.z == doctest::Approx(expect.z).epsilon(1e-12));
}

TEST_CASE("generate_ray: mirrored pixels give mirrored directions") {
  CameraModel cam;
  cam.width = 64;
  cam.height = 48;
  cam.fx = 80;
  cam.fy = 90;
  cam.cx = 32;
  cam.cy = 24;
  Ray a = generate_ray(cam, 32 + 10.5, 24 + 7.25, 0);
  Ray b = generate_ray(cam, 32 - 10.5, 24 - 7.25, 0);
  CHECK(a.direction.x == doctest::Approx(-b.direction.x).epsilon(1e-12));
  CHECK(a.direction.y == doctest::Approx(-b.direction.y).epsilon(1e-12));
  CHECK(a.direction.z == doctest::Approx(b.direction.z).epsilon(1e-12));
}

TEST_CASE("generate_ray: unit direction for random pixels and cameras") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> uni(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    CameraModel cam = testutil::ring_camera(trial % 16, 16, 1 + 3 * uni(rng), 2 * uni(rng), 64, 48,
                                            30 + 60 * uni(rng));
    for (int i = 0; i < 100; ++i) {
      Ray ray = generate_ray(cam, uni(rng) * cam.width, uni(rng) * cam.height, uni(rng));
      CHECK(std::abs(ray.direction.norm() - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("normalize_scene: single camera at the origin") {
  CameraModel cam = testutil::ring_camera(0, 1, 0, 0);
  cam.c2w[3] = cam.c2w[7] = cam.c2w[11] = 0;
  auto t = normalize_scene({cam});
  CHECK(t.scale == doctest::Approx(1.0));
  CHECK(t.translation.norm() == doctest::Approx(0.0));
}

TEST_CASE("normalize_scene: two cameras at (+-2,0,0)") {
  CameraModel a = testutil::ring_camera(0, 2, 2.0, 0.0);
  CameraModel b = testutil::ring_camera(1, 2, 2.0, 0.0);
  // ring_camera(0): angle 0 -> (2,0,0); ring_camera(1): angle pi -> (-2,0,0)
  auto t = normalize_scene({a, b});
  CHECK(t.scale == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.translation.norm() < 1e-12);
}

TEST_CASE("normalize_scene: ring of 30 cameras at radius 100") {
  std::vector<CameraModel> cams;
  for (int i = 0; i < 30; ++i) cams.push_back(testutil::ring_camera(i, 30, 100.0, 0.0));
  auto t = normalize_scene(cams);

  // independent oracle: centroid and max distance
  Vec3d centroid{0, 0, 0};
  for (const auto& c : cams) centroid += c.center();
  centroid = centroid / 30.0;
  double max_d = 0;
  for (const auto& c : cams) max_d = std::max(max_d, (c.center() - centroid).norm());
  CHECK(t.scale == doctest::Approx(1.0 / max_d).epsilon(1e-12));

  double max_norm = 0;
  for (const auto& c : cams) max_norm = std::max(max_norm, t.apply(c.center()).norm());
  CHECK(max_norm == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normalize_scene is idempotent") {
  std::vector<CameraModel> cams;
  for (int i = 0; i < 7; ++i) cams.push_back(testutil::ring_camera(i, 7, 13.0, 4.0));
  auto t1 = normalize_scene(cams);
  for (auto& c : cams) c = transform_camera(c, t1);
  auto t2 = normalize_scene(cams);
  CHECK(std::abs(t2.scale - 1.0) < 1e-9);
  CHECK(t2.translation.norm() < 1e-9);
}

TEST_CASE("save/load round-trip reproduces the dataset") {
  testutil::TempDir dir("roundtrip");
  DynamicDataset ds = testutil::random_dataset(3, 2, 24, 16, 11);
  ds.background = Vec3f{0.5f, 0.6f, 0.7f};
  save_dataset(ds, dir.str());
  DynamicDataset loaded = load_dataset(dir.str());

  REQUIRE(loaded.cameras.size() == ds.cameras.size());
  for (size_t i = 0; i < ds.cameras.size(); ++i) {
    for (int k = 0; k < 16; ++k)
      CHECK(std::abs(loaded.cameras[i].c2w[k] - ds.cameras[i].c2w[k]) < 1e-9);
    CHECK(loaded.cameras[i].fx == doctest::Approx(ds.cameras[i].fx).epsilon(1e-12));
  }
  REQUIRE(loaded.frames.size() == ds.frames.size());
  for (size_t i = 0; i < ds.frames.size(); ++i) {
    const Frame* f = loaded.frame_at(ds.frames[i].camera_id, ds.frames[i].time_index);
    REQUIRE(f != nullptr);
    CHECK(f->image.rgb == ds.frames[i].image.rgb);  // pixels exact
  }
  REQUIRE(loaded.background.has_value());
  CHECK(loaded.background->x == doctest::Approx(0.5));
  // boxes survive
  const Frame* f00 = loaded.frame_at(0, 0);
  REQUIRE(f00->boxes.size() == 1);
  CHECK(f00->boxes[0].x0 == 2);
  CHECK(f00->boxes[0].y1 == 9);
}

TEST_CASE("load_dataset: missing frame image names the path") {
  testutil::TempDir dir("missingpng");
  DynamicDataset ds = testutil::random_dataset(2, 2, 16, 12, 3);
  save_dataset(ds, dir.str());
  std::string victim = frame_image_path(dir.str(), 1, 1);
  std::filesystem::remove(victim);
  try {
    load_dataset(dir.str());
    FAIL("expected a load error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find(victim) != std::string::npos);
  }
}

TEST_CASE("load_dataset: missing cameras.json") {
  testutil::TempDir dir("nocams");
  CHECK_THROWS_WITH_AS(load_dataset(dir.str()),
                       doctest::Contains("cameras.json"), std::runtime_error);
}

TEST_CASE("camera validation rejects a non-orthonormal rotation") {
  CameraModel cam = testutil::ring_camera(0, 4, 2.0, 1.0);
  cam.c2w[0] += 0.01;
  CHECK_THROWS_AS(cam.validate(), std::runtime_error);
}

TEST_CASE("dataset validation rejects an image size mismatch") {
  DynamicDataset ds = testutil::random_dataset(2, 1, 16, 12, 5);
  ds.frames[0].image = ImageBuffer(8, 8);
  CHECK_THROWS_WITH_AS(ds.validate(), doctest::Contains("size mismatch"), std::runtime_error);
}

TEST_CASE("depth maps rescale with the scene transform") {
  testutil::TempDir dir("depthscale");
  DynamicDataset ds = testutil::random_dataset(2, 1, 16, 12, 9);
  DepthBuffer d(16, 12, 3.5f);
  ds.frames[0].depth = d;
  save_dataset(ds, dir.str());
  DynamicDataset loaded = load_dataset(dir.str());
  // the saved dataset is already normalized, so the reload transform is identity
  REQUIRE(loaded.frame_at(0, 0)->depth.has_value());
  CHECK(loaded.frame_at(0, 0)->depth->at(4, 4) == doctest::Approx(3.5f).epsilon(1e-6));
}

TEST_CASE("PFM round-trip preserves values including infinity") {
  testutil::TempDir dir("pfm");
  DepthBuffer d(5, 4);
  for (size_t i = 0; i < d.depth.size(); ++i) d.depth[i] = float(i) * 0.25f;
  d.depth[7] = std::numeric_limits<float>::infinity();
  write_pfm(dir.sub("d.pfm"), d);
  DepthBuffer r = read_pfm(dir.sub("d.pfm"));
  REQUIRE(r.width == 5);
  REQUIRE(r.height == 4);
  CHECK(r.depth == d.depth);
}
