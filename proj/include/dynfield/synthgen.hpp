#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dynfield/camera.hpp"
#include "dynfield/dataset.hpp"
#include "dynfield/image.hpp"
#include "dynfield/vec.hpp"

namespace dynfield::synthgen {

enum class HitKind { None, Ground, Stadium, Player, Ball };
inline bool is_dynamic(HitKind k) { return k == HitKind::Player || k == HitKind::Ball; }

struct PlayerParams {
  Vec3d start{0, 0, 0};       // root position on the ground plane
  bool circular = true;       // circular walk vs straight line
  double path_radius = 1.2;   // circle radius, or line length when !circular
  double path_turns = 0.75;   // revolutions (or back-and-forth cycles) over the clip
  double heading = 0.0;       // initial heading, radians
  double limb_freq = 2.0;     // limb swings per second
  double limb_amp = 0.55;     // radians
  Vec3d shirt{0.92, 0.92, 0.95};
  Vec3d skin{0.85, 0.62, 0.48};
};

struct BallParams {
  Vec3d start{0.5, 0.0, 0.3};  // ground-contact point of the ball at t=0
  Vec3d velocity{3.5, 4.2, 1.5};
  double radius = 0.11;
  Vec3d color_a{0.95, 0.95, 0.95};
  Vec3d color_b{0.15, 0.15, 0.15};
};

struct Actor {
  enum class Kind { Player, Ball };
  Kind kind = Kind::Player;
  PlayerParams player;
  BallParams ball;
};

struct Sphere {
  Vec3d center;
  double radius;
};
struct Capsule {
  Vec3d a, b;  // axis endpoints
  double radius;
};

// Posed geometry of an actor at a normalized time.
struct ActorState {
  std::vector<Sphere> spheres;
  std::vector<Capsule> capsules;
  Vec3d albedo_primary;
  Vec3d albedo_secondary;
  Actor::Kind kind;
};

struct StadiumBox {
  Vec3d min, max;
  Vec3d color;
};

struct SceneSpec {
  double half_length = 52.5;  // field half-extent along x, scene meters
  double half_width = 34.0;   // along z
  double duration_s = 1.0;    // clip length mapped to t in [0,1]

  Vec3d grass_a{0.13, 0.42, 0.16};
  Vec3d grass_b{0.11, 0.36, 0.13};   // checker modulation
  Vec3d line_color{0.90, 0.90, 0.90};
  double line_width = 0.15;
  double checker_size = 6.0;
  Vec3d apron_color{0.24, 0.24, 0.27};

  std::vector<StadiumBox> stadium;
  Vec3d light_dir{-0.35, -1.0, -0.25};  // toward the scene, negative y
  double ambient = 0.35;
  Vec3d sky{0.58, 0.72, 0.93};

  std::vector<Actor> actors;
};

// Single player at the center shooting a ball.
SceneSpec single_player_scene();
// Several players and balls across the field.
SceneSpec players_scene();

SceneSpec scene_from_json(const std::string& json_text);

enum class RigKind { Closeup, Broadcast, Stadium };

struct CameraRigSpec {
  RigKind kind = RigKind::Closeup;
  int count = 30;
  double radius = 4.2;
  double height = 1.9;
  Vec3d look_at{0, 1.0, 0};
  int width = 96;
  int height_px = 72;
  double hfov_deg = 55.0;
  // Held-out cameras flagged eval-only in the export.
  int eval_count = 1;
  double eval_radius = 4.2;
  double eval_height = 1.9;
  int eval_width = 96;
  int eval_height_px = 72;
  double eval_hfov_deg = 55.0;
};

CameraRigSpec default_rig(RigKind kind);
std::optional<RigKind> rig_from_name(const std::string& name);

// Cameras evenly spaced on a circle, aimed at the look-at point; eval cameras
// are appended with ids after the training ones.
std::vector<CameraModel> build_rig(const CameraRigSpec& spec);

// Posed primitives at normalized time t. The ball follows a ballistic arc
// with gravity (0,-9.8,0) m/s^2, reflecting off the ground with restitution
// 0.6; player limbs oscillate sinusoidally around a parametric root path.
ActorState actor_state(const Actor& actor, double t, double duration_s);

struct TraceResult {
  Vec3f color;
  float depth;  // +inf on miss
  HitKind kind = HitKind::None;
  int actor_index = -1;
};

// Nearest analytic hit among ground plane, stadium boxes, and actor
// primitives, with Lambertian shading; misses return the sky color.
TraceResult trace_pixel(const SceneSpec& scene, const std::vector<ActorState>& actors,
                        const CameraModel& camera, double px, double py);

// Pixel-aligned conservative projected bounds of each dynamic actor's
// primitives (union over its bounding spheres). Actors outside the frustum
// yield no box.
std::vector<BBox> ground_truth_boxes(const SceneSpec& scene,
                                     const std::vector<ActorState>& actors,
                                     const CameraModel& camera);

std::vector<ActorState> pose_actors(const SceneSpec& scene, double t);

void render_frame(const SceneSpec& scene, const CameraModel& camera, double t, ImageBuffer& image,
                  DepthBuffer* depth, int workers = 1);

// Renders all cameras x timesteps and writes the dataset directory (images,
// PFM depth, cameras.json with eval flags and sky background, boxes.json).
// Deterministic: identical inputs give byte-identical files.
void export_dataset(const SceneSpec& scene, const std::vector<CameraModel>& cameras,
                    int num_timesteps, const std::string& out_path, int workers = 1);

}  // namespace dynfield::synthgen
